//! Convergence checks on the reliability index history.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StoppingCriterion {
    #[serde(rename = "BB")]
    BetaBounds,
    #[serde(rename = "BS")]
    BetaStability,
    #[serde(rename = "Co")]
    Combined,
}

impl StoppingCriterion {
    pub const ALL: [StoppingCriterion; 3] = [StoppingCriterion::BetaBounds, StoppingCriterion::BetaStability, StoppingCriterion::Combined];

    pub fn code(self) -> &'static str {
        match self {
            StoppingCriterion::BetaBounds => "BB",
            StoppingCriterion::BetaStability => "BS",
            StoppingCriterion::Combined => "Co",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.code().eq_ignore_ascii_case(s))
    }

    pub fn needs_bounds(self) -> bool {
        !matches!(self, StoppingCriterion::BetaStability)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoppingConfig {
    pub bounds_threshold: f64,
    pub stability_threshold: f64,
    pub bounds_count: usize,
    pub stability_count: usize,
    pub combined_count: usize,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self { bounds_threshold: 0.01, stability_threshold: 0.005, bounds_count: 3, stability_count: 3, combined_count: 2 }
    }
}

/// `|beta_plus - beta_minus| / |beta_hat|`; infinite when any index is not
/// finite.
pub fn beta_bounds_ratio(beta_minus: f64, beta_hat: f64, beta_plus: f64) -> f64 {
    if !(beta_minus.is_finite() && beta_hat.is_finite() && beta_plus.is_finite()) {
        return f64::INFINITY;
    }
    if beta_plus == beta_minus {
        return 0.0;
    }
    libm::fabs(beta_plus - beta_minus) / libm::fabs(beta_hat)
}

pub fn sc_beta_bounds(beta_minus: f64, beta_hat: f64, beta_plus: f64, threshold: f64) -> bool {
    beta_bounds_ratio(beta_minus, beta_hat, beta_plus) <= threshold
}

/// `|beta_i - beta_{i-1}| / |beta_i|`; infinite when either is not finite.
pub fn beta_stability_ratio(previous: f64, current: f64) -> f64 {
    if !(previous.is_finite() && current.is_finite()) {
        return f64::INFINITY;
    }
    if previous == current {
        return 0.0;
    }
    libm::fabs(current - previous) / libm::fabs(current)
}

pub fn sc_beta_stability(previous: f64, current: f64, threshold: f64) -> bool {
    beta_stability_ratio(previous, current) <= threshold
}

/// Consecutive-satisfaction bookkeeping for one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingMonitor {
    pub criterion: StoppingCriterion,
    pub config: StoppingConfig,
    previous_beta: Option<f64>,
    streak: usize,
}

/// Outcome of one monitor update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingStatus {
    pub stability_ratio: Option<f64>,
    pub bounds_ratio: Option<f64>,
    pub satisfied: bool,
    pub streak: usize,
    pub converged: bool,
}

impl StoppingMonitor {
    pub fn new(criterion: StoppingCriterion, config: StoppingConfig) -> Self {
        Self { criterion, config, previous_beta: None, streak: 0 }
    }

    fn required(&self) -> usize {
        match self.criterion {
            StoppingCriterion::BetaBounds => self.config.bounds_count,
            StoppingCriterion::BetaStability => self.config.stability_count,
            StoppingCriterion::Combined => self.config.combined_count,
        }
    }

    /// Stability ratio the next update would see for `beta`.
    pub fn peek_stability(&self, beta: f64) -> Option<f64> {
        self.previous_beta.map(|p| beta_stability_ratio(p, beta))
    }

    /// Whether the bounds need to be computed for this iteration. Under the
    /// combined criterion they only matter when stability already holds.
    pub fn wants_bounds(&self, beta: f64) -> bool {
        match self.criterion {
            StoppingCriterion::BetaBounds => true,
            StoppingCriterion::BetaStability => false,
            StoppingCriterion::Combined => self.peek_stability(beta).is_some_and(|r| r <= self.config.stability_threshold),
        }
    }

    /// Records one iteration. `bounds_ratio` is `None` when it was not
    /// computed, which counts as unsatisfied.
    pub fn update(&mut self, beta: f64, bounds_ratio: Option<f64>) -> StoppingStatus {
        let stability_ratio = self.peek_stability(beta);
        self.previous_beta = Some(beta);
        let stable = stability_ratio.is_some_and(|r| r <= self.config.stability_threshold);
        let bounded = bounds_ratio.is_some_and(|r| r <= self.config.bounds_threshold);
        let satisfied = match self.criterion {
            StoppingCriterion::BetaBounds => bounded,
            StoppingCriterion::BetaStability => stable,
            StoppingCriterion::Combined => stable && bounded,
        };
        self.streak = if satisfied { self.streak + 1 } else { 0 };
        StoppingStatus { stability_ratio, bounds_ratio, satisfied, streak: self.streak, converged: self.streak >= self.required() }
    }
}
