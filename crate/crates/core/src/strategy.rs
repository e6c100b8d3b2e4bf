//! Strategy = surrogate x estimator x learning function x stopping rule.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reliability::Estimator;
use crate::stopping::StoppingCriterion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SurrogateKind {
    Kriging,
    #[serde(rename = "PCK")]
    Pck,
    #[serde(rename = "PCE")]
    Pce,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 3] = [SurrogateKind::Kriging, SurrogateKind::Pck, SurrogateKind::Pce];

    pub fn code(self) -> &'static str {
        match self {
            SurrogateKind::Kriging => "Kriging",
            SurrogateKind::Pck => "PCK",
            SurrogateKind::Pce => "PCE",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code().eq_ignore_ascii_case(s))
    }

    pub fn has_variance(self) -> bool {
        !matches!(self, SurrogateKind::Pce)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LearningFunction {
    U,
    #[serde(rename = "EFF")]
    Eff,
    #[serde(rename = "FBR")]
    Fbr,
}

impl LearningFunction {
    pub const ALL: [LearningFunction; 3] = [LearningFunction::U, LearningFunction::Eff, LearningFunction::Fbr];

    pub fn code(self) -> &'static str {
        match self {
            LearningFunction::U => "U",
            LearningFunction::Eff => "EFF",
            LearningFunction::Fbr => "FBR",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy {
    pub surrogate: SurrogateKind,
    pub estimator: Estimator,
    pub learning: LearningFunction,
    pub stopping: StoppingCriterion,
}

impl Strategy {
    pub fn new(surrogate: SurrogateKind, estimator: Estimator, learning: LearningFunction, stopping: StoppingCriterion) -> Result<Self> {
        let s = Self { surrogate, estimator, learning, stopping };
        s.validate()?;
        Ok(s)
    }

    pub fn is_valid(&self) -> bool {
        let fbr = self.learning == LearningFunction::Fbr;
        let pce = self.surrogate == SurrogateKind::Pce;
        fbr == pce && (self.surrogate.has_variance() || !self.stopping.needs_bounds())
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidStrategy(self.id()))
        }
    }

    /// Canonical identifier such as `PCK+SuS+U+Co`.
    pub fn id(&self) -> String {
        format!("{}+{}+{}+{}", self.surrogate.code(), self.estimator.code(), self.learning.code(), self.stopping.code())
    }

    pub fn parse(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.trim().split('+').collect();
        let bad = || Error::InvalidStrategy(String::from(id));
        if parts.len() != 4 {
            return Err(bad());
        }
        let s = Self {
            surrogate: SurrogateKind::from_code(parts[0]).ok_or_else(bad)?,
            estimator: Estimator::from_code(parts[1]).ok_or_else(bad)?,
            learning: LearningFunction::from_code(parts[2]).ok_or_else(bad)?,
            stopping: StoppingCriterion::from_code(parts[3]).ok_or_else(bad)?,
        };
        s.validate()?;
        Ok(s)
    }
}

impl core::fmt::Display for Strategy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.id())
    }
}

/// Subsets of each ingredient; an empty list keeps everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyFilter {
    pub surrogates: Vec<SurrogateKind>,
    pub estimators: Vec<Estimator>,
    pub learning: Vec<LearningFunction>,
    pub stopping: Vec<StoppingCriterion>,
    /// Explicit ids; when non-empty only these are kept.
    pub ids: Vec<String>,
}

impl StrategyFilter {
    pub fn accepts(&self, s: &Strategy) -> bool {
        fn ok<T: PartialEq>(list: &[T], v: &T) -> bool {
            list.is_empty() || list.contains(v)
        }
        ok(&self.surrogates, &s.surrogate)
            && ok(&self.estimators, &s.estimator)
            && ok(&self.learning, &s.learning)
            && ok(&self.stopping, &s.stopping)
            && (self.ids.is_empty() || self.ids.iter().any(|i| Strategy::parse(i).is_ok_and(|p| p == *s)))
    }

    pub fn validate(&self) -> Result<()> {
        for id in &self.ids {
            Strategy::parse(id)?;
        }
        Ok(())
    }
}

/// Every valid strategy accepted by `filter`, in canonical order.
pub fn expand_strategy_grid(filter: &StrategyFilter) -> Vec<Strategy> {
    let mut out = Vec::new();
    for surrogate in SurrogateKind::ALL {
        for estimator in Estimator::ALL {
            for learning in LearningFunction::ALL {
                for stopping in StoppingCriterion::ALL {
                    let s = Strategy { surrogate, estimator, learning, stopping };
                    if s.is_valid() && filter.accepts(&s) {
                        out.push(s);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(expand_strategy_grid(&StrategyFilter::default()).len(), 39);
        let pce = StrategyFilter { surrogates: alloc::vec![SurrogateKind::Pce], ..Default::default() };
        assert_eq!(expand_strategy_grid(&pce).len(), 3);
        let ks = StrategyFilter {
            surrogates: alloc::vec![SurrogateKind::Kriging],
            estimators: alloc::vec![Estimator::Sus],
            ..Default::default()
        };
        assert_eq!(expand_strategy_grid(&ks).len(), 6);
    }

    #[test]
    fn ids_round_trip() {
        for s in expand_strategy_grid(&StrategyFilter::default()) {
            assert_eq!(Strategy::parse(&s.id()).unwrap(), s);
        }
        assert_eq!(Strategy::parse("PCK+SuS+U+Co").unwrap().id(), "PCK+SuS+U+Co");
        assert!(Strategy::parse("PCE+MCS+U+BS").is_err());
        assert!(Strategy::parse("PCE+MCS+FBR+BB").is_err());
        assert!(Strategy::parse("Kriging+MCS+FBR+BS").is_err());
    }
}
