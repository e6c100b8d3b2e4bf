//! The enrichment loop: fit a surrogate, estimate the failure probability on
//! it, check convergence, and add the best candidate from the estimator's
//! samples to the experimental design.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::design::ExperimentalDesign;
use crate::error::{Error, Result};
use crate::input::{lhs_sample, RandomVector};
use crate::kriging::HyperSearch;
use crate::learning::{lf_eff, lf_fbr, lf_u, select_enrichment, Objective};
use crate::reliability::{estimate, Estimator, ReliabilityResult, SolverConfig};
use crate::rng::stream;
use crate::stopping::{beta_bounds_ratio, StoppingConfig, StoppingCriterion, StoppingMonitor, StoppingStatus};
use crate::strategy::{LearningFunction, Strategy};
use crate::surrogate::{fit_surrogate, PredictScratch, PredictionMemory, SurrogateConfig, SurrogateLimitState, SurrogateModel};

const TAG_DESIGN: u64 = 1;
const TAG_ESTIMATOR: u64 = 2;
const TAG_FIT: u64 = 3;

/// Surrogate predictions shared between the estimator runs of one
/// iteration (about 50 MB at the cap).
const PREDICTION_MEMORY_CAP: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlrConfig {
    /// Estimator settings used on the surrogate.
    pub solver: SolverConfig,
    pub surrogate: SurrogateConfig,
    pub stopping: StoppingConfig,
    /// Initial design size; `max(10, 2M)` when unset.
    pub initial_size: Option<usize>,
    /// Enrichment budget; `100 + 10M` when unset.
    pub max_enrichment: Option<usize>,
    /// Candidate pool size after uniform down-sampling.
    pub pool_cap: usize,
    /// Run the global correlation-length search every this many iterations;
    /// in between only a warm-started local polish is done.
    pub full_search_every: usize,
    pub local_polish_evals: usize,
}

impl Default for AlrConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::overkill(),
            surrogate: SurrogateConfig::default(),
            stopping: StoppingConfig::default(),
            initial_size: None,
            max_enrichment: None,
            pool_cap: 5000,
            full_search_every: 10,
            local_polish_evals: 80,
        }
    }
}

impl AlrConfig {
    pub fn initial_size(&self, dim: usize) -> usize {
        self.initial_size.unwrap_or(10.max(2 * dim))
    }

    pub fn budget(&self, dim: usize) -> usize {
        self.max_enrichment.unwrap_or(100 + 10 * dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    BudgetExhausted,
    /// The surrogate or estimator failed; the trace is partial.
    Aborted,
}

impl Termination {
    pub fn code(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::BudgetExhausted => "budget_exhausted",
            Termination::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_ed: usize,
    pub beta: f64,
    pub pf: f64,
    pub cov: f64,
    /// Surrogate calls made by the estimator.
    pub estimator_calls: usize,
    /// Set when the configured estimator failed and crude Monte Carlo was used.
    pub estimator_fallback: Option<String>,
    pub beta_minus: Option<f64>,
    pub beta_plus: Option<f64>,
    pub stopping: StoppingStatus,
    pub theta: Option<Vec<f64>>,
    pub enrichment: Option<Vec<f64>>,
    pub enrichment_value: Option<f64>,
    pub learning_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlrTrace {
    pub strategy: String,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub pf: f64,
    pub beta: f64,
    pub cov: f64,
    /// True limit-state calls, initial design included.
    pub n_evals: usize,
    pub n_initial: usize,
    pub n_enriched: usize,
    pub termination: Termination,
    pub abort_reason: Option<String>,
}

struct Estimate {
    result: ReliabilityResult,
    fallback: Option<String>,
}

fn run_estimator(
    est: Estimator,
    model: &SurrogateModel,
    k_sigma: f64,
    rv: &RandomVector,
    cfg: &SolverConfig,
    seed: u64,
    memory: &mut PredictionMemory,
) -> Result<Estimate> {
    let mut g = SurrogateLimitState::with_memory(model, k_sigma, memory);
    let mut rng = stream(seed, &[TAG_ESTIMATOR]);
    match estimate(est, &mut g, rv, cfg, &mut rng) {
        Ok(result) => Ok(Estimate { result, fallback: None }),
        Err(e @ (Error::DegenerateLevels { .. } | Error::FormNotConverged(_))) if est != Estimator::Mcs => {
            let mut rng = stream(seed, &[TAG_ESTIMATOR]);
            let result = estimate(Estimator::Mcs, &mut g, rv, cfg, &mut rng)?;
            Ok(Estimate { result, fallback: Some(format!("{e}")) })
        }
        Err(e) => Err(e),
    }
}

fn learning_scores(model: &SurrogateModel, lf: LearningFunction, pop: &crate::reliability::Population) -> (Vec<f64>, Objective) {
    let mut s = PredictScratch::default();
    let n = pop.len();
    match lf {
        LearningFunction::U | LearningFunction::Eff => {
            let f = if lf == LearningFunction::U { lf_u } else { lf_eff };
            let scores = (0..n)
                .map(|i| {
                    let (m, v) = model.mean_variance(pop.x_at(i), pop.u_at(i), &mut s);
                    f(m, v)
                })
                .collect();
            (scores, if lf == LearningFunction::U { Objective::Minimize } else { Objective::Maximize })
        }
        LearningFunction::Fbr => {
            let scores = (0..n).map(|i| model.replicates(pop.u_at(i)).map_or(1.0, |r| lf_fbr(&r))).collect();
            (scores, Objective::Minimize)
        }
    }
}

/// Active-learning reliability analysis of the physical-space limit state
/// `g` under `strategy`. The initial design depends only on `seed`, so
/// strategies run with the same seed share it.
pub fn run_alr<G>(strategy: &Strategy, rv: &RandomVector, mut g: G, cfg: &AlrConfig, seed: u64) -> Result<AlrTrace>
where
    G: FnMut(&[f64]) -> f64,
{
    strategy.validate()?;
    cfg.solver.validate()?;
    if cfg.pool_cap == 0 || cfg.full_search_every == 0 {
        return Err(Error::InvalidConfig("pool cap and search period must be positive".into()));
    }
    let m = rv.dim();
    let n0 = cfg.initial_size(m);
    let budget = cfg.budget(m);
    let mut solver = cfg.solver;
    solver.archive_cap = Some(solver.archive_cap.map_or(cfg.pool_cap, |c| c.min(cfg.pool_cap)));

    let x0 = lhs_sample(n0, rv, &mut stream(seed, &[TAG_DESIGN]))?;
    let mut y0 = Vec::with_capacity(n0);
    for x in &x0 {
        let v = g(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteLimitState { value: v, point: x.clone() });
        }
        y0.push(v);
    }
    let mut ed = ExperimentalDesign::new(x0, y0)?;
    let mut monitor = StoppingMonitor::new(strategy.stopping, cfg.stopping);
    let mut memory = PredictionMemory::new(PREDICTION_MEMORY_CAP);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut theta: Option<Vec<f64>> = None;
    let mut last: Option<ReliabilityResult> = None;

    let finish = |records: Vec<IterationRecord>, last: Option<ReliabilityResult>, ed: &ExperimentalDesign, termination, reason| {
        let (pf, beta, cov) = last.as_ref().map_or((f64::NAN, f64::NAN, f64::NAN), |r| (r.pf, r.beta, r.cov));
        AlrTrace {
            strategy: strategy.id(),
            seed,
            records,
            pf,
            beta,
            cov,
            n_evals: ed.len(),
            n_initial: ed.n_initial(),
            n_enriched: ed.n_enriched(),
            termination,
            abort_reason: reason,
        }
    };

    for iteration in 1.. {
        // 1. surrogate
        let mut fit_rng = stream(seed, &[TAG_FIT, iteration as u64]);
        let full = iteration == 1 || (iteration - 1) % cfg.full_search_every == 0 || theta.is_none();
        let mut scfg = cfg.surrogate;
        let search = match (&theta, full) {
            (Some(t), false) => {
                scfg.kriging.polish_max_evals = cfg.local_polish_evals;
                scfg.pck.kriging.polish_max_evals = cfg.local_polish_evals;
                HyperSearch::Local { start: t.clone() }
            }
            (t, _) => HyperSearch::Global { warm_start: t.clone() },
        };
        let model = match fit_surrogate(strategy.surrogate, &ed, rv, &scfg, search, &mut fit_rng) {
            Ok(mdl) => mdl,
            Err(first) => {
                let mut retry = cfg.surrogate;
                for k in [&mut retry.kriging, &mut retry.pck.kriging] {
                    k.nugget *= 2.0;
                    k.max_nugget *= 2.0;
                }
                match fit_surrogate(strategy.surrogate, &ed, rv, &retry, HyperSearch::Global { warm_start: theta.clone() }, &mut fit_rng) {
                    Ok(mdl) => mdl,
                    Err(_) => return Ok(finish(records, last, &ed, Termination::Aborted, Some(format!("surrogate fit failed: {first}")))),
                }
            }
        };
        theta = model.theta();

        // 2. reliability on the surrogate mean. Every run of an iteration
        // uses the same seed; when the bounds are always needed the lower
        // bound runs first so the other two can reuse its predictions.
        memory.clear();
        let early_lo = if model.kriging().is_some() && strategy.stopping == StoppingCriterion::BetaBounds {
            Some(run_estimator(strategy.estimator, &model, -2.0, rv, &solver, seed, &mut memory))
        } else {
            None
        };
        let est = match run_estimator(strategy.estimator, &model, 0.0, rv, &solver, seed, &mut memory) {
            Ok(e) => e,
            Err(e) => return Ok(finish(records, last, &ed, Termination::Aborted, Some(format!("estimator failed: {e}")))),
        };
        let beta = est.result.beta;

        // 3. convergence
        let (mut beta_minus, mut beta_plus, mut bounds) = (None, None, None);
        if model.kriging().is_some() && monitor.wants_bounds(beta) {
            let lo = match early_lo {
                Some(lo) => lo,
                None => run_estimator(strategy.estimator, &model, -2.0, rv, &solver, seed, &mut memory),
            };
            let hi = run_estimator(strategy.estimator, &model, 2.0, rv, &solver, seed, &mut memory);
            if let (Ok(lo), Ok(hi)) = (lo, hi) {
                beta_minus = Some(lo.result.beta);
                beta_plus = Some(hi.result.beta);
                bounds = Some(beta_bounds_ratio(lo.result.beta, beta, hi.result.beta));
            }
        }
        let status = monitor.update(beta, bounds);
        let mut record = IterationRecord {
            iteration,
            n_ed: ed.len(),
            beta,
            pf: est.result.pf,
            cov: est.result.cov,
            estimator_calls: est.result.n_evals,
            estimator_fallback: est.fallback.clone(),
            beta_minus,
            beta_plus,
            stopping: status,
            theta: model.theta(),
            enrichment: None,
            enrichment_value: None,
            learning_score: None,
        };
        let population = est.result.population.clone();
        last = Some(est.result);
        if status.converged {
            records.push(record);
            return Ok(finish(records, last, &ed, Termination::Converged, None));
        }
        if ed.n_enriched() >= budget {
            records.push(record);
            return Ok(finish(records, last, &ed, Termination::BudgetExhausted, None));
        }

        // 4. enrichment
        let (scores, objective) = learning_scores(&model, strategy.learning, &population);
        let candidates: Vec<&[f64]> = (0..population.len()).map(|i| population.x_at(i)).collect();
        let pick = match select_enrichment(&candidates, &scores, objective, &ed) {
            Ok(i) => i,
            Err(e) => {
                records.push(record);
                return Ok(finish(records, last, &ed, Termination::Aborted, Some(format!("enrichment failed: {e}"))));
            }
        };
        let x_new = population.x_at(pick).to_vec();
        let y_new = g(&x_new);
        if !y_new.is_finite() {
            return Err(Error::NonFiniteLimitState { value: y_new, point: x_new });
        }
        ed.push(x_new.clone(), y_new)?;
        record.enrichment = Some(x_new);
        record.enrichment_value = Some(y_new);
        record.learning_score = Some(scores[pick]);
        records.push(record);
    }
    unreachable!("the loop only exits through return")
}
