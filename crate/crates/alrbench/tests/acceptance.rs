//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
//! criterion fails. Criteria 2 to 4 use the desk solver settings.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use alr_core::alr::{run_alr, AlrConfig, AlrTrace};
use alr_core::design::ExperimentalDesign;
use alr_core::input::{lhs_sample, MarginalDistribution as D, RandomVector};
use alr_core::kriging::{fit_kriging, KrigingConfig};
use alr_core::metrics::{metric_delta, metric_relerr, rank_strategies, RankCriterion, RankRecord, ACCURACY_THRESHOLD};
use alr_core::pce::{evaluate_basis, hyperbolic_basis};
use alr_core::pck::{fit_pck, PckConfig};
use alr_core::problems::{problem, BenchmarkProblem};
use alr_core::reliability::{estimate, Estimator, SolverConfig, StandardFn};
use alr_core::rng::stream;
use alr_core::special::{norm_cdf, norm_inv_cdf};
use alr_core::stopping::{beta_bounds_ratio, beta_stability_ratio, sc_beta_bounds, sc_beta_stability, StoppingConfig, StoppingCriterion, StoppingMonitor};
use alr_core::strategy::{expand_strategy_grid, Strategy, StrategyFilter, SurrogateKind};
use alr_core::truss::{demo_tower, Support, TowerParameters, TrussModel};
use alrbench::campaign::cell_seed;
use alrbench::config::CampaignConfig;
use rayon::prelude::*;

const SEEDS: usize = 15;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

// ---------------------------------------------------------------- helpers

fn desk_alr(max_enrichment: Option<usize>) -> AlrConfig {
    AlrConfig { solver: SolverConfig::desk(), max_enrichment, ..AlrConfig::default() }
}

fn run_seeds(id: &str, p: &BenchmarkProblem, cfg: &AlrConfig, reps: usize) -> Vec<Result<AlrTrace, String>> {
    let s = Strategy::parse(id).unwrap();
    let rv = p.input().unwrap().clone();
    let lsf = p.lsf.clone().unwrap();
    (0..reps)
        .into_par_iter()
        .map(|k| run_alr(&s, &rv, |x: &[f64]| lsf(x), cfg, cell_seed(1, p.id, k)).map_err(|e| e.to_string()))
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut v: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

struct Reproduction {
    ok: usize,
    tried: usize,
    beta_ref: f64,
    median_beta: f64,
    errors: usize,
}

impl Reproduction {
    fn summary(&self, id: &str, problem_id: u32) -> String {
        let stop = if self.tried < SEEDS { format!(", stopped after {} seeds once the verdict was fixed", self.tried) } else { String::new() };
        format!(
            "{id} on #{problem_id}: {}/{SEEDS} seeds with eps <= 0.05 (beta_ref {:.3}, median beta_hat {:.3}, {} errors{stop})",
            self.ok, self.beta_ref, self.median_beta, self.errors
        )
    }
}

/// Runs seeds in waves of one per worker and stops as soon as `need` hits
/// out of `SEEDS` can no longer be reached. A pass always sees every seed.
fn reproduction(id: &str, problem_id: u32, cfg: &AlrConfig, max_enriched: usize, need: usize) -> Reproduction {
    let p = problem(problem_id).unwrap();
    let s = Strategy::parse(id).unwrap();
    let rv = p.input().unwrap().clone();
    let lsf = p.lsf.clone().unwrap();
    let wave = rayon::current_num_threads().max(1);
    let mut runs = Vec::new();
    let mut misses = 0;
    while runs.len() < SEEDS && misses <= SEEDS - need {
        let next = (runs.len()..SEEDS.min(runs.len() + wave))
            .into_par_iter()
            .map(|k| run_alr(&s, &rv, |x: &[f64]| lsf(x), cfg, cell_seed(1, p.id, k)).map_err(|e| e.to_string()))
            .collect::<Vec<_>>();
        runs.extend(next);
        let ok = runs.iter().flatten().filter(|t| metric_relerr(t.beta, p.beta_ref) <= ACCURACY_THRESHOLD && t.n_enriched <= max_enriched).count();
        misses = runs.len() - ok;
    }
    let ok = runs.len() - misses;
    let betas: Vec<f64> = runs.iter().flatten().map(|t| t.beta).collect();
    let errors = runs.iter().filter(|r| r.is_err()).count();
    Reproduction { ok, tried: runs.len(), beta_ref: p.beta_ref, median_beta: median(&betas), errors }
}

// ---------------------------------------------------------------- criteria

fn c1_analytic_oracle() -> Verdict {
    let start = Instant::now();
    let cfg = SolverConfig::overkill();
    let rv = RandomVector::standard_normal(2).unwrap();
    let mut worst = SEEDS;
    let mut lines = Vec::new();
    for beta0 in [1.0, 2.0, 3.0] {
        let exact = norm_cdf(-beta0);
        for est in [Estimator::Mcs, Estimator::Is, Estimator::Sus] {
            let hits = (0..SEEDS as u64)
                .into_par_iter()
                .filter(|s| {
                    let g = move |u: &[f64]| beta0 - u[0];
                    let r = estimate(est, &mut StandardFn(g), &rv, &cfg, &mut stream(*s, &[beta0 as u64])).unwrap();
                    (r.pf - exact).abs() <= 3.0 * r.cov * r.pf
                })
                .count();
            worst = worst.min(hits);
            lines.push(format!("{}@{beta0}:{hits}", est.code()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst >= 14 && secs < 60.0, format!("min {worst}/15 seeds within 3 CoV [{}], {secs:.1} s", lines.join(" ")))
}

fn c2_four_branch() -> Verdict {
    let start = Instant::now();
    let r = reproduction("PCK+SuS+U+Co", 12, &desk_alr(None), 120, 13);
    let secs = start.elapsed().as_secs_f64();
    verdict(r.ok >= 13 && secs < 600.0, format!("{}, {secs:.0} s", r.summary("PCK+SuS+U+Co", 12)))
}

fn c3_hat() -> Verdict {
    let r = reproduction("Kriging+MCS+U+BB", 13, &desk_alr(None), usize::MAX, 13);
    verdict(r.ok >= 13, r.summary("Kriging+MCS+U+BB", 13))
}

fn c4_rare_event() -> Verdict {
    let r = reproduction("PCK+SuS+U+Co", 15, &desk_alr(None), usize::MAX, 10);
    let sus_pass = r.ok >= 10;
    // crude MCS on the surrogate, three seeds and a short budget
    let p = problem(15).unwrap();
    let mut mcs_cfg = desk_alr(Some(20));
    mcs_cfg.solver.mcs.max_samples = 10_000_000;
    let mcs = run_seeds("Kriging+MCS+U+BB", &p, &mcs_cfg, 3);
    let mcs_fails = mcs.iter().flatten().filter(|t| t.pf == 0.0 || metric_relerr(t.beta, p.beta_ref) > ACCURACY_THRESHOLD).count();
    let mcs_pass = mcs_fails == mcs.len();
    verdict(
        sus_pass && mcs_pass,
        format!(
            "{} [{}]; Kriging+MCS+U+BB fails in {mcs_fails}/{} seeds [{}]",
            r.summary("PCK+SuS+U+Co", 15),
            if sus_pass { "ok" } else { "short" },
            mcs.len(),
            if mcs_pass { "ok" } else { "short" }
        ),
    )
}

fn c5_grid() -> Verdict {
    let all = expand_strategy_grid(&StrategyFilter::default());
    let pce = all.iter().filter(|s| s.surrogate == SurrogateKind::Pce).count();
    let mut ids: Vec<String> = all.iter().map(|s| s.id()).collect();
    ids.sort();
    ids.dedup();
    let sus_kriging = StrategyFilter { surrogates: vec![SurrogateKind::Kriging], estimators: vec![Estimator::Sus], ..StrategyFilter::default() };
    let n_sk = expand_strategy_grid(&sus_kriging).len();
    let pass = all.len() == 39 && pce == 3 && all.len() - pce == 36 && ids.len() == 39 && n_sk == 6 && ids.contains(&"PCK+SuS+U+Co".to_string());
    verdict(pass, format!("{} strategies ({} + {pce}), {} distinct ids, Kriging x SuS gives {n_sk}", all.len(), all.len() - pce, ids.len()))
}

// Independent tally: percentages per strategy and the ordering rule.
fn brute_force_ranking(recs: &[RankRecord], c: RankCriterion) -> Vec<(String, [usize; 3], usize)> {
    let val = |r: &RankRecord| match c {
        RankCriterion::Neval => r.n_eval,
        RankCriterion::RelErr => r.relerr,
        RankCriterion::Delta => r.delta,
    };
    let ok = |r: &RankRecord| match c {
        RankCriterion::Neval => r.relerr < 0.05 && r.n_eval.is_finite(),
        _ => val(r).is_finite(),
    };
    let d = c.distances();
    let mut tally: BTreeMap<String, ([usize; 3], usize)> = BTreeMap::new();
    for r in recs {
        let e = tally.entry(r.strategy.clone()).or_default();
        e.1 += 1;
        let best = recs.iter().filter(|o| o.problem == r.problem && o.replication == r.replication && ok(o)).map(val).fold(f64::INFINITY, f64::min);
        if ok(r) && best.is_finite() {
            for k in 0..3 {
                e.0[k] += (val(r) <= d[k] * best) as usize;
            }
        }
    }
    let mut out: Vec<(String, [usize; 3], usize)> = tally.into_iter().map(|(s, (c, n))| (s, c, n)).collect();
    let pct = |e: &(String, [usize; 3], usize), k: usize| e.1[k] as f64 / e.2 as f64;
    out.sort_by(|a, b| {
        pct(b, 1).total_cmp(&pct(a, 1)).then(pct(b, 0).total_cmp(&pct(a, 0))).then(pct(b, 2).total_cmp(&pct(a, 2))).then(a.0.cmp(&b.0))
    });
    out
}

fn c6_ranking() -> Verdict {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut recs = Vec::new();
    for p in [12, 13] {
        for k in 0..3 {
            for s in 0..5 {
                let relerr = if next() < 0.1 { f64::INFINITY } else { 0.1 * next() };
                let n_eval = (20.0 + 300.0 * next()).round();
                recs.push(RankRecord { strategy: format!("S{s}"), problem: p, replication: k, relerr, n_eval, delta: metric_delta(relerr, n_eval, 100.0) });
            }
        }
    }
    let mut mismatches = Vec::new();
    for c in [RankCriterion::Neval, RankCriterion::RelErr, RankCriterion::Delta] {
        let got: Vec<(String, [usize; 3], usize)> = rank_strategies(&recs, c).unwrap().entries.into_iter().map(|e| (e.strategy, e.counts, e.runs)).collect();
        if got != brute_force_ranking(&recs, c) {
            mismatches.push(c.code());
        }
    }
    verdict(mismatches.is_empty(), format!("5 x 2 x 3 table, counts and order match the brute-force tally for all criteria (mismatches: {mismatches:?})"))
}

fn halton_normal(n: usize, m: usize) -> Vec<Vec<f64>> {
    let primes = [2u64, 3, 5];
    (1..=n as u64)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let (b, mut k, mut f, mut r) = (primes[j], i, 1.0, 0.0);
                    while k > 0 {
                        f /= b as f64;
                        r += f * (k % b) as f64;
                        k /= b;
                    }
                    norm_inv_cdf(r)
                })
                .collect()
        })
        .collect()
}

fn enumerate_basis(m: usize, p: u32, q: f64, r: usize) -> usize {
    let base = p as usize + 1;
    (0..base.pow(m as u32))
        .filter(|code| {
            let alpha: Vec<usize> = (0..m).map(|j| code / base.pow(j as u32) % base).collect();
            let norm = alpha.iter().map(|a| (*a as f64).powf(q)).sum::<f64>().powf(1.0 / q);
            norm <= p as f64 + 1e-9 && alpha.iter().filter(|a| **a > 0).count() <= r
        })
        .count()
}

fn c7_surrogates() -> Verdict {
    let mut notes = Vec::new();
    // Kriging and PC-Kriging interpolation at the design
    let rv = RandomVector::new(vec![D::gaussian(1.0, 0.5).unwrap(), D::lognormal(2.0, 0.2).unwrap()]).unwrap();
    let mut interp_ok = true;
    for seed in 0..5 {
        let x = lhs_sample(12 + 3 * seed as usize, &rv, &mut stream(seed, &[])).unwrap();
        let y: Vec<f64> = x.iter().map(|p| p[0] * p[1] - (2.0 * p[0]).sin() + 0.3 * p[1] * p[1]).collect();
        let ed = ExperimentalDesign::new(x.clone(), y.clone()).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
        let ok = fit_kriging(&ed, &KrigingConfig::default(), &mut stream(seed, &[1])).unwrap();
        let pck = fit_pck(&ed, &rv, &PckConfig::default(), &mut stream(seed, &[2])).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (m1, v1) = ok.predict(xi);
            let (m2, v2) = pck.predict(xi);
            interp_ok &= (m1 - yi).abs() <= 1e-6 * sd && v1 <= 1e-6 * ok.process_variance();
            interp_ok &= (m2 - yi).abs() <= 1e-6 * sd && v2 <= 1e-6 * pck.kriging.process_variance();
        }
    }
    notes.push(format!("interpolation {}", if interp_ok { "ok" } else { "violated" }));
    // empirical orthonormality of the Hermite basis
    let mut worst = 0.0f64;
    for (m, p) in [(2, 3), (3, 3)] {
        let basis = hyperbolic_basis(m, p, 0.75, 2, 1000).unwrap();
        let k = basis.len();
        let pts = halton_normal(100_000, m);
        let mut gram = vec![0.0; k * k];
        for u in &pts {
            let v = evaluate_basis(&basis, u);
            for i in 0..k {
                for j in 0..=i {
                    gram[i * k + j] += v[i] * v[j] / pts.len() as f64;
                }
            }
        }
        for i in 0..k {
            for j in 0..=i {
                worst = worst.max((gram[i * k + j] - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    notes.push(format!("Gram deviation {worst:.4}"));
    // truncation counts
    let mut counts_ok = true;
    for m in [2, 3] {
        for p in [2, 3] {
            for q in [0.75, 1.0] {
                counts_ok &= hyperbolic_basis(m, p, q, m, 100_000).unwrap().len() == enumerate_basis(m, p, q, m);
            }
        }
    }
    notes.push(format!("truncation counts {}", if counts_ok { "match" } else { "differ" }));
    verdict(interp_ok && worst <= 0.05 && counts_ok, notes.join(", "))
}

fn converged_after(c: StoppingCriterion, steps: &[(f64, Option<f64>)]) -> Option<usize> {
    let mut m = StoppingMonitor::new(c, StoppingConfig::default());
    steps.iter().position(|(b, r)| m.update(*b, *r).converged).map(|i| i + 1)
}

fn c8_stopping() -> Verdict {
    let numeric = sc_beta_bounds(3.0, 3.0, 3.0, 0.01)
        && (beta_bounds_ratio(2.9, 3.0, 3.1) - 0.2 / 3.0).abs() < 1e-15
        && !sc_beta_bounds(2.9, 3.0, 3.1, 0.01)
        && sc_beta_bounds(2.99, 3.0, 3.01, 0.01)
        && sc_beta_stability(3.0, 3.0, 0.005)
        && (beta_stability_ratio(3.0, 3.1) - 0.1 / 3.1).abs() < 1e-15
        && !sc_beta_stability(3.0, 3.1, 0.005)
        && sc_beta_stability(3.0, 3.012, 0.005);
    let steady = vec![(3.0, Some(0.0)); 8];
    let counts = [StoppingCriterion::BetaBounds, StoppingCriterion::BetaStability, StoppingCriterion::Combined].map(|c| converged_after(c, &steady));
    let broken_bb = converged_after(StoppingCriterion::BetaBounds, &[(3.0, Some(0.0)), (3.0, Some(0.0)), (3.0, Some(0.5)), (3.0, Some(0.0)), (3.0, Some(0.0)), (3.0, Some(0.0))]);
    let alternating: Vec<(f64, Option<f64>)> = (0..10).map(|i| (3.0, Some(if i % 2 == 0 { 0.0 } else { 0.5 }))).collect();
    let co_alt = converged_after(StoppingCriterion::Combined, &alternating);
    let co_unstable = converged_after(StoppingCriterion::Combined, &[(3.0, Some(0.0)), (3.2, Some(0.0)), (3.4, Some(0.0)), (3.6, Some(0.0))]);
    // 3 stable transitions need 4 estimates
    let pass = numeric && counts == [Some(3), Some(4), Some(3)] && broken_bb == Some(6) && co_alt.is_none() && co_unstable.is_none();
    verdict(pass, format!("numeric cases {}, steady-state stops at {counts:?}, streak resets {}", if numeric { "exact" } else { "off" }, if broken_bb == Some(6) && co_alt.is_none() && co_unstable.is_none() { "ok" } else { "wrong" }))
}

fn c9_truss() -> Verdict {
    let t = demo_tower();
    let p = TowerParameters { areas: [1.2e-3, 0.9e-3, 4e-3, 3e-3], moduli: [200e9, 205e9, 210e9, 195e9], tip_force: 3.5e4, hand_load: 1e4, angle_deg: 25.0 };
    let s = t.solve_tower(&p).unwrap();
    // nodal equilibrium from bar forces, loads and reactions
    let mut resid = vec![[0.0f64; 3]; t.nodes.len()];
    for (i, (l, r)) in s.loads.iter().zip(&s.reactions).enumerate() {
        for k in 0..3 {
            resid[i][k] += l[k] + r[k];
        }
    }
    for (b, n) in t.bars.iter().zip(&s.axial_forces) {
        let (a, c) = (t.nodes[b[0]], t.nodes[b[1]]);
        let d = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        for k in 0..3 {
            resid[b[0]][k] += n * d[k] / len;
            resid[b[1]][k] -= n * d[k] / len;
        }
    }
    let load_scale = s.loads.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let equilibrium = resid.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())) / load_scale;
    // doubling the loads doubles the displacements
    let double = TowerParameters { tip_force: 2.0 * p.tip_force, hand_load: 2.0 * p.hand_load, ..p };
    let s2 = t.solve_tower(&double).unwrap();
    let u_scale = s.displacements.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let linearity = s.displacements.iter().flatten().zip(s2.displacements.iter().flatten()).fold(0.0f64, |m, (a, b)| m.max((2.0 * a - b).abs())) / u_scale;
    // single bar
    let (f, l, a, e) = (1e4, 2.5, 1e-4, 2e11);
    let bar = TrussModel {
        nodes: vec![[0.0, 0.0, 0.0], [0.0, 0.0, l]],
        bars: vec![[0, 1]],
        groups: vec![0],
        supports: vec![Support { node: 0, fixed: [true; 3] }, Support { node: 1, fixed: [true, true, false] }],
        tip: 1,
        hands: vec![],
    };
    let exact = f * l / (e * a);
    let got = bar.solve(&[a; 4], &[e; 4], &[[0.0; 3], [0.0, 0.0, f]]).unwrap().displacements[1][2];
    let bar_err = (got - exact).abs() / exact;
    verdict(
        equilibrium <= 1e-8 && linearity <= 1e-8 && bar_err <= 1e-10,
        format!("nodal equilibrium {equilibrium:.1e}, linearity {linearity:.1e}, single bar FL/EA error {bar_err:.1e}"),
    )
}

fn c10_scope() -> Verdict {
    let desk = CampaignConfig::default();
    let pass = desk.replications == 3 && desk.problems == [12, 13, 14, 15];
    verdict(
        pass,
        "not reproduced at desk scale: the full 12,300-run benchmark, the per-strategy percentage tables and the transmission-tower reference failure probabilities (tower geometry unavailable); covered instead by criteria 5 to 9 and the desk campaign profile (R = 3, problems 12 to 15)".into(),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("analytic-oracle reliability", c1_analytic_oracle),
        ("four-branch reproduction", c2_four_branch),
        ("AK-MCS reconstruction", c3_hat),
        ("rare-event capability", c4_rare_event),
        ("strategy-grid cardinality", c5_grid),
        ("ranking oracle equivalence", c6_ranking),
        ("surrogate properties", c7_surrogates),
        ("stopping criteria", c8_stopping),
        ("truss finite elements", c9_truss),
        ("scope statement", c10_scope),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| verdict(false, "panicked".into()));
        failed += !v.pass as usize;
        println!("criterion {:>2} {} {name}: {} ({:.1} s)", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
