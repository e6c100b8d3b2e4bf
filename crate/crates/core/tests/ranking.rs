use std::collections::BTreeMap;

use alr_core::metrics::{metric_delta, metric_relerr, problem_medians, rank_strategies, RankCriterion, RankRecord, ACCURACY_THRESHOLD};
use proptest::prelude::*;

// Brute-force tally: for every record, scan all records of its run cell.
fn oracle(records: &[RankRecord], c: RankCriterion) -> BTreeMap<String, [f64; 3]> {
    let val = |r: &RankRecord| match c {
        RankCriterion::Neval => r.n_eval,
        RankCriterion::RelErr => r.relerr,
        RankCriterion::Delta => r.delta,
    };
    let ok = |r: &RankRecord| match c {
        RankCriterion::Neval => r.relerr < ACCURACY_THRESHOLD && r.n_eval.is_finite(),
        _ => val(r).is_finite(),
    };
    let d = c.distances();
    let mut hits: BTreeMap<String, ([f64; 3], f64)> = BTreeMap::new();
    for r in records {
        let e = hits.entry(r.strategy.clone()).or_insert(([0.0; 3], 0.0));
        e.1 += 1.0;
        if !ok(r) {
            continue;
        }
        let mut best = f64::INFINITY;
        for o in records {
            if o.problem == r.problem && o.replication == r.replication && ok(o) {
                best = best.min(val(o));
            }
        }
        for k in 0..3 {
            if val(r) <= d[k] * best {
                e.0[k] += 1.0;
            }
        }
    }
    hits.into_iter().map(|(s, (h, n))| (s, h.map(|v| 100.0 * v / n))).collect()
}

fn record() -> impl Strategy<Value = RankRecord> {
    (0usize..5, 12u32..16, 0usize..3, prop_oneof![Just(0.0), 0.0f64..0.2, Just(f64::INFINITY)], 10.0f64..400.0).prop_map(|(s, p, k, e, n)| RankRecord {
        strategy: format!("S{s}"),
        problem: p,
        replication: k,
        relerr: e,
        n_eval: n,
        delta: metric_delta(e, n, 100.0),
    })
}

fn as_map(records: &[RankRecord], c: RankCriterion) -> BTreeMap<String, [f64; 3]> {
    rank_strategies(records, c).unwrap().entries.into_iter().map(|e| (e.strategy, e.percentages)).collect()
}

#[test]
fn hand_worked_cell() {
    let mk = |s: &str, e: f64, n: f64| RankRecord { strategy: s.into(), problem: 12, replication: 0, relerr: e, n_eval: n, delta: metric_delta(e, n, 100.0) };
    let recs = [mk("A", 0.01, 50.0), mk("B", 0.02, 140.0), mk("C", 0.03, 240.0), mk("D", 0.2, 10.0)];
    let r = rank_strategies(&recs, RankCriterion::Neval).unwrap();
    let got: Vec<(&str, [usize; 3])> = r.entries.iter().map(|e| (e.strategy.as_str(), e.counts)).collect();
    assert_eq!(got, vec![("A", [1, 1, 1]), ("B", [0, 1, 1]), ("C", [0, 0, 1]), ("D", [0, 0, 0])]);
    assert_eq!(metric_relerr(2.0, 2.0), 0.0);
    let med = problem_medians([(12, 50.0), (12, 140.0), (12, 300.0), (13, 7.0)]);
    assert_eq!(med[&12], 140.0);
    assert_eq!(med[&13], 7.0);
}

#[test]
fn empty_input_is_an_error() {
    assert!(rank_strategies(&[], RankCriterion::Delta).is_err());
}

proptest! {
    #[test]
    fn matches_brute_force(recs in prop::collection::vec(record(), 1..60)) {
        for c in [RankCriterion::Neval, RankCriterion::RelErr, RankCriterion::Delta] {
            prop_assert_eq!(as_map(&recs, c), oracle(&recs, c));
        }
    }

    #[test]
    fn order_does_not_matter(recs in prop::collection::vec(record(), 1..60), seed in any::<u64>()) {
        let mut shuffled = recs.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        for c in [RankCriterion::Neval, RankCriterion::RelErr, RankCriterion::Delta] {
            prop_assert_eq!(rank_strategies(&recs, c).unwrap(), rank_strategies(&shuffled, c).unwrap());
        }
    }

    #[test]
    fn duplicated_campaign_keeps_percentages(recs in prop::collection::vec(record(), 1..60)) {
        let mut twice = recs.clone();
        twice.extend(recs.iter().map(|r| RankRecord { replication: r.replication + 100, ..r.clone() }));
        for c in [RankCriterion::Neval, RankCriterion::RelErr, RankCriterion::Delta] {
            let a = rank_strategies(&recs, c).unwrap();
            let b = rank_strategies(&twice, c).unwrap();
            prop_assert_eq!(a.entries.len(), b.entries.len());
            for (x, y) in a.entries.iter().zip(&b.entries) {
                prop_assert_eq!(&x.strategy, &y.strategy);
                prop_assert_eq!(x.percentages, y.percentages);
                prop_assert_eq!(x.counts.map(|v| 2 * v), y.counts);
            }
        }
    }

    #[test]
    fn percentages_are_nested(recs in prop::collection::vec(record(), 1..60)) {
        for c in [RankCriterion::Neval, RankCriterion::RelErr, RankCriterion::Delta] {
            for e in rank_strategies(&recs, c).unwrap().entries {
                prop_assert!(e.percentages[0] <= e.percentages[1] && e.percentages[1] <= e.percentages[2]);
                prop_assert!(e.percentages[2] <= 100.0);
            }
        }
    }
}
