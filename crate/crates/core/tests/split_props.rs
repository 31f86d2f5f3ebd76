mod common;

use common::{brute_force, criteria, instance};
use proptest::prelude::*;
use tensor_tree::leaf::LeafModelSpec;
use tensor_tree::split::{
    candidate_thresholds, find_best_split_bb, find_best_split_exhaustive, find_best_split_leverage, SearchStrategy,
    SplitCriterion, SplitRank, ValueMode,
};

fn leaf() -> LeafModelSpec {
    LeafModelSpec::mean()
}

#[test]
fn exhaustive_matches_brute_force() {
    for seed in 0..40 {
        let inst = instance(seed);
        for crit in criteria(inst.x.feature_shape(), seed) {
            let got = find_best_split_exhaustive(&inst.x, &inst.y, &crit, &leaf()).unwrap();
            let want = brute_force(&inst.x, &inst.y, &crit, &leaf());
            match (got, want) {
                (None, None) => {}
                (Some(g), Some(w)) => {
                    assert_eq!(g.rule.coords, w.coords, "seed {seed} {crit:?}");
                    assert_eq!(g.rule.threshold, w.threshold, "seed {seed} {crit:?}");
                    assert!((g.loss - w.loss).abs() <= 1e-9 * w.loss.abs().max(1.0), "seed {seed} {crit:?}");
                    assert_eq!((g.left_count, g.right_count), (w.left, w.right));
                }
                (g, w) => panic!("seed {seed} {crit:?}: search {g:?} vs oracle {w:?}"),
            }
        }
    }
}

#[test]
fn reductions_to_exhaustive() {
    for seed in 100..130 {
        let inst = instance(seed);
        for crit in criteria(inst.x.feature_shape(), seed) {
            let ex = find_best_split_exhaustive(&inst.x, &inst.y, &crit, &leaf()).unwrap();
            let ls = find_best_split_leverage(&inst.x, &inst.y, &crit, &leaf(), &SearchStrategy::leverage(1.0, seed)).unwrap();
            let bb = find_best_split_bb(&inst.x, &inst.y, &crit, &leaf(), &SearchStrategy::branch_bound(0)).unwrap();
            // Leverage sampling skips constant coordinates, which never admit a split.
            assert_eq!(ex.as_ref().map(|e| &e.rule), ls.as_ref().map(|e| &e.rule), "LS seed {seed}");
            assert_eq!(ex.as_ref().map(|e| &e.rule), bb.as_ref().map(|e| &e.rule), "BB seed {seed}");
        }
    }
}

#[test]
fn mean_mode_has_one_threshold_per_coordinate() {
    let inst = instance(7);
    let shape = inst.x.feature_shape().to_vec();
    for j in 0..inst.x.feature_len() {
        let coords = common::unravel(j, &shape);
        assert_eq!(candidate_thresholds(&inst.x, &coords, ValueMode::MeanValue).unwrap().len(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sse_rule_invariant_to_affine_y(seed in 0u64..10_000, shift in -5.0f64..5.0, scale in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0]) {
        let inst = instance(seed);
        let crit = SplitCriterion::sse();
        let base = find_best_split_exhaustive(&inst.x, &inst.y, &crit, &leaf()).unwrap();
        let y2: Vec<f64> = inst.y.iter().map(|v| v * scale + shift).collect();
        let moved = find_best_split_exhaustive(&inst.x, &y2, &crit, &leaf()).unwrap();
        match (base, moved) {
            (Some(a), Some(b)) => {
                // Only compare when the optimum is not a near-tie that rounding could flip.
                let all: Vec<f64> = (0..inst.x.feature_len()).flat_map(|j| {
                    let inst = &inst;
                    let mut v: Vec<f64> = (0..inst.x.n_obs()).map(|i| inst.x.row(i)[j]).collect();
                    v.sort_by(f64::total_cmp);
                    v.dedup();
                    v.into_iter().filter_map(move |t| common::oracle_loss(&inst.x, &inst.y, j, t, &SplitCriterion::sse(), &leaf()).map(|l| l.0))
                }).collect();
                let gap = all.iter().filter(|&&l| l > a.loss * (1.0 + 1e-9) + 1e-12).fold(f64::INFINITY, |m, &l| m.min(l)) - a.loss;
                if gap > 1e-6 {
                    let ties = all.iter().filter(|&&l| (l - a.loss).abs() <= 1e-9 * a.loss.max(1.0)).count();
                    if ties == 1 {
                        prop_assert_eq!(&a.rule, &b.rule);
                    }
                }
                prop_assert!((b.loss - a.loss * scale * scale).abs() <= 1e-8 * (1.0 + a.loss * scale * scale));
            }
            (None, None) => {}
            (a, b) => prop_assert!(false, "admissibility changed: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn lae_ignores_y(seed in 0u64..10_000, rot in 1usize..19) {
        let inst = instance(seed);
        let crit = SplitCriterion::lae(SplitRank::Cp(1));
        let mut y2 = inst.y.clone();
        let k = rot % y2.len();
        y2.rotate_left(k);
        let a = find_best_split_exhaustive(&inst.x, &inst.y, &crit, &leaf()).unwrap();
        let b = find_best_split_exhaustive(&inst.x, &y2, &crit, &leaf()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn returned_rules_are_admissible(seed in 0u64..10_000, mean_mode in any::<bool>()) {
        let inst = instance(seed);
        let mode = if mean_mode { ValueMode::MeanValue } else { ValueMode::ObservedValues };
        let crit = SplitCriterion::sse().with_value_mode(mode);
        if let Some(e) = find_best_split_exhaustive(&inst.x, &inst.y, &crit, &leaf()).unwrap() {
            let shape = inst.x.feature_shape().to_vec();
            let left = (0..inst.x.n_obs()).filter(|&i| e.rule.goes_left(inst.x.row(i), &shape)).count();
            prop_assert!(left > 0 && left < inst.x.n_obs());
            prop_assert_eq!(left, e.left_count);
        }
    }

    #[test]
    fn searches_are_deterministic(seed in 0u64..10_000, tau in 0.1f64..1.0) {
        let inst = instance(seed);
        let crit = SplitCriterion::sse();
        let s = SearchStrategy::leverage(tau, seed);
        prop_assert_eq!(
            find_best_split_leverage(&inst.x, &inst.y, &crit, &leaf(), &s).unwrap(),
            find_best_split_leverage(&inst.x, &inst.y, &crit, &leaf(), &s).unwrap()
        );
        let b = SearchStrategy::branch_bound(1);
        prop_assert_eq!(
            find_best_split_bb(&inst.x, &inst.y, &crit, &leaf(), &b).unwrap(),
            find_best_split_bb(&inst.x, &inst.y, &crit, &leaf(), &b).unwrap()
        );
    }
}
