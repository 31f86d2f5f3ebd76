use proptest::prelude::*;
use tensor_tree::leaf::LeafModelSpec;
use tensor_tree::metrics::evaluate;
use tensor_tree::output::OutputBasis;
use tensor_tree::rng::SplitMix64;
use tensor_tree::tree::GrowConfig;
use tensor_tree::{
    cp_als, fit_boosting_traced, fit_entrywise, fit_forest, fit_lowrank, AlsConfig, BoostingConfig, DenseTensor,
    ForestConfig, Model, OutputConfig, OutputDecomposition,
};

fn inputs(n: usize, seed: u64) -> DenseTensor<f64> {
    let mut rng = SplitMix64::new(seed);
    DenseTensor::from_fn(vec![n, 3, 2], |_| rng.uniform()).unwrap()
}

fn small_tree(depth: usize) -> GrowConfig {
    GrowConfig {
        max_depth: depth,
        min_samples_leaf: 2,
        leaf: LeafModelSpec::mean(),
        ..GrowConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boosting_mse_non_increasing(seed in 0u64..1000, depth in 0usize..4, lr in 0.05f64..1.0) {
        let x = inputs(50, seed);
        let mut rng = SplitMix64::new(seed ^ 7);
        let y: Vec<f64> = (0..50).map(|i| x.row(i)[1] * 4.0 + rng.standard_normal()).collect();
        let cfg = BoostingConfig { learning_rate: lr, tree: small_tree(depth), ..BoostingConfig::default() };
        let (model, trace) = fit_boosting_traced(&x, &y, &cfg).unwrap();
        prop_assert!(trace.train_mse.windows(2).all(|w| w[1] <= w[0] + 1e-10));
        let pred = model.predict(&x).unwrap();
        for i in 0..50 {
            prop_assert!((y[i] - pred[i] - trace.residuals[cfg.n_estimators][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn entrywise_column_order_is_irrelevant(seed in 0u64..1000) {
        let x = inputs(30, seed);
        let y = DenseTensor::from_fn(vec![30, 3], |ix| x.row(ix[0])[ix[1]] * (ix[1] as f64 + 1.0)).unwrap();
        let perm = [2usize, 0, 1];
        let yp = DenseTensor::from_fn(vec![30, 3], |ix| y.get(&[ix[0], perm[ix[1]]])).unwrap();
        let cfg = OutputConfig::entrywise(BoostingConfig { tree: small_tree(2), ..BoostingConfig::default() });
        let a = fit_entrywise(&x, &y, &cfg).unwrap().predict(&x).unwrap();
        let b = fit_entrywise(&x, &yp, &cfg).unwrap().predict(&x).unwrap();
        for i in 0..30 {
            for (k, &p) in perm.iter().enumerate() {
                prop_assert_eq!(b.get(&[i, k]), a.get(&[i, p]));
            }
        }
    }

    #[test]
    fn zero_predictor_rpe_is_one(v in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
        prop_assume!(v.iter().any(|&a| a != 0.0));
        let zeros = vec![0.0; v.len()];
        prop_assert_eq!(evaluate(&v, &zeros).unwrap().rpe, 1.0);
    }
}

#[test]
fn output_shapes_follow_training_outputs() {
    let x = inputs(24, 1);
    let y = DenseTensor::from_fn(vec![24, 2, 3], |ix| x.row(ix[0])[ix[1] * 3 % 6] + ix[2] as f64).unwrap();
    let boosting = BoostingConfig {
        n_estimators: 3,
        tree: small_tree(1),
        ..BoostingConfig::default()
    };
    let test = inputs(7, 2);
    let e = fit_entrywise(&x, &y, &OutputConfig::entrywise(boosting.clone())).unwrap();
    assert_eq!(e.predict(&test).unwrap().shape(), &[7, 2, 3]);
    let l = fit_lowrank(&x, &y, &OutputConfig::lowrank(OutputDecomposition::Cp { rank: 2 }, boosting.clone())).unwrap();
    assert_eq!(l.predict(&test).unwrap().shape(), &[7, 2, 3]);
    let t = fit_lowrank(
        &x,
        &y,
        &OutputConfig::lowrank(OutputDecomposition::Tucker { ranks: vec![2, 2, 2] }, boosting),
    )
    .unwrap();
    assert_eq!(t.predict(&test).unwrap().shape(), &[7, 2, 3]);
}

#[test]
fn lowrank_identity_with_true_factor() {
    let mut rng = SplitMix64::new(3);
    let y = DenseTensor::from_fn(vec![10, 4, 3], |_| rng.uniform()).unwrap();
    let d = cp_als(&y, 3, &AlsConfig::default()).unwrap().decomposition;
    let basis = OutputBasis::Cp {
        weights: d.weights.clone(),
        factors: d.factors[1..].to_vec(),
    };
    assert_eq!(basis.reconstruct(&d.factors[0]).unwrap(), d.reconstruct().unwrap());
}

#[test]
fn forest_and_boosting_roundtrip_through_json() {
    let x = inputs(40, 4);
    let y: Vec<f64> = (0..40).map(|i| x.row(i)[2].sin() * 3.0).collect();
    let forest = fit_forest(
        &x,
        &y,
        &ForestConfig {
            n_trees: 5,
            tree: small_tree(2),
            seed: 1,
            ..ForestConfig::default()
        },
    )
    .unwrap();
    let (boosted, _) = fit_boosting_traced(
        &x,
        &y,
        &BoostingConfig {
            p_resample: 0.7,
            tree: small_tree(2),
            ..BoostingConfig::default()
        },
    )
    .unwrap();
    for m in [Model::from(forest), Model::from(boosted)] {
        let back = Model::<f64>::from_json(&m.to_json().unwrap()).unwrap();
        let (a, b) = (m.predict(&x).unwrap(), back.predict(&x).unwrap());
        assert!(a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
