use proptest::prelude::*;
use tensor_tree::rng::SplitMix64;
use tensor_tree::tensor::khatri_rao;
use tensor_tree::{cp_als, tucker_als, AlsConfig, DenseTensor, Matrix};

fn random_tensor(shape: Vec<usize>, seed: u64) -> DenseTensor<f64> {
    let mut rng = SplitMix64::new(seed);
    DenseTensor::from_fn(shape, |_| rng.uniform_range(-1.0, 1.0)).unwrap()
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(2usize..6, 2..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cp_errors_monotone_and_columns_unit(shape in shape_strategy(), rank in 1usize..4, seed in 0u64..1000) {
        let t = random_tensor(shape, seed);
        let fit = cp_als(&t, rank, &AlsConfig::default()).unwrap();
        prop_assert!(fit.errors.windows(2).all(|w| w[1] <= w[0] + 1e-10), "{:?}", fit.errors);
        for f in &fit.decomposition.factors {
            prop_assert_eq!(f.cols(), rank);
            for c in 0..rank {
                prop_assert!((f.column_norm(c) - 1.0).abs() < 1e-10);
            }
        }
        let again = cp_als(&t, rank, &AlsConfig::default()).unwrap();
        prop_assert_eq!(fit.decomposition, again.decomposition);
    }

    #[test]
    fn tucker_errors_monotone_and_factors_orthonormal(shape in shape_strategy(), seed in 0u64..1000) {
        let t = random_tensor(shape.clone(), seed);
        let ranks: Vec<usize> = shape.iter().map(|&d| 1 + (seed as usize + d) % d).collect();
        let fit = tucker_als(&t, &ranks, &AlsConfig::default()).unwrap();
        prop_assert!(fit.errors.windows(2).all(|w| w[1] <= w[0] + 1e-10), "{:?}", fit.errors);
        for f in &fit.decomposition.factors {
            let g = f.gram();
            let eye = Matrix::identity(f.cols());
            prop_assert!(g.sub(&eye).unwrap().frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn khatri_rao_columns_are_kronecker(r in 1usize..4, ra in 1usize..5, rb in 1usize..5, seed in 0u64..1000) {
        let mut rng = SplitMix64::new(seed);
        let a = Matrix::new(ra, r, (0..ra * r).map(|_| rng.uniform()).collect()).unwrap();
        let b = Matrix::new(rb, r, (0..rb * r).map(|_| rng.uniform()).collect()).unwrap();
        let k = khatri_rao(&a, &b).unwrap();
        for c in 0..r {
            let (ac, bc) = (a.column(c), b.column(c));
            let kron: Vec<f64> = ac.iter().flat_map(|x| bc.iter().map(move |y| x * y)).collect();
            prop_assert_eq!(k.column(c), kron);
        }
    }
}

/// Components 0 and 2 nearly collinear in every mode: plain ALS from the
/// singular-vector start stalls near 1e-2 here.
#[test]
fn swamp_instance_is_recovered() {
    for (seed, rank) in [(303u64, 3usize), (302, 4), (308, 4)] {
        let mut rng = SplitMix64::new(seed);
        let shape = [5, 4, 3];
        let vecs: Vec<Vec<Vec<f64>>> = (0..rank)
            .map(|_| shape.iter().map(|&d| (0..d).map(|_| rng.standard_normal()).collect()).collect())
            .collect();
        let t = DenseTensor::from_fn(shape.to_vec(), |ix| {
            vecs.iter().map(|v| v[0][ix[0]] * v[1][ix[1]] * v[2][ix[2]]).sum::<f64>()
        })
        .unwrap();
        let fit = cp_als(&t, rank, &AlsConfig::default()).unwrap();
        let err = t.sub(&fit.decomposition.reconstruct().unwrap()).unwrap().frobenius_norm() / t.frobenius_norm();
        assert!(err < 1e-6, "seed {seed}: {err}");
        assert!(fit.errors.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn exact_rank_tensors_are_recovered() {
    for seed in 0..5 {
        let mut rng = SplitMix64::new(seed);
        let shape = [12, 6, 5];
        let vecs: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|_| shape.iter().map(|&d| (0..d).map(|_| rng.standard_normal()).collect()).collect())
            .collect();
        let t = DenseTensor::from_fn(shape.to_vec(), |ix| {
            vecs.iter().map(|v| v[0][ix[0]] * v[1][ix[1]] * v[2][ix[2]]).sum::<f64>()
        })
        .unwrap();
        let cfg = AlsConfig {
            rel_tolerance: 1e-12,
            ..AlsConfig::default()
        };
        let fit = cp_als(&t, 2, &cfg).unwrap();
        let err = t.sub(&fit.decomposition.reconstruct().unwrap()).unwrap().frobenius_norm() / t.frobenius_norm();
        assert!(err < 1e-6, "seed {seed}: {err}");
        let tk = tucker_als(&t, &[2, 2, 2], &cfg).unwrap();
        let err = t.sub(&tk.decomposition.reconstruct().unwrap()).unwrap().frobenius_norm() / t.frobenius_norm();
        assert!(err < 1e-6, "seed {seed}: {err}");
    }
}
