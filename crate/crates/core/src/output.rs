//! Tensor responses through ensembles of scalar models: one ensemble per
//! output entry, or one per column of a low-rank output decomposition's
//! observation factor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{cp_als, tucker_als, AlsConfig, CpDecomposition, TuckerDecomposition};
use crate::ensemble::{fit_boosting, BoostedModel, BoostingConfig};
use crate::error::{invalid, mismatch, Result};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::tensor::{DenseTensor, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputDecomposition {
    Cp { rank: usize },
    /// One rank per mode of the stacked output, observation mode first.
    Tucker { ranks: Vec<usize> },
}

impl OutputDecomposition {
    /// `Tucker` with the same rank on every one of `modes` modes.
    pub fn tucker_uniform(rank: usize, modes: usize) -> Self {
        OutputDecomposition::Tucker {
            ranks: vec![rank; modes],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "approach", rename_all = "snake_case")]
pub enum OutputApproach {
    Entrywise,
    LowRank { decomposition: OutputDecomposition },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub approach: OutputApproach,
    #[serde(default)]
    pub boosting: BoostingConfig,
    /// ALS settings for the output decomposition.
    #[serde(default)]
    pub als: AlsConfig,
}

impl OutputConfig {
    pub fn entrywise(boosting: BoostingConfig) -> Self {
        Self {
            approach: OutputApproach::Entrywise,
            boosting,
            als: AlsConfig::default(),
        }
    }

    pub fn lowrank(decomposition: OutputDecomposition, boosting: BoostingConfig) -> Self {
        Self {
            approach: OutputApproach::LowRank { decomposition },
            boosting,
            als: AlsConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let OutputApproach::LowRank { decomposition } = &self.approach {
            match decomposition {
                OutputDecomposition::Cp { rank: 0 } => return Err(invalid("output CP rank must be at least 1")),
                OutputDecomposition::Tucker { ranks } if ranks.is_empty() || ranks.contains(&0) => {
                    return Err(invalid("output Tucker ranks must be at least 1"))
                }
                _ => {}
            }
        }
        self.als.validate()?;
        self.boosting.validate()
    }
}

/// The frozen part of an output decomposition: everything but the
/// observation-mode factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum OutputBasis<T> {
    Cp { weights: Vec<T>, factors: Vec<Matrix<T>> },
    Tucker { core: DenseTensor<T>, factors: Vec<Matrix<T>> },
}

impl<T: Scalar> OutputBasis<T> {
    /// Number of observation-factor columns.
    pub fn rank(&self) -> usize {
        match self {
            OutputBasis::Cp { weights, .. } => weights.len(),
            OutputBasis::Tucker { core, .. } => core.shape()[0],
        }
    }

    /// Rebuilds stacked outputs from an observation factor with one row per
    /// observation.
    pub fn reconstruct(&self, obs: &Matrix<T>) -> Result<DenseTensor<T>> {
        if obs.cols() != self.rank() {
            return Err(mismatch(format!(
                "observation factor has {} columns, basis rank is {}",
                obs.cols(),
                self.rank()
            )));
        }
        match self {
            OutputBasis::Cp { weights, factors } => CpDecomposition {
                weights: weights.clone(),
                factors: std::iter::once(obs.clone()).chain(factors.iter().cloned()).collect(),
            }
            .reconstruct(),
            OutputBasis::Tucker { core, factors } => TuckerDecomposition {
                core: core.clone(),
                factors: std::iter::once(obs.clone()).chain(factors.iter().cloned()).collect(),
            }
            .reconstruct(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "approach", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum TensorOutputModel<T> {
    /// `models[e]` predicts flat output entry `e` (row-major over `output_shape`).
    Entrywise {
        output_shape: Vec<usize>,
        models: Vec<BoostedModel<T>>,
    },
    /// `models[r]` predicts column `r` of the observation factor.
    LowRank {
        output_shape: Vec<usize>,
        basis: OutputBasis<T>,
        models: Vec<BoostedModel<T>>,
    },
}

impl<T: Scalar> TensorOutputModel<T> {
    pub fn output_shape(&self) -> &[usize] {
        match self {
            TensorOutputModel::Entrywise { output_shape, .. } | TensorOutputModel::LowRank { output_shape, .. } => {
                output_shape
            }
        }
    }

    pub fn predict(&self, x: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        predict_tensor(self, x)
    }
}

fn check_output<T: Scalar>(x: &DenseTensor<T>, y: &DenseTensor<T>) -> Result<()> {
    if y.ndim() < 2 {
        return Err(mismatch("tensor outputs need at least one mode besides the observation mode"));
    }
    if x.ndim() < 2 || x.n_obs() != y.n_obs() {
        return Err(mismatch(format!(
            "X has shape {:?} but Y has shape {:?}",
            x.shape(),
            y.shape()
        )));
    }
    Ok(())
}

fn fit_columns<T: Scalar>(x: &DenseTensor<T>, targets: &[Vec<T>], cfg: &BoostingConfig) -> Result<Vec<BoostedModel<T>>> {
    targets
        .par_iter()
        .enumerate()
        .map(|(e, y)| {
            let mut c = cfg.clone();
            c.seed = derive_seed(cfg.seed, e as u64);
            fit_boosting(x, y, &c)
        })
        .collect()
}

pub fn fit_entrywise<T: Scalar>(x: &DenseTensor<T>, y: &DenseTensor<T>, cfg: &OutputConfig) -> Result<TensorOutputModel<T>> {
    cfg.validate()?;
    check_output(x, y)?;
    let p = y.feature_len();
    let targets: Vec<Vec<T>> = (0..p)
        .map(|e| (0..y.n_obs()).map(|i| y.row(i)[e]).collect())
        .collect();
    Ok(TensorOutputModel::Entrywise {
        output_shape: y.feature_shape().to_vec(),
        models: fit_columns(x, &targets, &cfg.boosting)?,
    })
}

pub fn fit_lowrank<T: Scalar>(x: &DenseTensor<T>, y: &DenseTensor<T>, cfg: &OutputConfig) -> Result<TensorOutputModel<T>> {
    cfg.validate()?;
    check_output(x, y)?;
    let OutputApproach::LowRank { decomposition } = &cfg.approach else {
        return Err(invalid("fit_lowrank needs a low-rank output configuration"));
    };
    let (obs, basis) = match decomposition {
        OutputDecomposition::Cp { rank } => {
            let mut d = cp_als(y, *rank, &cfg.als)?.decomposition;
            let obs = d.factors.remove(0);
            (
                obs,
                OutputBasis::Cp {
                    weights: d.weights,
                    factors: d.factors,
                },
            )
        }
        OutputDecomposition::Tucker { ranks } => {
            if ranks.len() != y.ndim() {
                return Err(invalid(format!(
                    "output Tucker ranks {ranks:?} need one entry per mode of Y {:?}",
                    y.shape()
                )));
            }
            let mut d = tucker_als(y, ranks, &cfg.als)?.decomposition;
            let obs = d.factors.remove(0);
            (
                obs,
                OutputBasis::Tucker {
                    core: d.core,
                    factors: d.factors,
                },
            )
        }
    };
    let targets: Vec<Vec<T>> = (0..obs.cols()).map(|r| obs.column(r)).collect();
    Ok(TensorOutputModel::LowRank {
        output_shape: y.feature_shape().to_vec(),
        basis,
        models: fit_columns(x, &targets, &cfg.boosting)?,
    })
}

/// Dispatches on `cfg.approach`.
pub fn fit_tensor_output<T: Scalar>(x: &DenseTensor<T>, y: &DenseTensor<T>, cfg: &OutputConfig) -> Result<TensorOutputModel<T>> {
    match cfg.approach {
        OutputApproach::Entrywise => fit_entrywise(x, y, cfg),
        OutputApproach::LowRank { .. } => fit_lowrank(x, y, cfg),
    }
}

fn predict_columns<T: Scalar>(models: &[BoostedModel<T>], x: &DenseTensor<T>) -> Result<Vec<Vec<T>>> {
    models.par_iter().map(|m| m.predict(x)).collect()
}

/// Output shape is `(n_test,) + output_shape`.
pub fn predict_tensor<T: Scalar>(model: &TensorOutputModel<T>, x: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let n = x.n_obs();
    let mut shape = vec![n];
    shape.extend_from_slice(model.output_shape());
    match model {
        TensorOutputModel::Entrywise { models, .. } => {
            let cols = predict_columns(models, x)?;
            let p = cols.len();
            let mut data = vec![T::zero(); n * p];
            for (e, col) in cols.iter().enumerate() {
                for (i, &v) in col.iter().enumerate() {
                    data[i * p + e] = v;
                }
            }
            DenseTensor::new(shape, data)
        }
        TensorOutputModel::LowRank { basis, models, .. } => {
            let cols = predict_columns(models, x)?;
            basis.reconstruct(&Matrix::from_columns(n, &cols)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::tree::GrowConfig;

    fn inputs(n: usize, seed: u64) -> DenseTensor<f64> {
        let mut rng = SplitMix64::new(seed);
        DenseTensor::from_fn(vec![n, 3, 2], |_| rng.uniform()).unwrap()
    }

    fn boosting() -> BoostingConfig {
        BoostingConfig {
            tree: GrowConfig {
                max_depth: 2,
                min_samples_leaf: 2,
                ..GrowConfig::default()
            },
            ..BoostingConfig::default()
        }
    }

    #[test]
    fn identical_columns_identical_predictions() {
        let x = inputs(30, 1);
        let col: Vec<f64> = (0..30).map(|i| x.row(i)[0] * 2.0).collect();
        let y = DenseTensor::from_fn(vec![30, 4], |ix| col[ix[0]]).unwrap();
        let m = fit_entrywise(&x, &y, &OutputConfig::entrywise(boosting())).unwrap();
        let p = m.predict(&x).unwrap();
        assert_eq!(p.shape(), &[30, 4]);
        for i in 0..30 {
            assert!(p.row(i).iter().all(|&v| v == p.row(i)[0]));
        }
    }

    #[test]
    fn single_entry_matches_boosting() {
        let x = inputs(25, 2);
        let col: Vec<f64> = (0..25).map(|i| x.row(i)[3]).collect();
        let y = DenseTensor::new(vec![25, 1], col.clone()).unwrap();
        let cfg = OutputConfig::entrywise(boosting());
        let m = fit_entrywise(&x, &y, &cfg).unwrap();
        let mut c = boosting();
        c.seed = derive_seed(0, 0);
        let direct = fit_boosting(&x, &col, &c).unwrap().predict(&x).unwrap();
        assert_eq!(m.predict(&x).unwrap().data(), direct.as_slice());
    }

    #[test]
    fn lowrank_basis_reproduces_decomposition() {
        let mut rng = SplitMix64::new(3);
        let y = DenseTensor::from_fn(vec![12, 3, 2], |_| rng.uniform()).unwrap();
        let d = cp_als(&y, 2, &AlsConfig::default()).unwrap().decomposition;
        let basis = OutputBasis::Cp {
            weights: d.weights.clone(),
            factors: d.factors[1..].to_vec(),
        };
        assert_eq!(basis.reconstruct(&d.factors[0]).unwrap(), d.reconstruct().unwrap());

        let t = tucker_als(&y, &[3, 2, 2], &AlsConfig::default()).unwrap().decomposition;
        let basis = OutputBasis::Tucker {
            core: t.core.clone(),
            factors: t.factors[1..].to_vec(),
        };
        assert_eq!(basis.reconstruct(&t.factors[0]).unwrap(), t.reconstruct().unwrap());
    }

    #[test]
    fn zero_weight_basis_predicts_zero() {
        let basis = OutputBasis::Cp {
            weights: vec![0.0],
            factors: vec![Matrix::new(3, 1, vec![1.0, 0.0, 0.0]).unwrap()],
        };
        let obs = Matrix::new(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(basis.reconstruct(&obs).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lowrank_rank_one_output() {
        let x = inputs(20, 4);
        let a: Vec<f64> = (0..20).map(|i| 1.0 + x.row(i)[0]).collect();
        let b = [1.0, -2.0, 0.5];
        let y = DenseTensor::from_fn(vec![20, 3], |ix| a[ix[0]] * b[ix[1]]).unwrap();
        let d = cp_als(&y, 1, &AlsConfig::default()).unwrap().decomposition;
        let err = y.sub(&d.reconstruct().unwrap()).unwrap().frobenius_norm();
        assert!(err < 1e-8);
        let cfg = OutputConfig::lowrank(OutputDecomposition::Cp { rank: 1 }, boosting());
        let m = fit_lowrank(&x, &y, &cfg).unwrap();
        let p = m.predict(&inputs(5, 9)).unwrap();
        assert_eq!(p.shape(), &[5, 3]);
        let tucker = OutputConfig::lowrank(OutputDecomposition::tucker_uniform(1, 2), boosting());
        assert_eq!(fit_tensor_output(&x, &y, &tucker).unwrap().predict(&x).unwrap().shape(), &[20, 3]);
    }

    #[test]
    fn rejects_bad_configs() {
        let x = inputs(10, 5);
        let y = DenseTensor::from_fn(vec![10, 2], |ix| ix[1] as f64).unwrap();
        let bad = OutputConfig::lowrank(OutputDecomposition::Cp { rank: 0 }, boosting());
        assert!(fit_lowrank(&x, &y, &bad).is_err());
        let wrong_len = OutputConfig::lowrank(OutputDecomposition::Tucker { ranks: vec![1] }, boosting());
        assert!(fit_lowrank(&x, &y, &wrong_len).is_err());
        let y_short = DenseTensor::from_fn(vec![9, 2], |_| 1.0).unwrap();
        assert!(fit_entrywise(&x, &y_short, &OutputConfig::entrywise(boosting())).is_err());
    }
}
