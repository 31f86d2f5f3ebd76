//! Gradient boosting and random forests of tensor trees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};
use crate::rng::{derive_seed, SplitMix64};
use crate::scalar::{count, mean, Scalar};
use crate::split::SearchStrategy;
use crate::tensor::DenseTensor;
use crate::tree::{grow, grow_with_root, prune, tree_predict, GrowConfig, PruneConfig, TensorTree};

fn default_estimators() -> usize {
    10
}

fn default_learning_rate() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingConfig {
    #[serde(default = "default_estimators")]
    pub n_estimators: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Fraction of rows drawn (weighted, with replacement) for each stage;
    /// 0 fits every stage on all rows.
    #[serde(default)]
    pub p_resample: f64,
    #[serde(default)]
    pub tree: GrowConfig,
    #[serde(default)]
    pub prune: Option<PruneConfig>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BoostingConfig {
    fn default() -> Self {
        Self {
            n_estimators: default_estimators(),
            learning_rate: default_learning_rate(),
            p_resample: 0.0,
            tree: GrowConfig::default(),
            prune: None,
            seed: 0,
        }
    }
}

impl BoostingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(invalid("n_estimators must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(invalid(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.p_resample) {
            return Err(invalid(format!(
                "p_resample must lie in [0, 1], got {}",
                self.p_resample
            )));
        }
        if let Some(p) = &self.prune {
            p.validate()?;
        }
        self.tree.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct BoostStage<T> {
    pub tree: TensorTree<T>,
    pub eta: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct BoostedModel<T> {
    pub feature_shape: Vec<usize>,
    pub f0: T,
    pub stages: Vec<BoostStage<T>>,
}

impl<T: Scalar> BoostedModel<T> {
    /// `F0 + sum_b eta_b g_b(X)`, accumulated stage by stage.
    pub fn predict(&self, x: &DenseTensor<T>) -> Result<Vec<T>> {
        check_features(&self.feature_shape, x)?;
        let mut out = vec![self.f0; x.n_obs()];
        for s in &self.stages {
            for (o, g) in out.iter_mut().zip(tree_predict(&s.tree, x)?) {
                *o += s.eta * g;
            }
        }
        Ok(out)
    }
}

/// Per-stage record of a boosting fit. `residuals[b]` is the residual vector
/// the `b`-th tree was fit to; the last entry is the final training residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingTrace<T> {
    /// Training MSE of `F_0, F_1, ..., F_m`.
    pub train_mse: Vec<f64>,
    pub residuals: Vec<Vec<T>>,
}

fn check_features<T: Scalar>(shape: &[usize], x: &DenseTensor<T>) -> Result<()> {
    if x.ndim() < 2 || x.feature_shape() != shape {
        return Err(mismatch(format!(
            "model expects feature shape {shape:?}, got {:?}",
            &x.shape()[1.min(x.ndim())..]
        )));
    }
    Ok(())
}

fn check_rows<T: Scalar>(x: &DenseTensor<T>, y: &[T]) -> Result<()> {
    if y.is_empty() {
        return Err(invalid("cannot fit an ensemble on zero samples"));
    }
    if x.ndim() < 2 || x.n_obs() != y.len() {
        return Err(mismatch(format!(
            "X has shape {:?} but y has {} entries",
            x.shape(),
            y.len()
        )));
    }
    Ok(())
}

fn mse_of<T: Scalar>(r: &[T]) -> f64 {
    r.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>() / r.len() as f64
}

/// Draws `size` indices with replacement, proportionally to `weights`.
fn weighted_sample(weights: &[f64], size: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cdf.push(acc);
    }
    let mut out: Vec<usize> = (0..size)
        .map(|_| {
            let u = rng.uniform() * acc;
            cdf.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect();
    out.sort_unstable();
    out
}

pub fn fit_boosting<T: Scalar>(x: &DenseTensor<T>, y: &[T], cfg: &BoostingConfig) -> Result<BoostedModel<T>> {
    fit_boosting_traced(x, y, cfg).map(|(m, _)| m)
}

pub fn fit_boosting_traced<T: Scalar>(
    x: &DenseTensor<T>,
    y: &[T],
    cfg: &BoostingConfig,
) -> Result<(BoostedModel<T>, BoostingTrace<T>)> {
    cfg.validate()?;
    check_rows(x, y)?;
    let n = y.len();
    let f0 = mean(y);
    let eta = T::real(cfg.learning_rate);
    let mut fitted = vec![f0; n];
    let mut residual: Vec<T> = y.iter().map(|&v| v - f0).collect();
    let mut trace = BoostingTrace {
        train_mse: vec![mse_of(&residual)],
        residuals: Vec::with_capacity(cfg.n_estimators + 1),
    };
    // Sampling weights live in the log domain: multiplying by exp(|r|) is an
    // addition there, and normalizing subtracts the log-sum-exp.
    let mut log_w = vec![-(n as f64).ln(); n];
    let mut rng = SplitMix64::new(derive_seed(cfg.seed, u64::MAX));
    let sample_size = (cfg.p_resample * n as f64).ceil() as usize;
    let mut stages = Vec::with_capacity(cfg.n_estimators);

    for b in 0..cfg.n_estimators {
        let mut tree_cfg = cfg.tree.clone();
        tree_cfg.strategy.seed = derive_seed(cfg.seed, b as u64);
        let tree = if cfg.p_resample > 0.0 {
            let weights: Vec<f64> = log_w.iter().map(|l| l.exp()).collect();
            let rows = weighted_sample(&weights, sample_size.max(1), &mut rng);
            let xs = x.select_obs(&rows)?;
            let rs: Vec<T> = rows.iter().map(|&i| residual[i]).collect();
            for (l, r) in log_w.iter_mut().zip(&residual) {
                *l += r.as_f64().abs();
            }
            let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + log_w.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
            for l in &mut log_w {
                *l -= lse;
            }
            grow(&xs, &rs, &tree_cfg)?
        } else {
            grow(x, &residual, &tree_cfg)?
        };
        let tree = match &cfg.prune {
            Some(p) => prune(&tree, p)?,
            None => tree,
        };
        let g = tree_predict(&tree, x)?;
        trace.residuals.push(residual.clone());
        for i in 0..n {
            fitted[i] += eta * g[i];
            residual[i] = y[i] - fitted[i];
        }
        trace.train_mse.push(mse_of(&residual));
        stages.push(BoostStage { tree, eta });
    }
    trace.residuals.push(residual);
    Ok((
        BoostedModel {
            feature_shape: x.feature_shape().to_vec(),
            f0,
            stages,
        },
        trace,
    ))
}

fn default_trees() -> usize {
    100
}

fn default_forest_tau() -> f64 {
    1.0 / 3.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    #[serde(default)]
    pub tree: GrowConfig,
    /// Fraction of coordinates sampled by leverage score at each root.
    #[serde(default = "default_forest_tau")]
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: default_trees(),
            bootstrap: true,
            tree: GrowConfig::default(),
            tau: default_forest_tau(),
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(invalid("n_trees must be at least 1"));
        }
        SearchStrategy::leverage(self.tau, 0).validate()?;
        self.tree.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ForestModel<T> {
    pub feature_shape: Vec<usize>,
    pub trees: Vec<TensorTree<T>>,
}

impl<T: Scalar> ForestModel<T> {
    /// Arithmetic mean of the tree predictions.
    pub fn predict(&self, x: &DenseTensor<T>) -> Result<Vec<T>> {
        check_features(&self.feature_shape, x)?;
        if self.trees.is_empty() {
            return Err(invalid("forest has no trees"));
        }
        let mut out = vec![T::zero(); x.n_obs()];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(tree_predict(t, x)?) {
                *o += p;
            }
        }
        let k = count::<T>(self.trees.len());
        Ok(out.into_iter().map(|v| v / k).collect())
    }
}

pub fn fit_forest<T: Scalar>(x: &DenseTensor<T>, y: &[T], cfg: &ForestConfig) -> Result<ForestModel<T>> {
    cfg.validate()?;
    check_rows(x, y)?;
    let n = y.len();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(cfg.seed, t as u64);
            let mut tree_cfg = cfg.tree.clone();
            tree_cfg.strategy.seed = derive_seed(seed, 1);
            let root = SearchStrategy::leverage(cfg.tau, derive_seed(seed, 2));
            if cfg.bootstrap {
                let mut rng = SplitMix64::new(seed);
                let mut rows: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
                rows.sort_unstable();
                let ys: Vec<T> = rows.iter().map(|&i| y[i]).collect();
                grow_with_root(&x.select_obs(&rows)?, &ys, &tree_cfg, Some(root))
            } else {
                grow_with_root(x, y, &tree_cfg, Some(root))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        feature_shape: x.feature_shape().to_vec(),
        trees,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum EnsembleModel<T> {
    Boosted(BoostedModel<T>),
    Forest(ForestModel<T>),
}

impl<T: Scalar> From<BoostedModel<T>> for EnsembleModel<T> {
    fn from(m: BoostedModel<T>) -> Self {
        EnsembleModel::Boosted(m)
    }
}

impl<T: Scalar> From<ForestModel<T>> for EnsembleModel<T> {
    fn from(m: ForestModel<T>) -> Self {
        EnsembleModel::Forest(m)
    }
}

pub fn ensemble_predict<T: Scalar>(model: &EnsembleModel<T>, x: &DenseTensor<T>) -> Result<Vec<T>> {
    match model {
        EnsembleModel::Boosted(m) => m.predict(x),
        EnsembleModel::Forest(m) => m.predict(x),
    }
}
