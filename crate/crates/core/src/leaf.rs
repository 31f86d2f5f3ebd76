//! Leaf predictors: sample mean and low-rank (CP or Tucker) linear
//! regression on the feature modes of a stacked tensor.
//!
//! A CP leaf models `y_i = c + <X_i, B>` with `B = sum_r u^1_r o ... o u^K_r`;
//! a Tucker leaf uses `B = G x_1 A_1 ... x_K A_K`. Both are fitted by block
//! coordinate least squares: each block (one factor matrix, or the Tucker
//! core) is solved exactly with the others fixed, jointly with the intercept.

use serde::{Deserialize, Serialize};

use crate::decomposition::{AlsConfig, CpDecomposition, TuckerDecomposition};
use crate::error::{invalid, mismatch, Result};
use crate::linalg::{leading_left_singular_vectors, least_squares, thin_qr};
use crate::rng::SplitMix64;
use crate::scalar::{count, mean, Scalar};
use crate::tensor::{dot, khatri_rao_all, DenseTensor, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LeafKind {
    Mean,
    Cp { rank: usize },
    Tucker { ranks: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafModelSpec {
    pub kind: LeafKind,
    #[serde(default)]
    pub als: AlsConfig,
    #[serde(default = "default_true")]
    pub intercept: bool,
}

fn default_true() -> bool {
    true
}

impl Default for LeafModelSpec {
    fn default() -> Self {
        Self::mean()
    }
}

impl LeafModelSpec {
    pub fn mean() -> Self {
        Self {
            kind: LeafKind::Mean,
            als: AlsConfig::default(),
            intercept: true,
        }
    }

    pub fn cp(rank: usize) -> Self {
        Self {
            kind: LeafKind::Cp { rank },
            ..Self::mean()
        }
    }

    pub fn tucker(ranks: Vec<usize>) -> Self {
        Self {
            kind: LeafKind::Tucker { ranks },
            ..Self::mean()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.als.validate()?;
        match &self.kind {
            LeafKind::Mean => Ok(()),
            LeafKind::Cp { rank } if *rank == 0 => Err(invalid("CP_reg_rank must be at least 1")),
            LeafKind::Tucker { ranks } if ranks.is_empty() || ranks.contains(&0) => {
                Err(invalid("Tucker_reg_rank entries must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    /// Number of factor-matrix parameters for the given feature shape.
    pub fn factor_params(&self, feature_shape: &[usize]) -> usize {
        match &self.kind {
            LeafKind::Mean => 0,
            LeafKind::Cp { rank } => rank * feature_shape.iter().sum::<usize>(),
            LeafKind::Tucker { ranks } => feature_shape.iter().zip(ranks).map(|(d, r)| d * r).sum(),
        }
    }

    /// Smallest sample count for which a regression leaf is attempted.
    pub fn min_viable_samples(&self, feature_shape: &[usize]) -> usize {
        match self.kind {
            LeafKind::Mean => 1,
            _ => {
                let cells: usize = feature_shape.iter().product();
                2.max(self.factor_params(feature_shape) / cells.max(1) + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum LeafBody<T> {
    Mean {
        value: T,
    },
    Cp {
        intercept: T,
        coefficient: CpDecomposition<T>,
    },
    Tucker {
        intercept: T,
        coefficient: TuckerDecomposition<T>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct FittedLeafModel<T> {
    pub model: LeafBody<T>,
    pub feature_shape: Vec<usize>,
    pub n_samples: usize,
    /// True when a regression leaf was requested but too few samples reached it.
    #[serde(default)]
    pub fallback: bool,
    /// Sum of squared training residuals.
    pub train_sse: T,
    /// Training loss after each alternating sweep (empty for mean leaves).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trace: Vec<T>,
}

impl<T: Scalar> FittedLeafModel<T> {
    pub fn train_mse(&self) -> T {
        self.train_sse / count(self.n_samples)
    }

    /// Dense coefficient tensor over the feature modes (None for mean leaves).
    pub fn coefficient(&self) -> Result<Option<DenseTensor<T>>> {
        match &self.model {
            LeafBody::Mean { .. } => Ok(None),
            LeafBody::Cp { coefficient, .. } => coefficient.reconstruct().map(Some),
            LeafBody::Tucker { coefficient, .. } => coefficient.reconstruct().map(Some),
        }
    }

    pub fn intercept(&self) -> T {
        match &self.model {
            LeafBody::Mean { value } => *value,
            LeafBody::Cp { intercept, .. } | LeafBody::Tucker { intercept, .. } => *intercept,
        }
    }

    pub fn predict(&self, x: &DenseTensor<T>) -> Result<Vec<T>> {
        predict_leaf(self, x)
    }
}

/// Sum of the elementwise product of two equally shaped tensors.
pub fn contract<T: Scalar>(x: &DenseTensor<T>, b: &DenseTensor<T>) -> Result<T> {
    x.inner(b)
}

fn check_xy<T: Scalar>(x: &DenseTensor<T>, y: &[T]) -> Result<()> {
    if y.is_empty() {
        return Err(invalid("cannot fit a leaf on zero samples"));
    }
    if x.n_obs() != y.len() {
        return Err(mismatch(format!(
            "{} observations but {} responses",
            x.n_obs(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("responses contain non-finite values"));
    }
    Ok(())
}

pub fn fit_leaf<T: Scalar>(x: &DenseTensor<T>, y: &[T], spec: &LeafModelSpec) -> Result<FittedLeafModel<T>> {
    check_xy(x, y)?;
    spec.validate()?;
    let feature_shape = x.feature_shape().to_vec();
    if spec.kind != LeafKind::Mean {
        if feature_shape.is_empty() {
            return Err(invalid("regression leaves need at least one feature mode"));
        }
        if !x.is_finite() {
            return Err(invalid("inputs contain non-finite values"));
        }
    }
    if let LeafKind::Tucker { ranks } = &spec.kind {
        if ranks.len() != feature_shape.len() {
            return Err(invalid(format!(
                "{} Tucker_reg_rank entries for {} feature modes",
                ranks.len(),
                feature_shape.len()
            )));
        }
        if let Some((r, d)) = ranks.iter().zip(&feature_shape).find(|(r, d)| r > d) {
            return Err(invalid(format!("Tucker_reg_rank {r} exceeds feature extent {d}")));
        }
    }
    let n = y.len();
    let viable = n >= spec.min_viable_samples(&feature_shape);
    match (&spec.kind, viable) {
        (LeafKind::Cp { rank }, true) => fit_cp(x, y, *rank, spec),
        (LeafKind::Tucker { ranks }, true) => fit_tucker(x, y, ranks, spec),
        (kind, _) => {
            let mut m = fit_mean(y, feature_shape);
            m.fallback = *kind != LeafKind::Mean;
            Ok(m)
        }
    }
}

fn fit_mean<T: Scalar>(y: &[T], feature_shape: Vec<usize>) -> FittedLeafModel<T> {
    let value = mean(y);
    let train_sse = y.iter().map(|&v| (v - value) * (v - value)).sum();
    FittedLeafModel {
        model: LeafBody::Mean { value },
        feature_shape,
        n_samples: y.len(),
        fallback: false,
        train_sse,
        loss_trace: Vec::new(),
    }
}

/// Response-weighted cross-covariance `sum_i (y_i - mean y) X_i`, used to
/// seed the factor matrices.
fn cross_covariance<T: Scalar>(x: &DenseTensor<T>, y: &[T]) -> Result<DenseTensor<T>> {
    let ybar = mean(y);
    let f = x.feature_len();
    let mut acc = vec![T::zero(); f];
    for (i, &yi) in y.iter().enumerate() {
        let w = yi - ybar;
        for (a, &v) in acc.iter_mut().zip(x.row(i)) {
            *a += w * v;
        }
    }
    DenseTensor::new(x.feature_shape().to_vec(), acc)
}

/// Rows `vec(X_i,(k) M)` for every observation, where `X_i,(k)` is the
/// mode-`k` unfolding of observation `i` (feature mode `k`) and `M` has one
/// row per column of that unfolding. Entry order within a row is `j * R + r`.
fn block_rows<T: Scalar>(x: &DenseTensor<T>, k: usize, m: &Matrix<T>) -> Result<Vec<Vec<T>>> {
    let unf = x.unfold(k + 1)?;
    let n = x.n_obs();
    let dk = unf.rows();
    let p = m.rows();
    let r = m.cols();
    let mt = m.transpose();
    let mut rows = vec![vec![T::zero(); dk * r]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for j in 0..dk {
            let seg = &unf.row(j)[i * p..(i + 1) * p];
            for c in 0..r {
                row[j * r + c] = dot(seg, mt.row(c));
            }
        }
    }
    Ok(rows)
}

/// Solves the block least squares problem; returns (block coefficients, intercept).
fn solve_block<T: Scalar>(rows: Vec<Vec<T>>, y: &[T], intercept: bool) -> Result<(Vec<T>, T)> {
    let n = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    let width = p + usize::from(intercept);
    let mut data = Vec::with_capacity(n * width);
    for row in rows {
        data.extend(row);
        if intercept {
            data.push(T::one());
        }
    }
    let mut beta = least_squares(&Matrix::new(n, width, data)?, y)?;
    let c = if intercept { beta.pop().unwrap_or(T::zero()) } else { T::zero() };
    Ok((beta, c))
}

fn sse_of<T: Scalar>(x: &DenseTensor<T>, y: &[T], b: &DenseTensor<T>, c: T) -> T {
    y.iter()
        .enumerate()
        .map(|(i, &yi)| {
            let e = yi - (c + dot(x.row(i), b.data()));
            e * e
        })
        .sum()
}

fn stop<T: Scalar>(prev: T, loss: T, tol: f64) -> bool {
    loss == T::zero() || (prev.is_finite() && (prev - loss).abs() <= T::real(tol) * prev)
}

fn init_factor<T: Scalar>(c: &DenseTensor<T>, k: usize, rank: usize, rng: &mut SplitMix64) -> Result<Matrix<T>> {
    let d = c.shape()[k];
    if rank <= d {
        return leading_left_singular_vectors(&c.unfold(k)?, rank);
    }
    let mut m = Matrix::zeros(d, rank);
    for r in 0..rank {
        let col: Vec<f64> = (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for (i, v) in col.into_iter().enumerate() {
            m.set(i, r, T::real(v / norm));
        }
    }
    Ok(m)
}

fn fit_cp<T: Scalar>(x: &DenseTensor<T>, y: &[T], rank: usize, spec: &LeafModelSpec) -> Result<FittedLeafModel<T>> {
    let shape = x.feature_shape().to_vec();
    let k_modes = shape.len();
    let cov = cross_covariance(x, y)?;
    let mut rng = SplitMix64::new(spec.als.seed);
    let mut factors: Vec<Matrix<T>> = (0..k_modes)
        .map(|k| init_factor(&cov, k, rank, &mut rng))
        .collect::<Result<_>>()?;
    let mut c = T::zero();
    let mut trace = Vec::new();
    let mut prev = T::infinity();

    for _ in 0..spec.als.max_iterations {
        for k in 0..k_modes {
            let others: Vec<&Matrix<T>> = (0..k_modes).filter(|&l| l != k).map(|l| &factors[l]).collect();
            let kr = khatri_rao_all(&others, rank)?;
            let (beta, c_new) = solve_block(block_rows(x, k, &kr)?, y, spec.intercept)?;
            factors[k] = Matrix::new(shape[k], rank, beta)?;
            c = c_new;
        }
        balance_columns(&mut factors, rank);
        let b = cp_from_factors(&factors, rank).reconstruct()?;
        let loss = sse_of(x, y, &b, c);
        trace.push(loss);
        if stop(prev, loss, spec.als.rel_tolerance) {
            break;
        }
        prev = loss;
    }
    let coefficient = cp_from_factors(&factors, rank);
    let train_sse = sse_of(x, y, &coefficient.reconstruct()?, c);
    Ok(FittedLeafModel {
        model: LeafBody::Cp { intercept: c, coefficient },
        feature_shape: shape,
        n_samples: y.len(),
        fallback: false,
        train_sse,
        loss_trace: trace,
    })
}

/// Rescales column `r` of every factor to the geometric mean of their norms.
fn balance_columns<T: Scalar>(factors: &mut [Matrix<T>], rank: usize) {
    let k = factors.len();
    for r in 0..rank {
        let norms: Vec<T> = factors.iter().map(|f| f.column_norm(r)).collect();
        if norms.iter().any(|&v| !(v > T::zero())) {
            continue;
        }
        let log_mean = norms.iter().map(|v| v.ln()).sum::<T>() / count(k);
        let target = log_mean.exp();
        for (f, &nrm) in factors.iter_mut().zip(&norms) {
            let s = target / nrm;
            for i in 0..f.rows() {
                let v = f.get(i, r) * s;
                f.set(i, r, v);
            }
        }
    }
}

/// Normalized CP form of a set of unscaled factor matrices.
fn cp_from_factors<T: Scalar>(factors: &[Matrix<T>], rank: usize) -> CpDecomposition<T> {
    let mut weights = vec![T::one(); rank];
    let mut out: Vec<Matrix<T>> = factors.to_vec();
    for r in 0..rank {
        for f in out.iter_mut() {
            let nrm = f.column_norm(r);
            if nrm > T::zero() {
                for i in 0..f.rows() {
                    let v = f.get(i, r) / nrm;
                    f.set(i, r, v);
                }
                weights[r] *= nrm;
            } else {
                let mut e = vec![T::zero(); f.rows()];
                e[0] = T::one();
                f.set_column(r, &e);
                weights[r] = T::zero();
            }
        }
    }
    CpDecomposition { weights, factors: out }
}

fn fit_tucker<T: Scalar>(
    x: &DenseTensor<T>,
    y: &[T],
    ranks: &[usize],
    spec: &LeafModelSpec,
) -> Result<FittedLeafModel<T>> {
    let shape = x.feature_shape().to_vec();
    let k_modes = shape.len();
    let cov = cross_covariance(x, y)?;
    let mut rng = SplitMix64::new(spec.als.seed);
    let mut factors: Vec<Matrix<T>> = (0..k_modes)
        .map(|k| init_factor(&cov, k, ranks[k], &mut rng))
        .collect::<Result<_>>()?;
    let mut core = DenseTensor::zeros(ranks.to_vec())?;
    let mut c = T::zero();
    let mut trace = Vec::new();
    let mut prev = T::infinity();

    for _ in 0..spec.als.max_iterations {
        // Core block: design rows are vec(X_i x_all A^T).
        let projected = project_features(x, &factors, None)?;
        let rows = (0..x.n_obs()).map(|i| projected.row(i).to_vec()).collect();
        let (g, c_new) = solve_block(rows, y, spec.intercept)?;
        core = DenseTensor::new(ranks.to_vec(), g)?;
        c = c_new;

        for k in 0..k_modes {
            let partial = project_features(x, &factors, Some(k))?;
            let gk = core.unfold(k)?;
            let (a, c_new) = solve_block(block_rows(&partial, k, &gk.transpose())?, y, spec.intercept)?;
            c = c_new;
            let a = Matrix::new(shape[k], ranks[k], a)?;
            // Keep A_k orthonormal; the triangular factor moves into the core.
            let (q, r) = thin_qr(&a)?;
            factors[k] = q;
            core = core.mode_product(&r, k)?;
        }
        let decomposition = TuckerDecomposition {
            core: core.clone(),
            factors: factors.clone(),
        };
        let loss = sse_of(x, y, &decomposition.reconstruct()?, c);
        trace.push(loss);
        if stop(prev, loss, spec.als.rel_tolerance) {
            break;
        }
        prev = loss;
    }
    let coefficient = TuckerDecomposition { core, factors };
    let train_sse = sse_of(x, y, &coefficient.reconstruct()?, c);
    Ok(FittedLeafModel {
        model: LeafBody::Tucker { intercept: c, coefficient },
        feature_shape: shape,
        n_samples: y.len(),
        fallback: false,
        train_sse,
        loss_trace: trace,
    })
}

/// Multiplies each feature mode (except `skip`) of the stacked tensor by `A^T`.
fn project_features<T: Scalar>(x: &DenseTensor<T>, factors: &[Matrix<T>], skip: Option<usize>) -> Result<DenseTensor<T>> {
    let mut t = x.clone();
    for (k, f) in factors.iter().enumerate() {
        if Some(k) != skip {
            t = t.mode_product(&f.transpose(), k + 1)?;
        }
    }
    Ok(t)
}

pub fn predict_leaf<T: Scalar>(m: &FittedLeafModel<T>, x: &DenseTensor<T>) -> Result<Vec<T>> {
    if x.ndim() < 1 || x.feature_shape() != m.feature_shape.as_slice() {
        return Err(mismatch(format!(
            "leaf trained on feature shape {:?}, got {:?}",
            m.feature_shape,
            x.feature_shape()
        )));
    }
    let n = x.n_obs();
    match &m.model {
        LeafBody::Mean { value } => Ok(vec![*value; n]),
        _ => {
            let b = m.coefficient()?.unwrap_or_else(|| unreachable!());
            let c = m.intercept();
            Ok((0..n).map(|i| c + dot(x.row(i), b.data())).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::outer_rank1;
    use proptest::prelude::*;

    fn random_x(n: usize, shape: &[usize], seed: u64) -> DenseTensor<f64> {
        let mut rng = SplitMix64::new(seed);
        let mut full = vec![n];
        full.extend_from_slice(shape);
        DenseTensor::from_fn(full, |_| rng.uniform_range(-1.0, 1.0)).unwrap()
    }

    fn responses(x: &DenseTensor<f64>, b: &DenseTensor<f64>) -> Vec<f64> {
        (0..x.n_obs()).map(|i| dot(x.row(i), b.data())).collect()
    }

    fn rmse(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn contract_cases() {
        let x = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ones = DenseTensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        assert_eq!(contract(&x, &ones).unwrap(), 10.0);
        let pick = DenseTensor::new(vec![2, 2], vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(contract(&x, &pick).unwrap(), 3.0);
        let zero = DenseTensor::zeros(vec![2, 2]).unwrap();
        assert_eq!(contract(&x, &zero).unwrap(), 0.0);
        let other = DenseTensor::zeros(vec![4]).unwrap();
        assert!(contract(&x, &other).is_err());
    }

    #[test]
    fn mean_leaf() {
        let x = random_x(3, &[2, 2], 0);
        let m = fit_leaf(&x, &[1.0, 2.0, 3.0], &LeafModelSpec::mean()).unwrap();
        assert_eq!(predict_leaf(&m, &random_x(5, &[2, 2], 1)).unwrap(), vec![2.0; 5]);
        assert_eq!(m.train_sse, 2.0);
    }

    #[test]
    fn cp_rank1_noiseless_recovery() {
        let b0 = outer_rank1(&[vec![1.0, -0.5, 0.25, 0.0, 2.0], vec![0.5, 1.0, -1.0, 0.3]]).unwrap();
        let x = random_x(200, &[5, 4], 2);
        let y = responses(&x, &b0);
        let m = fit_leaf(&x, &y, &LeafModelSpec::cp(1)).unwrap();
        assert!(!m.fallback);
        assert!(rmse(&predict_leaf(&m, &x).unwrap(), &y) < 1e-4);
        let x_test = random_x(100, &[5, 4], 3);
        let y_test = responses(&x_test, &b0);
        assert!(rmse(&predict_leaf(&m, &x_test).unwrap(), &y_test) < 1e-3);
    }

    #[test]
    fn tucker_noiseless_recovery() {
        let b0 = outer_rank1(&[vec![1.0, -0.5, 0.25, 0.0, 2.0], vec![0.5, 1.0, -1.0, 0.3]]).unwrap();
        let x = random_x(150, &[5, 4], 4);
        let y: Vec<f64> = responses(&x, &b0).iter().map(|v| v + 3.0).collect();
        let m = fit_leaf(&x, &y, &LeafModelSpec::tucker(vec![2, 2])).unwrap();
        assert!(rmse(&predict_leaf(&m, &x).unwrap(), &y) < 1e-4);
        if let LeafBody::Tucker { coefficient, intercept } = &m.model {
            assert!((intercept - 3.0).abs() < 1e-4);
            for f in &coefficient.factors {
                assert!(f.gram().sub(&Matrix::identity(f.cols())).unwrap().frobenius_norm() < 1e-8);
            }
        } else {
            panic!("expected a Tucker leaf");
        }
    }

    #[test]
    fn constant_response_goes_to_intercept() {
        let x = random_x(40, &[3, 3], 5);
        let y = vec![7.0; 40];
        for spec in [LeafModelSpec::cp(2), LeafModelSpec::tucker(vec![2, 2])] {
            let m = fit_leaf(&x, &y, &spec).unwrap();
            assert!((m.intercept() - 7.0).abs() < 1e-6);
            assert!(m.coefficient().unwrap().unwrap().frobenius_norm() < 1e-6);
        }
    }

    #[test]
    fn zero_coefficient_predicts_intercept() {
        let m = FittedLeafModel {
            model: LeafBody::Cp {
                intercept: 1.5,
                coefficient: CpDecomposition {
                    weights: vec![0.0],
                    factors: vec![Matrix::new(2, 1, vec![1.0, 0.0]).unwrap(), Matrix::new(2, 1, vec![1.0, 0.0]).unwrap()],
                },
            },
            feature_shape: vec![2, 2],
            n_samples: 1,
            fallback: false,
            train_sse: 0.0,
            loss_trace: vec![],
        };
        assert_eq!(predict_leaf(&m, &random_x(3, &[2, 2], 9)).unwrap(), vec![1.5; 3]);
        assert!(predict_leaf(&m, &random_x(3, &[2, 3], 9)).is_err());
    }

    #[test]
    fn small_leaves_fall_back_to_mean() {
        // CP rank 3 on 4x4 features: 24 params / 16 cells + 1 = 2 samples needed.
        let spec = LeafModelSpec::cp(3);
        assert_eq!(spec.min_viable_samples(&[4, 4]), 2);
        let x = random_x(1, &[4, 4], 0);
        let m = fit_leaf(&x, &[3.0], &spec).unwrap();
        assert!(m.fallback);
        assert_eq!(m.intercept(), 3.0);
        assert_eq!(LeafModelSpec::cp(20).min_viable_samples(&[2, 2]), 21);
    }

    #[test]
    fn rejects_bad_input() {
        let x = random_x(2, &[2, 2], 0);
        assert!(fit_leaf(&x, &[], &LeafModelSpec::mean()).is_err());
        assert!(fit_leaf(&x, &[1.0, f64::NAN], &LeafModelSpec::mean()).is_err());
        assert!(fit_leaf(&x, &[1.0], &LeafModelSpec::mean()).is_err());
        assert!(fit_leaf(&x, &[1.0, 2.0], &LeafModelSpec::tucker(vec![3, 1])).is_err());
    }

    #[test]
    fn sweeps_do_not_increase_loss() {
        let x = random_x(60, &[4, 3], 6);
        let mut rng = SplitMix64::new(1);
        let y: Vec<f64> = (0..60).map(|_| rng.standard_normal()).collect();
        for spec in [LeafModelSpec::cp(2), LeafModelSpec::tucker(vec![2, 2])] {
            let m = fit_leaf(&x, &y, &spec).unwrap();
            for w in m.loss_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{w:?}");
            }
        }
    }

    #[test]
    fn full_rank_cp_beats_mean() {
        let x = random_x(80, &[3, 3], 7);
        let mut rng = SplitMix64::new(2);
        let y: Vec<f64> = (0..80).map(|_| rng.uniform()).collect();
        let mean_leaf = fit_leaf(&x, &y, &LeafModelSpec::mean()).unwrap();
        let cp_leaf = fit_leaf(&x, &y, &LeafModelSpec::cp(3)).unwrap();
        assert!(cp_leaf.train_sse <= mean_leaf.train_sse + 1e-9);
    }

    proptest! {
        #[test]
        fn mean_leaf_minimizes_constant_sse(y in proptest::collection::vec(-5.0f64..5.0, 1..20), c in -6.0f64..6.0) {
            let x = random_x(y.len(), &[2, 2], 0);
            let m = fit_leaf(&x, &y, &LeafModelSpec::mean()).unwrap();
            let alt: f64 = y.iter().map(|v| (v - c) * (v - c)).sum();
            prop_assert!(m.train_sse <= alt + 1e-12);
        }

        #[test]
        fn mean_leaf_permutation_invariant(y in proptest::collection::vec(-5.0f64..5.0, 2..20), seed in 0u64..100) {
            let x = random_x(y.len(), &[2, 2], seed);
            let mut idx: Vec<usize> = (0..y.len()).collect();
            SplitMix64::new(seed).shuffle(&mut idx);
            let yp: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let xp = x.select_obs(&idx).unwrap();
            let a = predict_leaf(&fit_leaf(&x, &y, &LeafModelSpec::mean()).unwrap(), &x).unwrap();
            let b = predict_leaf(&fit_leaf(&xp, &yp, &LeafModelSpec::mean()).unwrap(), &x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
            }
        }
    }
}
