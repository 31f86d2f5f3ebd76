//! CP and Tucker decompositions fitted by alternating least squares.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};
use crate::linalg::{leading_left_singular_vectors, solve_spd};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use crate::tensor::{khatri_rao_all, DenseTensor, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlsConfig {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            rel_tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if !(self.rel_tolerance >= 0.0) {
            return Err(invalid("rel_tolerance must be nonnegative"));
        }
        Ok(())
    }
}

/// Weighted sum of rank-1 tensors; every factor column has unit norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct CpDecomposition<T> {
    pub weights: Vec<T>,
    pub factors: Vec<Matrix<T>>,
}

/// Core tensor multiplied along each mode by a factor with orthonormal columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct TuckerDecomposition<T> {
    pub core: DenseTensor<T>,
    pub factors: Vec<Matrix<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum Decomposition<T> {
    Cp(CpDecomposition<T>),
    Tucker(TuckerDecomposition<T>),
}

/// Result of an ALS fit.
#[derive(Debug, Clone)]
pub struct AlsFit<D> {
    pub decomposition: D,
    pub converged: bool,
    /// Relative reconstruction error `||T - T_hat|| / ||T||` after each sweep.
    pub errors: Vec<f64>,
}

impl<T: Scalar> CpDecomposition<T> {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        let rank = self.rank();
        if self.factors.iter().any(|f| f.cols() != rank) {
            return Err(mismatch("CP factor column counts differ from the rank"));
        }
        let refs: Vec<&Matrix<T>> = self.factors.iter().collect();
        let kr = khatri_rao_all(&refs, rank)?;
        let data = (0..kr.rows())
            .map(|r| {
                kr.row(r)
                    .iter()
                    .zip(&self.weights)
                    .fold(T::zero(), |acc, (&k, &w)| acc + k * w)
            })
            .collect();
        DenseTensor::new(self.shape(), data)
    }
}

impl<T: Scalar> TuckerDecomposition<T> {
    pub fn ranks(&self) -> &[usize] {
        self.core.shape()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        let mut t = self.core.clone();
        for (q, f) in self.factors.iter().enumerate() {
            t = t.mode_product(f, q)?;
        }
        Ok(t)
    }
}

impl<T: Scalar> Decomposition<T> {
    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        match self {
            Decomposition::Cp(d) => d.reconstruct(),
            Decomposition::Tucker(d) => d.reconstruct(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            Decomposition::Cp(d) => d.shape(),
            Decomposition::Tucker(d) => d.shape(),
        }
    }
}

impl<T: Scalar> From<CpDecomposition<T>> for Decomposition<T> {
    fn from(d: CpDecomposition<T>) -> Self {
        Decomposition::Cp(d)
    }
}

impl<T: Scalar> From<TuckerDecomposition<T>> for Decomposition<T> {
    fn from(d: TuckerDecomposition<T>) -> Self {
        Decomposition::Tucker(d)
    }
}

pub fn reconstruct<T: Scalar>(d: &Decomposition<T>) -> Result<DenseTensor<T>> {
    d.reconstruct()
}

/// Squared Frobenius norm of `reconstruct(d) - t`.
pub fn approximation_error<T: Scalar>(t: &DenseTensor<T>, d: &Decomposition<T>) -> Result<T> {
    let shape = d.shape();
    if shape != t.shape() {
        return Err(mismatch(format!(
            "decomposition shape {shape:?} differs from tensor shape {:?}",
            t.shape()
        )));
    }
    Ok(t.sub(&d.reconstruct()?)?.squared_norm())
}

fn check_input<T: Scalar>(t: &DenseTensor<T>, cfg: &AlsConfig) -> Result<()> {
    cfg.validate()?;
    if !t.is_finite() {
        return Err(invalid("tensor contains non-finite entries"));
    }
    Ok(())
}

fn relative(err_sq: f64, norm_sq: f64) -> f64 {
    if norm_sq > 0.0 {
        (err_sq / norm_sq).sqrt()
    } else {
        err_sq.sqrt()
    }
}

/// Fit has reached the rounding floor; further sweeps cannot improve it.
fn exact(rel: f64) -> bool {
    rel <= 1e-13
}

/// Rank-`rank` CP decomposition by alternating least squares.
///
/// Starts from leading singular vectors of the unfoldings (random columns
/// where `rank` exceeds an extent). Three-way tensors with room for `rank` in
/// two modes start from a generalized eigendecomposition instead when that
/// succeeds. Each sweep is followed by a line-search extrapolation that is
/// kept only if it lowers the error.
pub fn cp_als<T: Scalar>(
    t: &DenseTensor<T>,
    rank: usize,
    cfg: &AlsConfig,
) -> Result<AlsFit<CpDecomposition<T>>> {
    if rank == 0 {
        return Err(invalid("CP rank must be at least 1"));
    }
    check_input(t, cfg)?;
    let d = t.ndim();
    let norm_sq = t.squared_norm().as_f64();
    if norm_sq == 0.0 {
        let factors = t
            .shape()
            .iter()
            .map(|&n| unit_columns(n, rank))
            .collect();
        return Ok(AlsFit {
            decomposition: CpDecomposition {
                weights: vec![T::zero(); rank],
                factors,
            },
            converged: true,
            errors: vec![0.0],
        });
    }

    let mut rng = SplitMix64::new(cfg.seed);
    let unfoldings: Vec<Matrix<T>> = (0..d).map(|m| t.unfold(m)).collect::<Result<_>>()?;
    let mut factors = Vec::with_capacity(d);
    for (m, unf) in unfoldings.iter().enumerate() {
        let extent = t.shape()[m];
        // Mode 0 is overwritten by the first update before it is ever read.
        let f = if m == 0 && d > 1 {
            unit_columns(extent, rank)
        } else if rank <= extent {
            leading_left_singular_vectors(unf, rank)?
        } else {
            random_unit_columns(extent, rank, &mut rng)
        };
        factors.push(f);
    }
    let mut weights = vec![T::one(); rank];
    if d == 3 && rank >= 2 {
        if let Some((k, [fp, fq])) = gevd_start(t, &unfoldings, rank)? {
            let (p, q) = pencil_pair(k);
            factors[p] = fp;
            factors[q] = fq;
            if k != 0 {
                update_mode(&unfoldings, &mut factors, &mut weights, k)?;
            }
        }
    }
    let mut errors = Vec::new();
    let mut converged = false;
    let mut prev = f64::INFINITY;
    let mut previous: Option<CpDecomposition<T>> = None;

    for _ in 0..cfg.max_iterations {
        for m in 0..d {
            update_mode(&unfoldings, &mut factors, &mut weights, m)?;
        }
        let decomposition = CpDecomposition {
            weights: weights.clone(),
            factors: factors.clone(),
        };
        let mut err_sq = t.sub(&decomposition.reconstruct()?)?.squared_norm().as_f64();
        if let Some(last) = &previous {
            // Step grows by doubling while the error keeps dropping.
            let mut step = (errors.len() as f64 + 1.0).cbrt();
            for _ in 0..MAX_DOUBLINGS {
                let trial = extrapolate(last, &decomposition, T::real(step))?;
                let trial_err = t.sub(&trial.reconstruct()?)?.squared_norm().as_f64();
                if trial_err >= err_sq {
                    break;
                }
                err_sq = trial_err;
                weights = trial.weights;
                factors = trial.factors;
                step *= 2.0;
            }
        }
        previous = Some(CpDecomposition {
            weights: weights.clone(),
            factors: factors.clone(),
        });
        let rel = relative(err_sq, norm_sq);
        errors.push(rel);
        if exact(rel) || (prev - rel).abs() < cfg.rel_tolerance {
            converged = true;
            break;
        }
        prev = rel;
    }
    Ok(AlsFit {
        decomposition: CpDecomposition { weights, factors },
        converged,
        errors,
    })
}

/// One ALS update of mode `m`: `A_m = unfold(T, m) KR(A_k, k != m) (H + eps I)^-1`
/// with `H` the elementwise product of the other factors' Gram matrices.
/// Columns come out unit-norm with the scale in `weights`.
fn update_mode<T: Scalar>(unfoldings: &[Matrix<T>], factors: &mut [Matrix<T>], weights: &mut [T], m: usize) -> Result<()> {
    let rank = weights.len();
    let others: Vec<&Matrix<T>> = (0..factors.len()).filter(|&k| k != m).map(|k| &factors[k]).collect();
    let kr = khatri_rao_all(&others, rank)?;
    let mttkrp = unfoldings[m].matmul(&kr)?;
    let mut h = Matrix::new(rank, rank, vec![T::one(); rank * rank])?;
    for f in &others {
        h = h.hadamard(&f.gram())?;
    }
    // A_m^T = H^-1 M^T since H is symmetric.
    let sol = solve_spd(&h, &mttkrp.transpose())?;
    let mut updated = sol.transpose();
    for r in 0..rank {
        let norm = updated.column_norm(r);
        if norm > T::zero() && norm.is_finite() {
            for i in 0..updated.rows() {
                let v = updated.get(i, r) / norm;
                updated.set(i, r, v);
            }
            weights[r] = norm;
        } else {
            updated.set_column(r, &factors[m].column(r));
            weights[r] = T::zero();
        }
    }
    factors[m] = updated;
    Ok(())
}

const MAX_DOUBLINGS: usize = 6;

/// Weights folded into the last factor, so factor differences are meaningful.
fn absorbed<T: Scalar>(d: &CpDecomposition<T>) -> Vec<Matrix<T>> {
    let mut f = d.factors.clone();
    let last = f.len() - 1;
    for r in 0..d.weights.len() {
        for i in 0..f[last].rows() {
            let v = f[last].get(i, r) * d.weights[r];
            f[last].set(i, r, v);
        }
    }
    f
}

/// Line-search extrapolation `old + step * (new - old)` on every factor,
/// renormalized to unit columns.
fn extrapolate<T: Scalar>(old: &CpDecomposition<T>, new: &CpDecomposition<T>, step: T) -> Result<CpDecomposition<T>> {
    let rank = new.weights.len();
    let mut weights = vec![T::one(); rank];
    let mut factors = Vec::with_capacity(new.factors.len());
    for (a, b) in absorbed(old).iter().zip(absorbed(new)) {
        let mut f = b.sub(a)?.scale(step);
        for (v, &base) in f.data_mut().iter_mut().zip(a.data()) {
            *v += base;
        }
        for (r, w) in weights.iter_mut().enumerate() {
            let norm = f.column_norm(r);
            if norm > T::zero() && norm.is_finite() {
                for i in 0..f.rows() {
                    let v = f.get(i, r) / norm;
                    f.set(i, r, v);
                }
                *w *= norm;
            } else {
                *w = T::zero();
            }
        }
        factors.push(f);
    }
    Ok(CpDecomposition { weights, factors })
}

/// Tucker decomposition by higher-order orthogonal iteration from an HOSVD start.
pub fn tucker_als<T: Scalar>(
    t: &DenseTensor<T>,
    ranks: &[usize],
    cfg: &AlsConfig,
) -> Result<AlsFit<TuckerDecomposition<T>>> {
    check_input(t, cfg)?;
    let d = t.ndim();
    if ranks.len() != d {
        return Err(invalid(format!(
            "{} Tucker ranks given for a {d}-mode tensor",
            ranks.len()
        )));
    }
    for (q, (&r, &n)) in ranks.iter().zip(t.shape()).enumerate() {
        if r == 0 || r > n {
            return Err(invalid(format!(
                "Tucker rank {r} for mode {q} must lie in 1..={n}"
            )));
        }
    }
    let norm_sq = t.squared_norm().as_f64();
    let mut factors: Vec<Matrix<T>> = (0..d)
        .map(|q| leading_left_singular_vectors(&t.unfold(q)?, ranks[q]))
        .collect::<Result<_>>()?;
    let mut errors = Vec::new();
    let mut converged = false;
    let mut prev = f64::INFINITY;
    let mut core = project_all(t, &factors)?;

    for _ in 0..cfg.max_iterations {
        if d > 1 {
            for q in 0..d {
                let mut y = t.clone();
                for (k, f) in factors.iter().enumerate() {
                    if k != q {
                        y = y.mode_product(&f.transpose(), k)?;
                    }
                }
                factors[q] = leading_left_singular_vectors(&y.unfold(q)?, ranks[q])?;
            }
        }
        core = project_all(t, &factors)?;
        let decomposition = TuckerDecomposition {
            core: core.clone(),
            factors: factors.clone(),
        };
        let err_sq = t.sub(&decomposition.reconstruct()?)?.squared_norm().as_f64();
        let rel = relative(err_sq, norm_sq);
        errors.push(rel);
        if norm_sq == 0.0 || exact(rel) || (prev - rel).abs() < cfg.rel_tolerance {
            converged = true;
            break;
        }
        prev = rel;
    }
    Ok(AlsFit {
        decomposition: TuckerDecomposition { core, factors },
        converged,
        errors,
    })
}

/// The two modes other than pencil mode `k` of a 3-way tensor.
fn pencil_pair(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Factors of two modes of a 3-way tensor from the generalized eigenvectors
/// of two compressed slice combinations along the remaining "pencil" mode
/// (Jennrich's algorithm). Exact for generic rank-`rank` tensors. Returns the
/// pencil mode and the factors of [`pencil_pair`]; `None` when no mode pair
/// has room for `rank` or the pencil has complex or repeated eigenvalues.
fn gevd_start<T: Scalar>(
    t: &DenseTensor<T>,
    unfoldings: &[Matrix<T>],
    rank: usize,
) -> Result<Option<(usize, [Matrix<T>; 2])>> {
    use nalgebra::DMatrix;

    let shape = t.shape();
    let Some(k) = (0..3).find(|&k| {
        let (p, q) = pencil_pair(k);
        shape[k] >= 2 && rank <= shape[p] && rank <= shape[q]
    }) else {
        return Ok(None);
    };
    let (p, q) = pencil_pair(k);
    let w = leading_left_singular_vectors(&unfoldings[k], 2)?;
    let u = leading_left_singular_vectors(&unfoldings[p], rank)?;
    let v = leading_left_singular_vectors(&unfoldings[q], rank)?;
    let mut proj = vec![Matrix::zeros(0, 0), Matrix::zeros(0, 0), Matrix::zeros(0, 0)];
    proj[k] = w;
    proj[p] = u.clone();
    proj[q] = v.clone();
    let g = project_all(t, &proj)?;
    let slice = |c: usize| {
        DMatrix::from_fn(rank, rank, |i, j| {
            let mut idx = [0; 3];
            idx[k] = c;
            idx[p] = i;
            idx[q] = j;
            g.get(&idx).as_f64()
        })
    };
    let (s_main, s_other) = (slice(0), slice(1));
    let Some(main_inv) = s_main.clone().try_inverse() else {
        return Ok(None);
    };
    let m = &s_other * &main_inv;
    if !m.iter().all(|x| x.is_finite()) {
        return Ok(None);
    }
    let Some(eig) = m.clone().schur().eigenvalues() else {
        return Ok(None);
    };
    let scale = eig.iter().fold(0.0f64, |a, &l| a.max(l.abs())).max(f64::MIN_POSITIVE);
    for i in 0..rank {
        for j in i + 1..rank {
            if (eig[i] - eig[j]).abs() <= 1e-8 * scale {
                return Ok(None);
            }
        }
    }
    let mut b = DMatrix::zeros(rank, rank);
    for (r, &l) in eig.iter().enumerate() {
        let shifted = &m - DMatrix::identity(rank, rank) * l;
        let svd = shifted.svd(false, true);
        let Some(vt) = svd.v_t else {
            return Ok(None);
        };
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .fold(0, |best, (k, &s)| if s < svd.singular_values[best] { k } else { best });
        b.set_column(r, &vt.row(k).transpose());
    }
    let Some(b_inv) = b.clone().try_inverse() else {
        return Ok(None);
    };
    // S_main = B diag(.) C^T, so the rows of B^-1 S_main are C's columns.
    let c = (&b_inv * &s_main).transpose();
    let lift = |basis: &Matrix<T>, small: &DMatrix<f64>| -> Result<Option<Matrix<T>>> {
        let small = Matrix::new(rank, rank, (0..rank * rank).map(|k| T::real(small[(k / rank, k % rank)])).collect())?;
        let mut f = basis.matmul(&small)?;
        for r in 0..rank {
            let norm = f.column_norm(r);
            if !(norm > T::zero() && norm.is_finite()) {
                return Ok(None);
            }
            for i in 0..f.rows() {
                let x = f.get(i, r) / norm;
                f.set(i, r, x);
            }
        }
        Ok(Some(f))
    };
    match (lift(&u, &b)?, lift(&v, &c)?) {
        (Some(fb), Some(fc)) => Ok(Some((k, [fb, fc]))),
        _ => Ok(None),
    }
}

/// `T x_1 A_1^T x_2 ... x_D A_D^T`.
pub(crate) fn project_all<T: Scalar>(t: &DenseTensor<T>, factors: &[Matrix<T>]) -> Result<DenseTensor<T>> {
    let mut g = t.clone();
    for (q, f) in factors.iter().enumerate() {
        g = g.mode_product(&f.transpose(), q)?;
    }
    Ok(g)
}

/// Columns cycling through the standard basis vectors.
fn unit_columns<T: Scalar>(rows: usize, rank: usize) -> Matrix<T> {
    let mut m = Matrix::zeros(rows, rank);
    for r in 0..rank {
        m.set(r % rows, r, T::one());
    }
    m
}

fn random_unit_columns<T: Scalar>(rows: usize, rank: usize, rng: &mut SplitMix64) -> Matrix<T> {
    let mut m = Matrix::zeros(rows, rank);
    for r in 0..rank {
        let col: Vec<f64> = (0..rows).map(|_| rng.uniform()).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (i, v) in col.into_iter().enumerate() {
            m.set(i, r, T::real(v / norm));
        }
    }
    m
}
