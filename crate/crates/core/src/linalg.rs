//! Small dense linear algebra kernels: one-sided Jacobi SVD, jittered
//! Cholesky solves and thin QR.

use crate::error::{invalid, mismatch, Result};
use crate::scalar::Scalar;
use crate::tensor::{dot, Matrix};

const MAX_SWEEPS: usize = 80;

/// Base ridge jitter, relative to the mean diagonal of the Gram matrix.
pub const RIDGE_JITTER: f64 = 1e-12;

/// Leading `k` left singular vectors of `a`, as the columns of an
/// `a.rows() x k` matrix with orthonormal columns, ordered by decreasing
/// singular value. When `a` has fewer than `k` nonzero singular values the
/// remaining columns complete an orthonormal set.
pub fn leading_left_singular_vectors<T: Scalar>(a: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    let m = a.rows();
    if k > m {
        return Err(invalid(format!(
            "requested {k} singular vectors of a matrix with {m} rows"
        )));
    }
    let mut columns = if m <= a.cols() {
        // Rotating the rows of `a` accumulates its left singular vectors.
        let rows: Vec<Vec<T>> = (0..m).map(|r| a.row(r).to_vec()).collect();
        let sweep = jacobi(rows);
        let mut order: Vec<usize> = (0..m).collect();
        sort_desc(&mut order, &sweep.norms);
        order
            .into_iter()
            .take(k)
            .map(|j| sweep.rotation[j].clone())
            .collect::<Vec<_>>()
    } else {
        let cols: Vec<Vec<T>> = (0..a.cols()).map(|c| a.column(c)).collect();
        let sweep = jacobi(cols);
        let norms = sweep.norms;
        let mut order: Vec<usize> = (0..norms.len()).collect();
        sort_desc(&mut order, &norms);
        let scale = norms.iter().fold(T::zero(), |acc, &s| acc.max(s));
        let cutoff = scale * T::epsilon() * count_f(m);
        let mut out = Vec::with_capacity(k);
        for j in order.into_iter().take(k) {
            if norms[j] > cutoff {
                out.push(sweep.vectors[j].iter().map(|&x| x / norms[j]).collect());
            }
        }
        out
    };
    complete_orthonormal(&mut columns, m, k);
    Matrix::from_columns(m, &columns)
}

fn count_f<T: Scalar>(n: usize) -> T {
    T::real(n as f64)
}

fn sort_desc<T: Scalar>(order: &mut [usize], keys: &[T]) {
    order.sort_by(|&i, &j| {
        keys[j]
            .partial_cmp(&keys[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
}

struct Jacobi<T> {
    /// Mutually orthogonal output vectors `W V`.
    vectors: Vec<Vec<T>>,
    norms: Vec<T>,
    /// Columns of the accumulated orthogonal rotation `V`.
    rotation: Vec<Vec<T>>,
}

/// One-sided (Hestenes) Jacobi orthogonalization of the vectors `w`.
fn jacobi<T: Scalar>(mut w: Vec<Vec<T>>) -> Jacobi<T> {
    let p = w.len();
    let mut v: Vec<Vec<T>> = (0..p)
        .map(|j| {
            let mut e = vec![T::zero(); p];
            e[j] = T::one();
            e
        })
        .collect();
    let tol = T::epsilon() * count_f(p.max(1));
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::real(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms = w.iter().map(|x| dot(x, x).sqrt()).collect();
    Jacobi {
        vectors: w,
        norms,
        rotation: v,
    }
}

#[inline]
fn rotate<T: Scalar>(w: &mut [Vec<T>], i: usize, j: usize, c: T, s: T) {
    let (head, tail) = w.split_at_mut(j);
    let wi = &mut head[i];
    let wj = &mut tail[0];
    for (a, b) in wi.iter_mut().zip(wj.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Extends `columns` (orthonormal vectors of length `m`) to `k` vectors by
/// Gram-Schmidt against the standard basis.
pub(crate) fn complete_orthonormal<T: Scalar>(columns: &mut Vec<Vec<T>>, m: usize, k: usize) {
    let mut e = 0;
    while columns.len() < k && e < m {
        let mut cand = vec![T::zero(); m];
        cand[e] = T::one();
        e += 1;
        for _ in 0..2 {
            for q in columns.iter() {
                let proj = dot(q, &cand);
                for (c, &qv) in cand.iter_mut().zip(q) {
                    *c -= proj * qv;
                }
            }
        }
        let norm = dot(&cand, &cand).sqrt();
        if norm > T::real(1e-6) {
            columns.push(cand.into_iter().map(|x| x / norm).collect());
        }
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix, or `None`
/// when a pivot is not positive.
fn cholesky<T: Scalar>(g: &Matrix<T>) -> Option<Vec<T>> {
    let n = g.rows();
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > T::zero()) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve_in_place<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `(G + eps I) X = B` for a symmetric positive semidefinite `G`,
/// where `eps = RIDGE_JITTER * mean(diag G)`. The jitter is raised tenfold
/// until the factorization succeeds. `B` is `n x r`; every column is solved.
pub fn solve_spd<T: Scalar>(g: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = g.rows();
    if g.cols() != n || b.rows() != n {
        return Err(mismatch(format!(
            "cannot solve a {}x{} system against {} rows",
            g.rows(),
            g.cols(),
            b.rows()
        )));
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, b.cols()));
    }
    let diag_mean = (0..n).map(|i| g.get(i, i).abs()).sum::<T>() / count_f(n);
    let base = if diag_mean > T::zero() && diag_mean.is_finite() {
        diag_mean
    } else {
        T::one()
    };
    let mut eps = T::real(RIDGE_JITTER) * base;
    for _ in 0..40 {
        let mut jittered = g.clone();
        for i in 0..n {
            let v = jittered.get(i, i) + eps;
            jittered.set(i, i, v);
        }
        if let Some(l) = cholesky(&jittered) {
            let mut out = Matrix::zeros(n, b.cols());
            let mut col = vec![T::zero(); n];
            for c in 0..b.cols() {
                for (r, x) in col.iter_mut().enumerate() {
                    *x = b.get(r, c);
                }
                cholesky_solve_in_place(&l, n, &mut col);
                out.set_column(c, &col);
            }
            return Ok(out);
        }
        eps *= T::real(10.0);
    }
    Err(invalid("system matrix is not positive semidefinite"))
}

/// Ridge-jittered least squares `min ||Z beta - y||` through the normal
/// equations. `z` is `n x p`.
pub fn least_squares<T: Scalar>(z: &Matrix<T>, y: &[T]) -> Result<Vec<T>> {
    if z.rows() != y.len() {
        return Err(mismatch("design rows differ from response length"));
    }
    let gram = z.gram();
    let p = z.cols();
    let mut rhs = vec![T::zero(); p];
    for (r, &yr) in y.iter().enumerate() {
        for (acc, &zv) in rhs.iter_mut().zip(z.row(r)) {
            *acc += zv * yr;
        }
    }
    let sol = solve_spd(&gram, &Matrix::new(p, 1, rhs)?)?;
    Ok(sol.data().to_vec())
}

/// Thin QR by modified Gram-Schmidt with one reorthogonalization pass.
/// Returns `(Q, R)` with `Q` of shape `m x n` (orthonormal columns) and `R`
/// upper triangular `n x n`; requires `m >= n`. Dependent columns are
/// replaced in `Q` by completion vectors and get a zero diagonal in `R`.
pub fn thin_qr<T: Scalar>(a: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(invalid(format!("thin QR needs rows >= cols, got {m}x{n}")));
    }
    let mut q: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut r = Matrix::zeros(n, n);
    let mut dependent = Vec::new();
    let scale = a.frobenius_norm();
    for j in 0..n {
        let mut v = a.column(j);
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let proj = dot(qi, &v);
                r.set(i, j, r.get(i, j) + proj);
                for (x, &qx) in v.iter_mut().zip(qi) {
                    *x -= proj * qx;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > scale * T::epsilon() * count_f(m) && norm > T::zero() {
            r.set(j, j, norm);
            q.push(v.into_iter().map(|x| x / norm).collect());
        } else {
            // Placeholder, replaced below; its coefficients stay zero.
            dependent.push(j);
            q.push(vec![T::zero(); m]);
        }
    }
    if !dependent.is_empty() {
        let mut kept: Vec<Vec<T>> = q
            .iter()
            .enumerate()
            .filter(|(j, _)| !dependent.contains(j))
            .map(|(_, c)| c.clone())
            .collect();
        let target = kept.len() + dependent.len();
        complete_orthonormal(&mut kept, m, target);
        let extra = kept.split_off(n - dependent.len());
        for (slot, col) in dependent.iter().zip(extra) {
            q[*slot] = col;
        }
    }
    Ok((Matrix::from_columns(m, &q)?, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = SplitMix64::new(seed);
        Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.uniform_range(-1.0, 1.0)).collect())
            .unwrap()
    }

    fn orthonormality_defect(q: &Matrix<f64>) -> f64 {
        q.gram().sub(&Matrix::identity(q.cols())).unwrap().frobenius_norm()
    }

    #[test]
    fn left_vectors_of_known_matrix() {
        // diag(3, 1) rotated: singular vectors are the rotation columns.
        let (c, s) = (0.6, 0.8);
        let a = Matrix::<f64>::new(2, 3, vec![3.0 * c, 0.0, -s, 3.0 * s, 0.0, c]).unwrap();
        let u = leading_left_singular_vectors(&a, 1).unwrap();
        let (u0, u1) = (u.get(0, 0), u.get(1, 0));
        assert!((u0.abs() - c).abs() < 1e-12 && (u1.abs() - s).abs() < 1e-12);
        assert!(u0 * u1 > 0.0);
    }

    #[test]
    fn left_vectors_span_and_orthonormal_tall_and_wide() {
        for (r, c) in [(7, 3), (3, 7), (5, 5), (12, 2)] {
            let a = random(r, c, (r * 31 + c) as u64);
            let k = r.min(c);
            let u = leading_left_singular_vectors(&a, k).unwrap();
            assert!(orthonormality_defect(&u) < 1e-12, "{r}x{c}");
            // Projection onto the span of U leaves A unchanged.
            let proj = u.matmul(&u.transpose().matmul(&a).unwrap()).unwrap();
            assert!(proj.sub(&a).unwrap().frobenius_norm() < 1e-10);
            let full = leading_left_singular_vectors(&a, r).unwrap();
            assert!(orthonormality_defect(&full) < 1e-12);
        }
    }

    #[test]
    fn singular_vectors_order_by_strength() {
        let a = Matrix::<f64>::new(3, 2, vec![0.0, 0.0, 5.0, 0.0, 0.0, 1.0]).unwrap();
        let u = leading_left_singular_vectors(&a, 3).unwrap();
        assert!((u.get(1, 0).abs() - 1.0).abs() < 1e-14);
        assert!((u.get(2, 1).abs() - 1.0).abs() < 1e-14);
        assert!((u.get(0, 2).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_gives_basis() {
        let u = leading_left_singular_vectors(&Matrix::<f64>::zeros(4, 2), 3).unwrap();
        assert!(orthonormality_defect(&u) < 1e-14);
        let u = leading_left_singular_vectors(&Matrix::<f64>::zeros(2, 4), 2).unwrap();
        assert!(orthonormality_defect(&u) < 1e-14);
    }

    #[test]
    fn solve_spd_matches_direct() {
        let a = random(6, 3, 9);
        let g = a.gram();
        let x_true = Matrix::new(3, 2, vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.25]).unwrap();
        let b = g.matmul(&x_true).unwrap();
        let x = solve_spd(&g, &b).unwrap();
        assert!(x.sub(&x_true).unwrap().frobenius_norm() < 1e-8);
    }

    #[test]
    fn solve_spd_survives_singular() {
        let g = Matrix::<f64>::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let b = Matrix::new(2, 1, vec![2.0, 2.0]).unwrap();
        let x = solve_spd(&g, &b).unwrap();
        assert!(x.data().iter().all(|v| v.is_finite()));
        assert!((x.get(0, 0) + x.get(1, 0) - 2.0).abs() < 1e-6);
        let zero = solve_spd(&Matrix::<f64>::zeros(2, 2), &Matrix::zeros(2, 1)).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let z = random(20, 4, 3);
        let beta = [0.5, -1.0, 2.0, 0.0];
        let y: Vec<f64> = (0..20).map(|r| dot(z.row(r), &beta)).collect();
        let fit = least_squares(&z, &y).unwrap();
        for (a, b) in fit.iter().zip(beta) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn thin_qr_reconstructs() {
        let a = random(6, 3, 4);
        let (q, r) = thin_qr(&a).unwrap();
        assert!(orthonormality_defect(&q) < 1e-13);
        assert!(q.matmul(&r).unwrap().sub(&a).unwrap().frobenius_norm() < 1e-12);
        for i in 0..3 {
            for j in 0..i {
                assert_eq!(r.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn thin_qr_dependent_columns() {
        let a = Matrix::new(3, 2, vec![1.0, 2.0, 1.0, 2.0, 0.0, 0.0]).unwrap();
        let (q, r) = thin_qr(&a).unwrap();
        assert!(orthonormality_defect(&q) < 1e-13);
        assert!(q.matmul(&r).unwrap().sub(&a).unwrap().frobenius_norm() < 1e-12);
    }
}
