//! Dense row-major tensors and matrices plus the multilinear primitives
//! (unfolding, mode products, Khatri-Rao products) the decompositions are
//! built from.
//!
//! Unfolding convention: the mode-`m` unfolding of a tensor with shape
//! `(d_0, ..., d_{D-1})` is the `d_m x (prod_{k != m} d_k)` matrix whose
//! column index is the row-major flat index of the remaining modes, kept in
//! their original order. With this convention
//! `unfold(T, m) = A_m diag(w) khatri_rao(A_k for k != m, ascending)^T`
//! for a CP tensor, where the leftmost Khatri-Rao operand varies slowest.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};
use crate::scalar::Scalar;

/// Largest supported number of modes (observation mode plus three feature modes).
pub const MAX_MODES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor<T>", bound(deserialize = "T: Scalar"))]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

#[derive(Deserialize)]
struct RawTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> TryFrom<RawTensor<T>> for DenseTensor<T> {
    type Error = crate::Error;

    fn try_from(raw: RawTensor<T>) -> Result<Self> {
        DenseTensor::new(raw.shape, raw.data)
    }
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_MODES {
        return Err(invalid(format!(
            "tensor must have 1..={MAX_MODES} modes, got {}",
            shape.len()
        )));
    }
    if shape.iter().any(|&d| d == 0) {
        return Err(invalid(format!("zero extent in shape {shape:?}")));
    }
    Ok(shape.iter().product())
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if len != data.len() {
            return Err(mismatch(format!(
                "shape {shape:?} holds {len} entries but {} were given",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(Self {
            shape,
            data: vec![T::zero(); len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = check_shape(&shape)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[ravel(idx, &self.shape)]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> T {
        self.squared_norm().sqrt()
    }

    pub fn squared_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(mismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn unfold(&self, mode: usize) -> Result<Matrix<T>> {
        if mode >= self.ndim() {
            return Err(invalid(format!(
                "mode {mode} out of range for a {}-mode tensor",
                self.ndim()
            )));
        }
        let extent = self.shape[mode];
        let before: usize = self.shape[..mode].iter().product();
        let after: usize = self.shape[mode + 1..].iter().product();
        let cols = before * after;
        let mut out = vec![T::zero(); self.data.len()];
        for b in 0..before {
            for i in 0..extent {
                let src = (b * extent + i) * after;
                let dst = i * cols + b * after;
                out[dst..dst + after].copy_from_slice(&self.data[src..src + after]);
            }
        }
        Matrix::new(extent, cols, out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix<T>, mode: usize, shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        if mode >= shape.len() {
            return Err(invalid(format!(
                "mode {mode} out of range for shape {shape:?}"
            )));
        }
        let extent = shape[mode];
        if m.rows != extent || m.rows * m.cols != len {
            return Err(mismatch(format!(
                "{}x{} matrix cannot fold into {shape:?} along mode {mode}",
                m.rows, m.cols
            )));
        }
        let before: usize = shape[..mode].iter().product();
        let after: usize = shape[mode + 1..].iter().product();
        let cols = m.cols;
        let mut data = vec![T::zero(); len];
        for b in 0..before {
            for i in 0..extent {
                let dst = (b * extent + i) * after;
                let src = i * cols + b * after;
                data[dst..dst + after].copy_from_slice(&m.data[src..src + after]);
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Mode-`mode` product `T x_mode M`: every mode fiber is multiplied by `M`.
    pub fn mode_product(&self, m: &Matrix<T>, mode: usize) -> Result<Self> {
        if mode >= self.ndim() {
            return Err(invalid(format!("mode {mode} out of range")));
        }
        if m.cols != self.shape[mode] {
            return Err(mismatch(format!(
                "matrix has {} columns but mode {mode} has extent {}",
                m.cols, self.shape[mode]
            )));
        }
        let unfolded = self.unfold(mode)?;
        let product = m.matmul(&unfolded)?;
        let mut shape = self.shape.clone();
        shape[mode] = m.rows;
        Self::fold(&product, mode, &shape)
    }

    /// Sum of the elementwise product; shapes must match exactly.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.same_shape(other)?;
        Ok(dot(&self.data, &other.data))
    }

    // Stacked-tensor helpers: mode 0 indexes observations.

    pub fn n_obs(&self) -> usize {
        self.shape[0]
    }

    pub fn feature_shape(&self) -> &[usize] {
        &self.shape[1..]
    }

    /// Number of entries in one observation slice.
    pub fn feature_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    /// Flat entries of observation `i`.
    pub fn row(&self, i: usize) -> &[T] {
        let f = self.feature_len();
        &self.data[i * f..(i + 1) * f]
    }

    /// Observation `i` as its own tensor over the feature modes.
    pub fn slice_obs(&self, i: usize) -> Result<Self> {
        if self.ndim() < 2 {
            return Err(invalid("observation slices need at least two modes"));
        }
        Self::new(self.shape[1..].to_vec(), self.row(i).to_vec())
    }

    /// Stacks the listed observations (in the given order) into a new tensor.
    pub fn select_obs(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("cannot select zero observations"));
        }
        let f = self.feature_len();
        let mut data = Vec::with_capacity(rows.len() * f);
        for &r in rows {
            if r >= self.n_obs() {
                return Err(invalid(format!("observation {r} out of range")));
            }
            data.extend_from_slice(self.row(r));
        }
        let mut shape = self.shape.clone();
        shape[0] = rows.len();
        Self::new(shape, data)
    }

    /// Stacks equally shaped tensors along a new leading observation mode.
    pub fn stack(items: &[Self]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| invalid("cannot stack zero tensors"))?;
        let mut data = Vec::with_capacity(items.len() * first.len());
        for t in items {
            first.same_shape(t)?;
            data.extend_from_slice(&t.data);
        }
        let mut shape = vec![items.len()];
        shape.extend_from_slice(&first.shape);
        Self::new(shape, data)
    }
}

/// Row-major flat offset of a multi-index.
pub fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Multi-index of a row-major flat offset.
pub fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Outer product of vectors: `result[i, j, ...] = v1[i] * v2[j] * ...`.
pub fn outer_rank1<T: Scalar>(vectors: &[Vec<T>]) -> Result<DenseTensor<T>> {
    if vectors.len() < 2 {
        return Err(invalid("outer product needs at least two vectors"));
    }
    if vectors.iter().any(|v| v.is_empty()) {
        return Err(invalid("outer product of an empty vector"));
    }
    let shape: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
    DenseTensor::from_fn(shape, |idx| {
        idx.iter()
            .zip(vectors)
            .fold(T::one(), |acc, (&i, v)| acc * v[i])
    })
}

pub fn frobenius_norm<T: Scalar>(t: &DenseTensor<T>) -> T {
    t.frobenius_norm()
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix<T>", bound(deserialize = "T: Scalar"))]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

#[derive(Deserialize)]
struct RawMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> TryFrom<RawMatrix<T>> for Matrix<T> {
    type Error = crate::Error;

    fn try_from(raw: RawMatrix<T>) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(mismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Result<Self> {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(mismatch("column length differs from row count"));
            }
            for (r, &v) in col.iter().enumerate() {
                m.data[r * cols + c] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[T]) {
        for (r, &v) in values.iter().enumerate() {
            self.set(r, c, v);
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(mismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(n, m);
        for i in 0..n {
            let out_row = &mut out.data[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == T::zero() {
                    continue;
                }
                let b_row = &other.data[p * m..(p + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * self`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let a = row[i];
                if a == T::zero() {
                    continue;
                }
                for j in i..n {
                    g.data[i * n + j] += a * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    /// Elementwise product of equally shaped matrices.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(mismatch("hadamard operands differ in shape"));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a * b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(mismatch("operands differ in shape"));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn column_norm(&self, c: usize) -> T {
        (0..self.rows)
            .map(|r| {
                let v = self.get(r, c);
                v * v
            })
            .sum::<T>()
            .sqrt()
    }
}

/// Column-wise Kronecker product: column `r` of the result is
/// `kron(a[:, r], b[:, r])`, with rows indexed `i * b.rows + j`.
pub fn khatri_rao<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols != b.cols {
        return Err(invalid(format!(
            "khatri-rao operands have {} and {} columns",
            a.cols, b.cols
        )));
    }
    let r = a.cols;
    let mut out = Matrix::zeros(a.rows * b.rows, r);
    for i in 0..a.rows {
        for j in 0..b.rows {
            let row = i * b.rows + j;
            for c in 0..r {
                out.data[row * r + c] = a.get(i, c) * b.get(j, c);
            }
        }
    }
    Ok(out)
}

/// Khatri-Rao product of a sequence of matrices, leftmost varying slowest.
/// An empty sequence yields the `1 x rank` all-ones matrix.
pub(crate) fn khatri_rao_all<T: Scalar>(mats: &[&Matrix<T>], rank: usize) -> Result<Matrix<T>> {
    let mut acc = Matrix::new(1, rank, vec![T::one(); rank])?;
    for m in mats {
        acc = khatri_rao(&acc, m)?;
    }
    Ok(acc)
}
