//! Dense real matrix primitives.
//!
//! Row-major storage, immutable after construction. Everything here is
//! plain scalar code; dimensions in this problem are small (d up to a few
//! hundred), so no BLAS backend is used.

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Dense rows × cols matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "entry count {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    /// self^T * other without materializing the transpose.
    pub fn tr_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "outer dimension mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for (i, &a) in arow.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(brow) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: T) -> Self {
        let data = self.data.iter().map(|&a| a * c).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Contiguous submatrix copy.
    pub fn submatrix(
        &self,
        row_start: usize,
        row_len: usize,
        col_start: usize,
        col_len: usize,
    ) -> Result<Self> {
        if row_len == 0
            || col_len == 0
            || row_start + row_len > self.rows
            || col_start + col_len > self.cols
        {
            return Err(Error::InvalidWindow(format!(
                "window [{row_start}+{row_len}, {col_start}+{col_len}] on {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(Self::from_fn(row_len, col_len, |i, j| self.get(row_start + i, col_start + j)))
    }
}

/// Symmetric d × d matrix; the stored representation is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Builds from a square dense matrix, verifying near-symmetry and then
    /// symmetrizing as (A + A^T)/2.
    pub fn from_dense(a: &DenseMatrix<T>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::InvalidInput(format!("{}x{} matrix is not square", a.rows(), a.cols())));
        }
        a.check_finite()?;
        let d = a.rows();
        let mut max_abs = T::zero();
        let mut max_asym = T::zero();
        for i in 0..d {
            for j in 0..d {
                max_abs = max_abs.max(a.get(i, j).abs());
                max_asym = max_asym.max((a.get(i, j) - a.get(j, i)).abs());
            }
        }
        if max_asym > T::of(1e-10) * (T::one() + max_abs) {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric: max |A_ij - A_ji| = {max_asym}"
            )));
        }
        Ok(Self::symmetrize_unchecked(a))
    }

    /// Symmetrizes (A + A^T)/2 without the asymmetry check. For use where the
    /// asymmetry is pure floating-point noise by construction.
    pub fn symmetrize_unchecked(a: &DenseMatrix<T>) -> Self {
        let d = a.rows();
        let half = T::of(0.5);
        let mut data = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = (a.get(i, j) + a.get(j, i)) * half;
                data[i * d + j] = v;
                data[j * d + i] = v;
            }
        }
        Self { dim: d, data }
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = if i == j { f(i, i) } else { (f(i, j) + f(j, i)) * T::of(0.5) };
                data[i * d + j] = v;
                data[j * d + i] = v;
            }
        }
        Self { dim: d, data }
    }

    pub fn zeros(d: usize) -> Self {
        Self { dim: d, data: vec![T::zero(); d * d] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = T::one();
        }
        m
    }

    pub fn diag(values: &[T]) -> Self {
        let d = values.len();
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = values[i];
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn scale(&self, c: T) -> Self {
        let data = self.data.iter().map(|&a| a * c).collect();
        Self { dim: self.dim, data }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(())
    }
}

/// Square root of the sum of squared entries (equals the square root of the
/// sum of squared singular values).
pub fn frobenius_norm<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    m.check_finite()?;
    Ok(m.data().iter().map(|&v| v * v).sum::<T>().sqrt())
}

/// Maximal absolute elementwise norm.
pub fn max_abs_norm<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    m.check_finite()?;
    Ok(m.data().iter().fold(T::zero(), |acc, &v| acc.max(v.abs())))
}

pub fn sym_frobenius_norm<T: Scalar>(m: &SymMatrix<T>) -> T {
    m.data().iter().map(|&v| v * v).sum::<T>().sqrt()
}

pub fn sym_max_abs_norm<T: Scalar>(m: &SymMatrix<T>) -> T {
    m.data().iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

/// Sample covariance (1/n) sum_i x_i x_i^T of row-observations, optionally
/// subtracting the column means first. The model assumes mean-zero data, so
/// centering is off by default at call sites.
pub fn sample_covariance<T: Scalar>(data: &DenseMatrix<T>, center: bool) -> Result<SymMatrix<T>> {
    let n = data.rows();
    let d = data.cols();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    data.check_finite()?;
    let mut mean = vec![T::zero(); d];
    if center {
        for i in 0..n {
            for (m, &v) in mean.iter_mut().zip(data.row(i)) {
                *m = *m + v;
            }
        }
        let inv_n = T::one() / T::of(n as f64);
        for m in mean.iter_mut() {
            *m = *m * inv_n;
        }
    }
    let mut acc = vec![T::zero(); d * d];
    let mut xi = vec![T::zero(); d];
    for i in 0..n {
        for (x, (&v, &m)) in xi.iter_mut().zip(data.row(i).iter().zip(&mean)) {
            *x = v - m;
        }
        for a in 0..d {
            let xa = xi[a];
            let dst = &mut acc[a * d..(a + 1) * d];
            for (dstb, &xb) in dst.iter_mut().zip(&xi).take(a + 1) {
                *dstb = *dstb + xa * xb;
            }
        }
    }
    let inv_n = T::one() / T::of(n as f64);
    let mut out = SymMatrix::zeros(d);
    for a in 0..d {
        for b in 0..=a {
            out.set_sym(a, b, acc[a * d + b] * inv_n);
        }
    }
    Ok(out)
}
