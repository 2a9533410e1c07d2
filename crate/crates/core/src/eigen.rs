//! Symmetric eigendecomposition (cyclic Jacobi) and derived factorizations.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymMatrix};
use crate::num::Scalar;

const MAX_SWEEPS: usize = 64;

/// Full eigendecomposition of a symmetric matrix: descending eigenvalues
/// paired with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    pub values: Vec<T>,
    /// d × d matrix; column k is the eigenvector of values[k].
    pub vectors: DenseMatrix<T>,
}

impl<T: Scalar> EigenSystem<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Reconstructs V diag(values) V^T.
    pub fn reconstruct(&self) -> SymMatrix<T> {
        let d = self.dim();
        let v = &self.vectors;
        SymMatrix::from_fn(d, |i, j| {
            (0..d).map(|k| v.get(i, k) * self.values[k] * v.get(j, k)).sum()
        })
    }
}

/// Cyclic Jacobi eigendecomposition. Deterministic for a fixed input: ties
/// are resolved by a stable sort on the eigenvalues and a fixed sign
/// convention (first non-negligible component of each eigenvector positive).
pub fn sym_eigen<T: Scalar>(m: &SymMatrix<T>) -> Result<EigenSystem<T>> {
    m.check_finite()?;
    let d = m.dim();
    let mut a: Vec<T> = m.data().to_vec();
    let mut v: Vec<T> = vec![T::zero(); d * d];
    for i in 0..d {
        v[i * d + i] = T::one();
    }

    let max_abs = a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let tol = T::epsilon() * T::of(d as f64) * (T::one() + max_abs);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[p * d + q].abs());
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() <= tol * T::of(1e-3) {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                // rotate rows/columns p and q of A
                for k in 0..d {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[k * d + p] = np;
                    a[p * d + k] = np;
                    a[k * d + q] = nq;
                    a[q * d + k] = nq;
                }
                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = T::zero();
                a[q * d + p] = T::zero();

                // accumulate rotation into V
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // final check: sweeps may have driven off-diagonal below tol on exit
        let mut off = T::zero();
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[p * d + q].abs());
            }
        }
        if off > tol {
            return Err(Error::NumericalFailure(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal {off})"
            )));
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        a[j * d + j].partial_cmp(&a[i * d + i]).expect("finite eigenvalues")
    });

    let values: Vec<T> = order.iter().map(|&k| a[k * d + k]).collect();
    let mut vectors = DenseMatrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        // sign convention: first component with non-negligible magnitude positive
        let mut sign = T::one();
        for i in 0..d {
            let x = v[i * d + k];
            if x.abs() > T::of(1e-12) {
                if x < T::zero() {
                    sign = -T::one();
                }
                break;
            }
        }
        for i in 0..d {
            vectors.set(i, col, sign * v[i * d + k]);
        }
    }
    Ok(EigenSystem { values, vectors })
}

/// Largest singular value via the Gram matrix of the smaller side.
pub fn spectral_norm<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    m.check_finite()?;
    if m.rows() == 1 && m.cols() == 1 {
        return Ok(m.get(0, 0).abs());
    }
    let gram = if m.rows() >= m.cols() {
        m.tr_matmul(m) // M^T M, cols x cols
    } else {
        let mt = m.transpose();
        mt.tr_matmul(&mt)
    };
    let eig = sym_eigen(&SymMatrix::symmetrize_unchecked(&gram))?;
    Ok(eig.values[0].max(T::zero()).sqrt())
}

pub fn sym_spectral_norm<T: Scalar>(m: &SymMatrix<T>) -> Result<T> {
    let eig = sym_eigen(m)?;
    Ok(eig
        .values
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.abs())))
}

/// Spectral norm of the contiguous submatrix
/// M[row_start .. row_start+row_len, col_start .. col_start+col_len].
pub fn block_spectral_norm<T: Scalar>(
    m: &DenseMatrix<T>,
    row_start: usize,
    row_len: usize,
    col_start: usize,
    col_len: usize,
) -> Result<T> {
    let sub = m.submatrix(row_start, row_len, col_start, col_len)?;
    spectral_norm(&sub)
}

/// Factor B (d × r) with B B^T = A for PSD A; r is the numerical rank.
/// Eigenvalues in [-rank_tol*||A||, 0) are clamped to zero; anything more
/// negative is an error.
pub fn psd_factor<T: Scalar>(a: &SymMatrix<T>, rank_tol: T) -> Result<DenseMatrix<T>> {
    let eig = sym_eigen(a)?;
    let spec = eig.values.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let min = eig.values.last().copied().unwrap_or(T::zero());
    if min < -rank_tol * spec {
        return Err(Error::NotPsd(format!("eigenvalue {min} below -{rank_tol}*||A||")));
    }
    let lead = eig.values[0].max(T::zero());
    let r = eig.values.iter().filter(|&&x| x > rank_tol * lead).count().max(1);
    let d = a.dim();
    let mut b = DenseMatrix::zeros(d, r);
    for k in 0..r {
        let s = eig.values[k].max(T::zero()).sqrt();
        for i in 0..d {
            b.set(i, k, eig.vectors.get(i, k) * s);
        }
    }
    Ok(b)
}

/// Symmetric square root V diag(sqrt(lambda)) V^T; negative eigenvalues
/// within tolerance are clamped to zero.
pub fn sym_sqrt<T: Scalar>(a: &SymMatrix<T>, rank_tol: T) -> Result<SymMatrix<T>> {
    let eig = sym_eigen(a)?;
    let spec = eig.values.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if let Some(&min) = eig.values.last() {
        if min < -rank_tol * spec {
            return Err(Error::NotPsd(format!("eigenvalue {min} below -{rank_tol}*||A||")));
        }
    }
    let d = a.dim();
    let roots: Vec<T> = eig.values.iter().map(|&x| x.max(T::zero()).sqrt()).collect();
    let v = &eig.vectors;
    Ok(SymMatrix::from_fn(d, |i, j| {
        (0..d).map(|k| v.get(i, k) * roots[k] * v.get(j, k)).sum()
    }))
}
