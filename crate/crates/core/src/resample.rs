//! Resampling engines: multiplier bootstrap and Wishart-based surrogate
//! covariances, plus the deterministic per-draw RNG derivation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymMatrix};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResamplerKind {
    /// Gaussian N(1,1) weights on the observations; per-draw cost O(n d^2).
    #[serde(rename = "bootstrap")]
    MultiplierBootstrap,
    #[serde(rename = "wishart")]
    /// Surrogate covariance (1/n) Wishart(n, sample covariance) via the
    /// Bartlett factorization; per-draw cost independent of n.
    WishartFb,
}

impl std::fmt::Display for ResamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResamplerKind::MultiplierBootstrap => write!(f, "bootstrap"),
            ResamplerKind::WishartFb => write!(f, "wishart"),
        }
    }
}

/// Resampling plan: draw count, master seed, engine.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DrawPlan {
    pub draws: usize,
    pub master_seed: u64,
    pub kind: ResamplerKind,
}

impl DrawPlan {
    pub fn new(draws: usize, master_seed: u64, kind: ResamplerKind) -> Result<Self> {
        if draws < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 resampling draws, got {draws}"
            )));
        }
        Ok(Self { draws, master_seed, kind })
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent RNG stream from a master seed and a key path
/// (e.g. [draw], or [angle, rep, draw]). Deterministic in the inputs and
/// unaffected by scheduling or worker count.
pub fn derive_rng(master_seed: u64, keys: &[u64]) -> ChaCha8Rng {
    let mut state = master_seed ^ 0x6a09_e667_f3bc_c908;
    splitmix64(&mut state);
    for &k in keys {
        state ^= k.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x85eb_ca6b);
        splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

pub fn derive_draw_rng(master_seed: u64, draw_index: u64) -> ChaCha8Rng {
    derive_rng(master_seed, &[draw_index])
}

/// Derives a sub-seed from a master seed and key path, for handing to code
/// that takes a u64 seed of its own.
pub fn derive_seed(master_seed: u64, keys: &[u64]) -> u64 {
    let mut state = master_seed ^ 0x6a09_e667_f3bc_c908;
    splitmix64(&mut state);
    for &k in keys {
        state ^= k.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x85eb_ca6b);
        splitmix64(&mut state);
    }
    splitmix64(&mut state)
}

/// (1/n) sum_i w_i x_i x_i^T for explicit weights. Exposed separately so the
/// degenerate all-ones case is testable against the sample covariance.
pub fn weighted_cov<T: Scalar>(data: &DenseMatrix<T>, weights: &[T]) -> Result<SymMatrix<T>> {
    let n = data.rows();
    let d = data.cols();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if weights.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} weights for {n} observations",
            weights.len()
        )));
    }
    let mut acc = vec![T::zero(); d * d];
    for i in 0..n {
        let w = weights[i];
        let row = data.row(i);
        for a in 0..d {
            let wxa = w * row[a];
            let dst = &mut acc[a * d..(a + 1) * d];
            for (dstb, &xb) in dst.iter_mut().zip(row).take(a + 1) {
                *dstb = *dstb + wxa * xb;
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

/// One multiplier-bootstrap draw: weights i.i.d. N(1,1). The result can be
/// indefinite; downstream rank selection works on the signed spectrum.
pub fn bootstrap_cov<T: Scalar>(data: &DenseMatrix<T>, rng: &mut impl Rng) -> Result<SymMatrix<T>>
where
    StandardNormal: Distribution<T>,
{
    let n = data.rows();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let weights: Vec<T> = (0..n)
        .map(|_| T::one() + rng.sample::<T, _>(StandardNormal))
        .collect();
    weighted_cov(data, &weights)
}

/// One Wishart draw (1/n) B W B^T with W ~ Wishart_r(n, I_r), where B is a
/// rank-r factor of the sample covariance (B B^T = sample covariance).
///
/// W is sampled by the Bartlett factorization W = L L^T: L lower triangular,
/// L_ii = sqrt(chi^2 with n-i+1 degrees of freedom), standard normal below
/// the diagonal. Cost is O(d r^2) per draw, independent of n.
pub fn wishart_cov<T: Scalar>(
    factor: &DenseMatrix<T>,
    n: usize,
    rng: &mut impl Rng,
) -> Result<SymMatrix<T>>
where
    StandardNormal: Distribution<T>,
    Exp1: Distribution<T>,
    Open01: Distribution<T>,
{
    let r = factor.cols();
    let d = factor.rows();
    if n < r {
        return Err(Error::DegreesOfFreedomTooSmall { n, r });
    }
    let mut l = DenseMatrix::zeros(r, r);
    for i in 0..r {
        let df = T::of((n - i) as f64);
        let gamma = Gamma::new(df * T::of(0.5), T::of(2.0))
            .map_err(|e| Error::NumericalFailure(format!("gamma sampler: {e}")))?;
        let chi2: T = gamma.sample(rng);
        l.set(i, i, chi2.sqrt());
        for j in 0..i {
            l.set(i, j, rng.sample::<T, _>(StandardNormal));
        }
    }
    let c = factor.matmul(&l); // d x r
    let mut out = SymMatrix::zeros(d);
    let inv_n = T::one() / T::of(n as f64);
    for a in 0..d {
        let ra = c.row(a);
        for b in 0..=a {
            let rb = c.row(b);
            let dot: T = ra.iter().zip(rb).map(|(&x, &y)| x * y).sum();
            out.set_sym(a, b, dot * inv_n);
        }
    }
    Ok(out)
}

/// Runs `draws` independent jobs, each with its own derived RNG stream, in
/// parallel. The output order is the draw index order, so the result is
/// byte-identical regardless of thread count.
pub fn run_draws<T: Send, F>(draws: usize, master_seed: u64, job: F) -> Vec<T>
where
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = derive_draw_rng(master_seed, k as u64);
            job(k, &mut rng)
        })
        .collect()
}
