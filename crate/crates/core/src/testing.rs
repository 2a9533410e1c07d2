//! One- and two-sample eigenspace tests, confidence sets, and the
//! quantile / p-value machinery.

use rand_distr::{Distribution, Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eigen::{psd_factor, sym_eigen, sym_spectral_norm};
use crate::error::{Error, Result};
use crate::matrix::{sample_covariance, sym_frobenius_norm, DenseMatrix, SymMatrix};
use crate::norm::{proj_norm, NormParams};
use crate::num::Scalar;
use crate::resample::{bootstrap_cov, run_draws, wishart_cov, DrawPlan, ResamplerKind};
use crate::spectral::{
    eff_dim_rj, eff_dim_rre, frame_from_projector, group_eigenvalues, kappa_stats,
    projector_for_selection, GroupRange, ProjectorFrame, RankRange,
};

/// Which norm the deviation matrix is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StatisticKind {
    ProjNorm { s1: usize, s2: usize },
    Spectral,
    Frobenius,
}

impl StatisticKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::ProjNorm { .. } => "proj_norm",
            StatisticKind::Spectral => "spectral",
            StatisticKind::Frobenius => "frobenius",
        }
    }

    pub fn params(&self) -> Option<NormParams> {
        match self {
            StatisticKind::ProjNorm { s1, s2 } => Some(NormParams::new(*s1, *s2)),
            _ => None,
        }
    }
}

/// Norm of a deviation matrix under the configured statistic, anchored at
/// the given frame (only the projector-anchored norm uses the frame).
pub fn deviation_norm<T: Scalar>(
    dev: &SymMatrix<T>,
    frame: &ProjectorFrame<T>,
    kind: &StatisticKind,
) -> Result<T> {
    match kind {
        StatisticKind::ProjNorm { s1, s2 } => {
            proj_norm(dev, frame, &NormParams::new(*s1, *s2))
        }
        StatisticKind::Spectral => sym_spectral_norm(dev),
        StatisticKind::Frobenius => Ok(sym_frobenius_norm(dev)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub statistic: StatisticKind,
    pub plan: DrawPlan,
    /// Relative tolerance for grouping population eigenvalues (diagnostics).
    pub grouping_tol: f64,
    /// Subtract column means before forming covariances. The model assumes
    /// mean-zero data, so this is off by default.
    pub center: bool,
}

impl TestConfig {
    pub fn new(alpha: f64, statistic: StatisticKind, plan: DrawPlan) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha = {alpha} not in (0,1)")));
        }
        Ok(Self { alpha, statistic, plan, grouping_tol: 1e-9, center: false })
    }

    fn validate_statistic(&self, m: usize, d: usize) -> Result<()> {
        if let Some(p) = self.statistic.params() {
            p.validate(m, d)?;
        }
        Ok(())
    }

    /// alpha * N >= 1 is recommended; below that the empirical quantile
    /// saturates at the sample maximum.
    pub fn quantile_resolution_ok(&self) -> bool {
        self.alpha * self.plan.draws as f64 >= 1.0
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DrawSummary {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl DrawSummary {
    fn from_sorted(sorted: &[f64]) -> Self {
        let n = sorted.len();
        Self {
            count: n,
            min: sorted[0],
            median: if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            },
            max: sorted[n - 1],
        }
    }
}

/// Spectrum diagnostics attached to a report; computed from the sample
/// spectrum (all eigenvalues treated as distinct).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub kappa_under: f64,
    pub kappa_over: f64,
    pub kappa_ratio: f64,
    pub eff_dim_rj: f64,
    pub eff_dim_rre: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub statistic_kind: StatisticKind,
    pub resampler: ResamplerKind,
    pub draws: DrawSummary,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Number of resampled statistics exactly tying the observed one; when
    /// positive, p_value <= alpha and reject may disagree at the boundary.
    pub ties: usize,
    /// Rows discarded to make sample sizes even (two-sample / CS splitting).
    pub dropped_rows: usize,
    pub diagnostics: Option<Diagnostics>,
}

/// Empirical upper-alpha quantile: the k-th ascending order statistic with
/// k = ceil((1-alpha) * N), i.e. the smallest value exceeded by at most an
/// alpha-fraction of the sample.
pub fn upper_quantile<T: Scalar>(samples: &[T], alpha: f64) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draw values"));
    let k = ((1.0 - alpha) * n as f64).ceil() as usize;
    let k = k.clamp(1, n);
    Ok(sorted[k - 1])
}

/// Fraction of resampled statistics at least as extreme as the observed one.
pub fn p_value<T: Scalar>(samples: &[T], stat: T) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let count = samples.iter().filter(|&&s| s >= stat).count();
    Ok(count as f64 / samples.len() as f64)
}

/// Frame extraction that distinguishes "not a projector" from "projector of
/// the wrong rank".
fn anchor_frame<T: Scalar>(p: &SymMatrix<T>, m: usize) -> Result<ProjectorFrame<T>> {
    let eig = sym_eigen(p)?;
    let tol = T::of(0.1);
    let mut ones = 0usize;
    for &v in &eig.values {
        if (v - T::one()).abs() <= tol {
            ones += 1;
        } else if v.abs() > tol {
            return Err(Error::NotAProjector {
                expected: m,
                detail: format!("eigenvalue {v} not near 0 or 1"),
            });
        }
    }
    if ones != m {
        return Err(Error::RankMismatch(format!(
            "projector has rank {ones}, selection has m = {m}"
        )));
    }
    frame_from_projector(p, m)
}

fn sample_diagnostics<T: Scalar>(values: &[T], sel: &RankRange) -> Option<Diagnostics> {
    // sample eigenvalues are distinct with probability one; group indices
    // coincide with ranks
    let groups = group_eigenvalues(values, T::zero()).ok()?;
    if groups.count() != values.len() {
        return None;
    }
    let j = GroupRange::new(sel.start() - 1, sel.end() - 1);
    let k = kappa_stats(&groups, &j).ok()?;
    Some(Diagnostics {
        kappa_under: k.under.to_f64_lossy(),
        kappa_over: k.over.to_f64_lossy(),
        kappa_ratio: k.ratio.to_f64_lossy(),
        eff_dim_rj: eff_dim_rj(&groups, &j).ok()?.to_f64_lossy(),
        eff_dim_rre: eff_dim_rre(&groups, &j).ok()?.to_f64_lossy(),
    })
}

fn assemble_report<T: Scalar>(
    stat: T,
    draw_stats: Vec<T>,
    cfg: &TestConfig,
    n: usize,
    d: usize,
    m: usize,
    dropped_rows: usize,
    diagnostics: Option<Diagnostics>,
) -> Result<TestReport> {
    let q = upper_quantile(&draw_stats, cfg.alpha)?;
    let p = p_value(&draw_stats, stat)?;
    let ties = draw_stats.iter().filter(|&&s| s == stat).count();
    let mut sorted: Vec<f64> = draw_stats.iter().map(|s| s.to_f64_lossy()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draw values"));
    Ok(TestReport {
        statistic: stat.to_f64_lossy(),
        critical_value: q.to_f64_lossy(),
        p_value: p,
        reject: stat >= q,
        alpha: cfg.alpha,
        statistic_kind: cfg.statistic,
        resampler: cfg.plan.kind,
        draws: DrawSummary::from_sorted(&sorted),
        seed: cfg.plan.master_seed,
        n,
        d,
        m,
        ties,
        dropped_rows,
        diagnostics,
    })
}

/// Resamples a surrogate covariance and returns the projector for the same
/// ranks, on the signed descending spectrum (the bootstrap surrogate may be
/// indefinite).
fn resampled_projector<T: Scalar>(
    kind: ResamplerKind,
    data: &DenseMatrix<T>,
    wishart_factor: Option<&DenseMatrix<T>>,
    n: usize,
    sel: &RankRange,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<SymMatrix<T>>
where
    StandardNormal: Distribution<T>,
    Exp1: Distribution<T>,
    Open01: Distribution<T>,
{
    let sigma = match kind {
        ResamplerKind::MultiplierBootstrap => bootstrap_cov(data, rng)?,
        ResamplerKind::WishartFb => {
            wishart_cov(wishart_factor.expect("factor precomputed"), n, rng)?
        }
    };
    let eig = sym_eigen(&sigma)?;
    projector_for_selection(&eig, sel)
}

/// One-sample test: is the eigenspace of the selected ranks equal to the
/// range of the hypothesized projector?
pub fn one_sample_test<T: Scalar>(
    data: &DenseMatrix<T>,
    p0: &SymMatrix<T>,
    sel: &RankRange,
    cfg: &TestConfig,
) -> Result<TestReport>
where
    StandardNormal: Distribution<T>,
    Exp1: Distribution<T>,
    Open01: Distribution<T>,
{
    let n = data.rows();
    let d = data.cols();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    if p0.dim() != d {
        return Err(Error::InvalidInput(format!(
            "projector dimension {} does not match data dimension {d}",
            p0.dim()
        )));
    }
    let m = sel.m();
    if sel.end() > d {
        return Err(Error::InvalidSelection(format!("rank range exceeds dimension {d}")));
    }
    cfg.validate_statistic(m, d)?;
    let frame = anchor_frame(p0, m)?;

    let sigma_hat = sample_covariance(data, cfg.center)?;
    let eig = sym_eigen(&sigma_hat)?;
    let p_hat = projector_for_selection(&eig, sel)?;
    let sqrt_n = T::of(n as f64).sqrt();
    let stat = sqrt_n * deviation_norm(&p_hat.sub(p0), &frame, &cfg.statistic)?;

    let factor = match cfg.plan.kind {
        ResamplerKind::WishartFb => Some(psd_factor(&sigma_hat, T::of(1e-10))?),
        ResamplerKind::MultiplierBootstrap => None,
    };
    let draw_stats: Vec<T> = collect_draws(run_draws(
        cfg.plan.draws,
        cfg.plan.master_seed,
        |_, rng| -> Result<T> {
            let p_r = resampled_projector(cfg.plan.kind, data, factor.as_ref(), n, sel, rng)?;
            Ok(sqrt_n * deviation_norm(&p_r.sub(&p_hat), &frame, &cfg.statistic)?)
        },
    ))?;

    let diagnostics = sample_diagnostics(&eig.values, sel);
    assemble_report(stat, draw_stats, cfg, n, d, m, 0, diagnostics)
}

fn collect_draws<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Rank-m projector closest (in summed squared Frobenius distance) to two
/// rank-m projectors: the top-m eigenspace of their sum.
pub fn pooled_projector<T: Scalar>(
    pa: &SymMatrix<T>,
    pb: &SymMatrix<T>,
    m: usize,
) -> Result<SymMatrix<T>> {
    let d = pa.dim();
    if pb.dim() != d {
        return Err(Error::InvalidInput("projector dimension mismatch".into()));
    }
    anchor_frame(pa, m)?;
    anchor_frame(pb, m)?;
    let eig = sym_eigen(&pa.add(pb))?;
    projector_for_selection(&eig, &RankRange::new(1, m, d)?)
}

fn split_halves<T: Scalar>(data: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>, usize)> {
    let rows = data.rows();
    let dropped = rows % 2;
    let half = (rows - dropped) / 2;
    if half < 2 {
        return Err(Error::TooFewObservations(rows));
    }
    let d = data.cols();
    let first = DenseMatrix::from_fn(half, d, |i, j| data.get(i, j));
    let second = DenseMatrix::from_fn(half, d, |i, j| data.get(half + i, j));
    Ok((first, second, dropped))
}

/// Two-sample test: do the selected eigenspaces of two populations coincide?
/// Each sample is split in half; the second halves only pin the anchor
/// (pooled projector and its frame), the first halves carry the statistic
/// and the resampling.
pub fn two_sample_test<T: Scalar>(
    data_a: &DenseMatrix<T>,
    data_b: &DenseMatrix<T>,
    sel_a: &RankRange,
    sel_b: &RankRange,
    cfg: &TestConfig,
) -> Result<TestReport>
where
    StandardNormal: Distribution<T>,
    Exp1: Distribution<T>,
    Open01: Distribution<T>,
{
    let d = data_a.cols();
    if data_b.cols() != d {
        return Err(Error::InvalidInput("samples have different dimensions".into()));
    }
    let m = sel_a.m();
    if sel_b.m() != m {
        return Err(Error::RankMismatch(format!(
            "selections pick {} and {} eigenvectors",
            m,
            sel_b.m()
        )));
    }
    cfg.validate_statistic(m, d)?;

    let (first_a, second_a, drop_a) = split_halves(data_a)?;
    let (first_b, second_b, drop_b) = split_halves(data_b)?;
    let (na, nb) = (first_a.rows(), first_b.rows());

    let sig_a = sample_covariance(&first_a, cfg.center)?;
    let sig_b = sample_covariance(&first_b, cfg.center)?;
    let bar_a = sample_covariance(&second_a, cfg.center)?;
    let bar_b = sample_covariance(&second_b, cfg.center)?;

    let eig_a = sym_eigen(&sig_a)?;
    let eig_b = sym_eigen(&sig_b)?;
    let p_hat_a = projector_for_selection(&eig_a, sel_a)?;
    let p_hat_b = projector_for_selection(&eig_b, sel_b)?;
    let p_bar_a = projector_for_selection(&sym_eigen(&bar_a)?, sel_a)?;
    let p_bar_b = projector_for_selection(&sym_eigen(&bar_b)?, sel_b)?;

    let p_bar = pooled_projector(&p_bar_a, &p_bar_b, m)?;
    let frame = frame_from_projector(&p_bar, m)?;

    let scale = T::of((na as f64 * nb as f64) / (na + nb) as f64).sqrt();
    let stat = scale * deviation_norm(&p_hat_a.sub(&p_hat_b), &frame, &cfg.statistic)?;

    let (fac_a, fac_b) = match cfg.plan.kind {
        ResamplerKind::WishartFb => (
            Some(psd_factor(&sig_a, T::of(1e-10))?),
            Some(psd_factor(&sig_b, T::of(1e-10))?),
        ),
        ResamplerKind::MultiplierBootstrap => (None, None),
    };
    let draw_stats: Vec<T> = collect_draws(run_draws(
        cfg.plan.draws,
        cfg.plan.master_seed,
        |_, rng| -> Result<T> {
            let p_ra =
                resampled_projector(cfg.plan.kind, &first_a, fac_a.as_ref(), na, sel_a, rng)?;
            let p_rb =
                resampled_projector(cfg.plan.kind, &first_b, fac_b.as_ref(), nb, sel_b, rng)?;
            let dev = p_ra.sub(&p_hat_a).sub(&p_rb.sub(&p_hat_b));
            Ok(scale * deviation_norm(&dev, &frame, &cfg.statistic)?)
        },
    ))?;

    let diagnostics = sample_diagnostics(&eig_a.values, sel_a);
    assemble_report(stat, draw_stats, cfg, na + nb, d, m, drop_a + drop_b, diagnostics)
}

/// Resampling confidence set for the true spectral projector. Membership is
/// a norm-ball query around the first-half projector, anchored at the
/// second-half frame.
#[derive(Debug, Clone)]
pub struct ConfidenceSet<T> {
    pub center: SymMatrix<T>,
    pub anchor: ProjectorFrame<T>,
    pub threshold: T,
    pub alpha: f64,
    pub statistic: StatisticKind,
    pub n: usize,
    pub m: usize,
    pub dropped_rows: usize,
}

pub fn confidence_set<T: Scalar>(
    data: &DenseMatrix<T>,
    sel: &RankRange,
    cfg: &TestConfig,
) -> Result<ConfidenceSet<T>>
where
    StandardNormal: Distribution<T>,
    Exp1: Distribution<T>,
    Open01: Distribution<T>,
{
    let d = data.cols();
    let m = sel.m();
    cfg.validate_statistic(m, d)?;
    let (first, second, dropped) = split_halves(data)?;
    let n = first.rows();

    let sigma_hat = sample_covariance(&first, cfg.center)?;
    let sigma_bar = sample_covariance(&second, cfg.center)?;
    let p_hat = projector_for_selection(&sym_eigen(&sigma_hat)?, sel)?;
    let p_bar = projector_for_selection(&sym_eigen(&sigma_bar)?, sel)?;
    let anchor = frame_from_projector(&p_bar, m)?;

    let factor = match cfg.plan.kind {
        ResamplerKind::WishartFb => Some(psd_factor(&sigma_hat, T::of(1e-10))?),
        ResamplerKind::MultiplierBootstrap => None,
    };
    let sqrt_n = T::of(n as f64).sqrt();
    let draw_stats: Vec<T> = collect_draws(run_draws(
        cfg.plan.draws,
        cfg.plan.master_seed,
        |_, rng| -> Result<T> {
            let p_r = resampled_projector(cfg.plan.kind, &first, factor.as_ref(), n, sel, rng)?;
            Ok(sqrt_n * deviation_norm(&p_r.sub(&p_hat), &anchor, &cfg.statistic)?)
        },
    ))?;
    let threshold = upper_quantile(&draw_stats, cfg.alpha)?;
    Ok(ConfidenceSet {
        center: p_hat,
        anchor,
        threshold,
        alpha: cfg.alpha,
        statistic: cfg.statistic,
        n,
        m,
        dropped_rows: dropped,
    })
}

/// Membership query: sqrt(n) * ||candidate - center|| <= threshold.
pub fn cs_contains<T: Scalar>(cs: &ConfidenceSet<T>, candidate: &SymMatrix<T>) -> Result<bool> {
    anchor_frame(candidate, cs.m).map_err(|e| match e {
        Error::RankMismatch(msg) => Error::NotAProjector { expected: cs.m, detail: msg },
        other => other,
    })?;
    let dist = T::of(cs.n as f64).sqrt()
        * deviation_norm(&candidate.sub(&cs.center), &cs.anchor, &cs.statistic)?;
    Ok(dist <= cs.threshold)
}
