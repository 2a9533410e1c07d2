//! Experiment machinery: rotated covariance construction, eigenvalue
//! regimes, Gaussian/Laplace data generation, and the Monte-Carlo power /
//! type-I harness.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{psd_factor, sym_eigen, sym_sqrt};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymMatrix};
use crate::num::Scalar;
use crate::resample::{derive_rng, DrawPlan, ResamplerKind};
use crate::spectral::{projector_for_selection, RankRange};
use crate::testing::{one_sample_test, two_sample_test, StatisticKind, TestConfig};

/// Eigenvalue regimes for synthetic covariance spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "regime", content = "eigenvalues")]
pub enum Regime {
    FactorModel,
    Spiked,
    Decay,
    Custom(Vec<f64>),
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::FactorModel => "factor_model",
            Regime::Spiked => "spiked",
            Regime::Decay => "decay",
            Regime::Custom(_) => "custom",
        }
    }

    /// Default tested subspace dimension for the regime.
    pub fn default_m(&self) -> usize {
        match self {
            Regime::FactorModel => 8,
            Regime::Spiked => 1,
            Regime::Decay => 5,
            Regime::Custom(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataDistribution {
    Gaussian,
    Laplace,
}

impl std::fmt::Display for DataDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataDistribution::Gaussian => write!(f, "gaussian"),
            DataDistribution::Laplace => write!(f, "laplace"),
        }
    }
}

/// Spectrum for a regime at dimension d, descending and strictly positive.
/// The factor-model tail is random and drawn from `rng` (once per scenario,
/// so all angles of one experiment share it).
pub fn regime_eigenvalues<T: Scalar>(
    regime: &Regime,
    d: usize,
    rng: &mut impl Rng,
) -> Result<Vec<T>> {
    let vals: Vec<T> = match regime {
        Regime::FactorModel => {
            if d < 9 {
                return Err(Error::InvalidDimension(format!("factor model needs d >= 9, got {d}")));
            }
            let df = d as f64;
            let mut v: Vec<T> = [5.0, 4.0, 3.5, 3.0, 2.5, 2.0, 1.5, 1.0]
                .iter()
                .map(|&c| T::of(c * df))
                .collect();
            let mut tail: Vec<T> =
                (0..d - 8).map(|_| T::of(rng.gen_range(0.5..1.5))).collect();
            tail.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
            v.extend(tail);
            v
        }
        Regime::Spiked => {
            if d < 4 {
                return Err(Error::InvalidDimension(format!("spiked needs d >= 4, got {d}")));
            }
            let mut v = vec![T::of(10.0), T::of(6.0), T::of(3.0)];
            v.extend(std::iter::repeat(T::one()).take(d - 3));
            v
        }
        Regime::Decay => {
            if d < 6 {
                return Err(Error::InvalidDimension(format!("decay needs d >= 6, got {d}")));
            }
            let mut v: Vec<T> = [10.0, 9.0, 8.0, 7.0, 6.0].iter().map(|&c| T::of(c)).collect();
            // mu_k = 2^{-(k-6)} for k = 6..d (1-based)
            v.extend((6..=d).map(|k| T::of(2f64.powi(-(k as i32 - 6)))));
            v
        }
        Regime::Custom(vals) => {
            if vals.len() != d {
                return Err(Error::InvalidDimension(format!(
                    "custom spectrum has {} values for d = {d}",
                    vals.len()
                )));
            }
            vals.iter().map(|&v| T::of(v)).collect()
        }
    };
    if vals.windows(2).any(|w| w[0] < w[1]) || vals.iter().any(|&v| v <= T::zero()) {
        return Err(Error::InvalidInput("spectrum must be descending and positive".into()));
    }
    Ok(vals)
}

/// Covariance with the given spectrum whose leading eigenvector is rotated
/// by `phi` in the plane of coordinates 1 and m+1. phi = 0 gives the
/// diagonal matrix; the rotation preserves the spectrum.
pub fn sigma_phi<T: Scalar>(eigenvalues: &[T], m: usize, phi: T) -> Result<SymMatrix<T>> {
    let d = eigenvalues.len();
    if m + 1 > d {
        return Err(Error::InvalidDimension(format!("need d >= m+1, got d = {d}, m = {m}")));
    }
    if eigenvalues.windows(2).any(|w| w[0] < w[1]) || eigenvalues.iter().any(|&v| v <= T::zero())
    {
        return Err(Error::InvalidInput("spectrum must be descending and positive".into()));
    }
    let (c, s) = (phi.cos(), phi.sin());
    let mu1 = eigenvalues[0];
    let mu_next = eigenvalues[m];
    let mut out = SymMatrix::diag(eigenvalues);
    out.set_sym(0, 0, mu1 * c * c + mu_next * s * s);
    out.set_sym(m, m, mu1 * s * s + mu_next * c * c);
    out.set_sym(0, m, (mu1 - mu_next) * c * s);
    Ok(out)
}

/// n observations (rows) with population covariance `sigma`.
pub fn sample_dataset<T: Scalar>(
    sigma: &SymMatrix<T>,
    dist: DataDistribution,
    n: usize,
    rng: &mut impl Rng,
) -> Result<DenseMatrix<T>>
where
    StandardNormal: Distribution<T>,
{
    let d = sigma.dim();
    match dist {
        DataDistribution::Gaussian => {
            let b = psd_factor(sigma, T::of(1e-10))?;
            let r = b.cols();
            let mut out = DenseMatrix::zeros(n, d);
            let mut z = vec![T::zero(); r];
            for i in 0..n {
                for zk in z.iter_mut() {
                    *zk = rng.sample(StandardNormal);
                }
                for j in 0..d {
                    let mut acc = T::zero();
                    for (k, &zk) in z.iter().enumerate() {
                        acc = acc + b.get(j, k) * zk;
                    }
                    out.set(i, j, acc);
                }
            }
            Ok(out)
        }
        DataDistribution::Laplace => {
            // unit-variance Laplace components, then color by the symmetric
            // square root so the covariance is exactly sigma
            let root = sym_sqrt(sigma, T::of(1e-10))?;
            let scale = T::one() / T::of(2.0).sqrt();
            let mut out = DenseMatrix::zeros(n, d);
            let mut x = vec![T::zero(); d];
            for i in 0..n {
                for xk in x.iter_mut() {
                    // inverse-CDF: u uniform on (-1/2, 1/2)
                    let u = T::of(rng.gen::<f64>() - 0.5);
                    let mag = -(T::one() - (u.abs() + u.abs())).ln() * scale;
                    *xk = if u < T::zero() { -mag } else { mag };
                }
                for j in 0..d {
                    let mut acc = T::zero();
                    for (k, &xk) in x.iter().enumerate() {
                        acc = acc + root.get(j, k) * xk;
                    }
                    out.set(i, j, acc);
                }
            }
            Ok(out)
        }
    }
}

/// One (statistic, resampler) combination evaluated by the harness.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Method {
    pub statistic: StatisticKind,
    pub resampler: ResamplerKind,
}

impl Method {
    pub fn label(&self) -> String {
        match self.statistic {
            StatisticKind::ProjNorm { s1, s2 } => format!("proj_norm_{s1}_{s2}"),
            StatisticKind::Spectral => "spectral".into(),
            StatisticKind::Frobenius => "frobenius".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub regime: Regime,
    pub distribution: DataDistribution,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Rotation angles in radians; include 0 for a type-I estimate.
    pub angles: Vec<f64>,
    /// Monte-Carlo repetitions per nonzero angle.
    pub reps: usize,
    /// Repetitions at phi = 0 (type-I error needs more accuracy).
    pub null_reps: usize,
    pub alpha: f64,
    pub draws: usize,
    pub methods: Vec<Method>,
    pub two_sample: bool,
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m + 1 > self.d {
            return Err(Error::InvalidDimension(format!(
                "m = {} out of range for d = {}",
                self.m, self.d
            )));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha = {}", self.alpha)));
        }
        if self.angles.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidInput("need at least one angle and one method".into()));
        }
        if self.reps == 0 || self.draws < 2 {
            return Err(Error::InvalidInput("reps >= 1 and draws >= 2 required".into()));
        }
        Ok(())
    }

    /// Desk-scale preset for a regime.
    pub fn preset(regime: Regime, two_sample: bool, master_seed: u64) -> Self {
        let (d, n) = match regime {
            Regime::FactorModel => (20, 500),
            _ => (10, 500),
        };
        let m = regime.default_m();
        Self {
            name: format!("{}_{}", regime.name(), if two_sample { "two" } else { "one" }),
            regime,
            distribution: DataDistribution::Gaussian,
            n,
            d,
            m,
            angles: vec![0.0, 0.05, 0.1, 0.2, 0.4],
            reps: 100,
            null_reps: 200,
            alpha: 0.05,
            draws: 500,
            methods: vec![
                Method {
                    statistic: StatisticKind::ProjNorm { s1: 1, s2: 1 },
                    resampler: ResamplerKind::WishartFb,
                },
                Method { statistic: StatisticKind::Spectral, resampler: ResamplerKind::WishartFb },
            ],
            two_sample,
            master_seed,
        }
    }
}

/// One output row of the harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerRow {
    pub scenario: String,
    pub regime: String,
    pub dist: String,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub angle: f64,
    pub method: String,
    pub resampler: String,
    pub reps: usize,
    pub rejection_rate: f64,
    pub mean_p: f64,
    pub seed: u64,
}

pub const POWER_CSV_HEADER: &str =
    "scenario,regime,dist,n,d,m,angle,method,resampler,reps,rejection_rate,mean_p,seed";

impl PowerRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.regime,
            self.dist,
            self.n,
            self.d,
            self.m,
            self.angle,
            self.method,
            self.resampler,
            self.reps,
            self.rejection_rate,
            self.mean_p,
            self.seed
        )
    }
}

// key-path tags for RNG stream derivation inside a scenario
const KEY_SPECTRUM: u64 = 0;
const KEY_DATA: u64 = 1;
const KEY_TEST: u64 = 2;

/// Runs the full power / type-I experiment. Deterministic given the master
/// seed: repetitions are independent jobs keyed by (angle, rep) and merged
/// in key order.
pub fn run_power_experiment(cfg: &ScenarioConfig) -> Result<Vec<PowerRow>> {
    cfg.validate()?;
    let mut spectrum_rng = derive_rng(cfg.master_seed, &[KEY_SPECTRUM]);
    let eigenvalues: Vec<f64> = regime_eigenvalues(&cfg.regime, cfg.d, &mut spectrum_rng)?;
    let sel = RankRange::new(1, cfg.m, cfg.d)?;
    let p_null = {
        let eig = sym_eigen(&SymMatrix::diag(&eigenvalues))?;
        projector_for_selection(&eig, &sel)?
    };

    let mut rows = Vec::new();
    for (angle_idx, &angle) in cfg.angles.iter().enumerate() {
        let reps = if angle == 0.0 { cfg.null_reps } else { cfg.reps };
        let sigma_pos = sigma_phi(&eigenvalues, cfg.m, angle)?;
        let sigma_neg = sigma_phi(&eigenvalues, cfg.m, -angle)?;

        // one dataset per rep, shared by all methods
        let outcomes: Vec<Result<Vec<(bool, f64)>>> = (0..reps)
            .into_par_iter()
            .map(|rep| -> Result<Vec<(bool, f64)>> {
                let mut data_rng =
                    derive_rng(cfg.master_seed, &[KEY_DATA, angle_idx as u64, rep as u64]);
                let rows_a = if cfg.two_sample { 2 * cfg.n } else { cfg.n };
                let data_a =
                    sample_dataset(&sigma_pos, cfg.distribution, rows_a, &mut data_rng)?;
                let data_b = if cfg.two_sample {
                    Some(sample_dataset(&sigma_neg, cfg.distribution, 2 * cfg.n, &mut data_rng)?)
                } else {
                    None
                };
                cfg.methods
                    .iter()
                    .enumerate()
                    .map(|(mi, method)| -> Result<(bool, f64)> {
                        let test_seed = crate::resample::derive_seed(
                            cfg.master_seed,
                            &[KEY_TEST, angle_idx as u64, rep as u64, mi as u64],
                        );
                        let tc = TestConfig {
                            alpha: cfg.alpha,
                            statistic: method.statistic,
                            plan: DrawPlan::new(cfg.draws, test_seed, method.resampler)?,
                            grouping_tol: 1e-9,
                            center: false,
                        };
                        let report = match &data_b {
                            Some(b) => two_sample_test(&data_a, b, &sel, &sel, &tc)?,
                            None => one_sample_test(&data_a, &p_null, &sel, &tc)?,
                        };
                        Ok((report.reject, report.p_value))
                    })
                    .collect()
            })
            .collect();

        let per_rep: Vec<Vec<(bool, f64)>> =
            outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        for (mi, method) in cfg.methods.iter().enumerate() {
            let rejections = per_rep.iter().filter(|reps| reps[mi].0).count();
            let mean_p: f64 =
                per_rep.iter().map(|reps| reps[mi].1).sum::<f64>() / reps as f64;
            rows.push(PowerRow {
                scenario: cfg.name.clone(),
                regime: cfg.regime.name().into(),
                dist: cfg.distribution.to_string(),
                n: cfg.n,
                d: cfg.d,
                m: cfg.m,
                angle,
                method: method.label(),
                resampler: method.resampler.to_string(),
                reps,
                rejection_rate: rejections as f64 / reps as f64,
                mean_p,
                seed: cfg.master_seed,
            });
        }
    }
    Ok(rows)
}
