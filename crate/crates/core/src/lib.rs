//! Hypothesis tests and confidence sets for eigenspaces of covariance
//! matrices.
//!
//! The library tests whether the projector onto a group of leading
//! eigenvectors of a covariance matrix equals a hypothesized projector
//! (one sample), or whether two populations share an eigenspace (two
//! samples). Critical values come from resampling: a multiplier bootstrap
//! or a Wishart draw around the sample covariance. The test statistic is a
//! windowed projector norm that interpolates between the spectral norm and
//! the entrywise maximum of the cross block, with the two extremes also
//! available directly.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the CLI and the simulation
//! harness use.

pub mod eigen;
pub mod error;
pub mod io;
pub mod matrix;
pub mod norm;
pub mod num;
pub mod resample;
pub mod sim;
pub mod spectral;
pub mod testing;

pub use error::{Error, Result};
pub use num::Scalar;

pub use eigen::{psd_factor, spectral_norm, sym_eigen, sym_sqrt};
pub use matrix::sample_covariance;
pub use norm::{covering_bound, proj_norm, NormParams};
pub use resample::{derive_rng, derive_seed, DrawPlan, ResamplerKind};
pub use sim::{
    regime_eigenvalues, run_power_experiment, sample_dataset, sigma_phi, DataDistribution,
    Method, PowerRow, Regime, ScenarioConfig, POWER_CSV_HEADER,
};
pub use spectral::{
    eff_dim_rj, eff_dim_rre, frame_from_projector, group_eigenvalues, kappa_stats, linear_term,
    projector_for_selection, relative_rank, GroupRange, KappaStats, RankRange,
};
pub use testing::{
    confidence_set, cs_contains, one_sample_test, two_sample_test, ConfidenceSet, StatisticKind,
    TestConfig, TestReport,
};

/// Double-precision aliases used throughout the CLI.
pub type Matrix = matrix::DenseMatrix<f64>;
pub type SymMat = matrix::SymMatrix<f64>;
pub type Eigen = eigen::EigenSystem<f64>;
pub type Frame = spectral::ProjectorFrame<f64>;
pub type Groups = spectral::SpectralGroups<f64>;
