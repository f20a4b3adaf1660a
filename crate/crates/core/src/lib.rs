//! Shrinkage covariance estimation for high-dimensional, small-sample
//! Gaussian data, with the Monte Carlo and beamforming harnesses used to
//! benchmark the estimators.
//!
//! The estimators ([`estimators`]) form convex combinations of the sample
//! covariance with the scaled identity, choosing the combination weight by
//! the clairvoyant (oracle) rule, the Ledoit-Wolf plug-in rule, its
//! Rao-Blackwellization (RBLW), or oracle-approximating shrinkage (OAS).
//! [`models`] generates the autoregressive and fractional-Brownian-motion
//! covariance families with a seeded Gaussian sampler; [`complexcov`] and
//! [`beamform`] extend the estimators to complex array snapshots and Capon
//! beamforming; [`montecarlo`] runs reproducible MSE/SINR sweeps and
//! verifies the Gaussian moment identities behind the coefficient formulas.

pub mod beamform;
pub mod complexcov;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod models;
pub mod montecarlo;
pub mod rng;

pub use error::{Error, Result};
pub use estimators::{
    estimate, lw_rho, oas_iterate, oas_rho, oracle_rho, rblw_rho, rho_param, sample_covariance,
    shrinkage_target, statistics, CovEstimate, Method, RhoEstimate, RhoParams, SampleCov,
    SampleSet, ShrinkageStatistics,
};
pub use models::{ar1_cov, fbm_cov, CovModel, CovModelKind, GaussianSampler};
pub use montecarlo::{
    mse_frobenius, run_mse_experiment, run_sinr_experiment, verify_haar_moments,
    verify_norm_moment, verify_wishart_moments, CellResult, ExperimentConfig, ExperimentModel,
    ExperimentResult, MetricKind, VerificationReport,
};
