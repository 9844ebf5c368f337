#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Detection of a single abrupt shift in the mean of one-dimensional
//! Gaussian process data.
//!
//! The crate covers covariance kernels ([`kernels`]), factored Toeplitz
//! covariance matrices ([`covariance`]), the GLRT, plug-in GLRT and CUSUM
//! detectors ([`detectors`]), covariance parameter estimation on a burn-in
//! prefix ([`estimation`]) and a Monte Carlo ROC/AUC harness ([`sim`]).

pub mod covariance;
pub mod detectors;
pub mod error;
pub mod estimation;
pub mod kernels;
pub mod sim;
mod special;

pub use covariance::{build_cov, CovOperator};
pub use detectors::{
    cusum, gbeta, glrt, glrt_general, plugin_glrt, threshold_cusum, threshold_glrt, ChangeWindow,
    CusumDomain, DetectionResult, GlrtPlan, PluginOutcome,
};
pub use error::{Error, Result};
pub use estimation::{
    fit_fixed_rho, fit_grid_mle, gaussian_loglik, EstimatorChoice, FitResult, ParamGrid,
};
pub use kernels::{
    eval_cov, eval_spectral, toeplitz_cov_seq, toeplitz_generator_at, Domain, KernelFamily,
    KernelSpec,
};
pub use sim::{
    gen_trial, rate_curve, roc_auc, run_auc_experiment, run_auc_experiments, AucSummary,
    DetectorChoice, Experiment, RateConfig, RatePoint, RocCurve, TrialConfig,
};
pub use special::bessel_k;
