//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use meanshift_core::sim::{stream_rng, TrialGenerator};
use meanshift_core::{build_cov, ChangeWindow, CovOperator, KernelSpec};

/// The reference design: Matern(σ = 1, ρ = 0.5, ν) on `n` points of `[0, 1]`.
pub fn matern(nu: f64, n: usize) -> KernelSpec {
    KernelSpec::matern(1.0, 0.5, nu, n).expect("valid spec")
}

pub fn window(n: usize) -> ChangeWindow {
    ChangeWindow::new(n, 0.1).expect("valid window")
}

/// The factored covariance of `spec` and one null draw from it.
pub fn series(spec: &KernelSpec, seed: u64) -> (CovOperator, Vec<f64>) {
    let cov = build_cov(spec).expect("factorizable");
    let generator =
        TrialGenerator::new(Arc::new(cov.clone()), window(spec.n())).expect("matching sizes");
    let x = generator.noise(&mut stream_rng(seed, 0));
    (cov, x)
}
