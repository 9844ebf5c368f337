//! Covariance parameter estimation on the burn-in prefix: grid-search
//! Gaussian MLE over `(σ, ρ)` and the closed-form profile MLE of `σ` at a
//! fixed range.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariance::{autocov_row, CovOperator};
use crate::error::{invalid, Error, Result};
use crate::kernels::KernelSpec;

/// Cartesian grid of candidate `(σ, ρ)` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub sigmas: Vec<f64>,
    pub rhos: Vec<f64>,
}

impl ParamGrid {
    pub fn new(sigmas: Vec<f64>, rhos: Vec<f64>) -> Result<Self> {
        let grid = ParamGrid { sigmas, rhos };
        grid.validate()?;
        Ok(grid)
    }

    /// σ ∈ {0.2, 0.4, …, 2.0} and ρ ∈ {1/4.0, 1/3.9, …, 1/0.1}.
    pub fn standard() -> Self {
        let sigmas = (1..=10).map(|k| 0.2 * k as f64).collect();
        let rhos = (1..=40).rev().map(|k| 1.0 / (0.1 * k as f64)).collect();
        ParamGrid { sigmas, rhos }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.rhos.is_empty() {
            return Err(invalid("parameter grid must be nonempty"));
        }
        if self
            .sigmas
            .iter()
            .chain(&self.rhos)
            .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(invalid("grid values must be positive and finite"));
        }
        Ok(())
    }

    pub fn max_rho(&self) -> f64 {
        self.rhos.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn len(&self) -> usize {
        self.sigmas.len() * self.rhos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How the plug-in GLRT obtains its covariance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorChoice {
    /// Full Gaussian MLE by brute force over a grid.
    GridMle { grid: ParamGrid },
    /// Range fixed at `rho_fixed`, variance by profile MLE.
    FixedRho { rho_fixed: f64 },
    /// Returns the given parameters; used to compare against the known
    /// covariance GLRT.
    Oracle { sigma: f64, rho: f64 },
}

impl EstimatorChoice {
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorChoice::GridMle { grid } => grid.validate(),
            EstimatorChoice::FixedRho { rho_fixed }
                if !(*rho_fixed > 0.0) || !rho_fixed.is_finite() =>
            {
                Err(invalid(format!(
                    "rho_fixed must be positive, got {rho_fixed}"
                )))
            }
            EstimatorChoice::Oracle { sigma, rho } if !(*sigma > 0.0 && *rho > 0.0) => {
                Err(invalid("oracle parameters must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorChoice::GridMle { .. } => "grid-mle",
            EstimatorChoice::FixedRho { .. } => "fixed-rho",
            EstimatorChoice::Oracle { .. } => "oracle",
        }
    }
}

/// Fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub sigma_hat: f64,
    pub rho_hat: f64,
    pub loglik: f64,
    /// `σ̂ ρ̂^{-ν}` for families with a smoothness index.
    pub microergodic: Option<f64>,
}

fn microergodic(template: &KernelSpec, sigma: f64, rho: f64) -> Option<f64> {
    template.smoothness().map(|nu| sigma * rho.powf(-nu))
}

fn check_burn_in(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(invalid(format!(
            "burn-in needs at least 2 samples, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("burn-in samples must be finite"));
    }
    Ok(())
}

/// Zero-mean Gaussian log-likelihood of the prefix `x_burn` under `spec`.
/// The prefix sits on the spec's own grid (fixed domain: lags `k/n` with the
/// spec's `n`, not the prefix length).
pub fn gaussian_loglik(x_burn: &[f64], spec: &KernelSpec) -> Result<f64> {
    check_burn_in(x_burn)?;
    spec.validate()?;
    let m = x_burn.len();
    let cov = CovOperator::from_autocov(autocov_row(spec, m)?)?;
    let quad = cov.quad_form(x_burn)?;
    Ok(-0.5 * (m as f64 * (2.0 * PI).ln() + cov.log_det() + quad))
}

/// Unit-variance pieces for one range value: `log det C(ρ)` and `xᵀC(ρ)⁻¹x`.
struct Profile {
    log_det: f64,
    quad: f64,
}

fn profile(x: &[f64], template: &KernelSpec, rho: f64) -> Result<Profile> {
    let unit = template.with_params(1.0, rho);
    let cov = CovOperator::from_autocov(autocov_row(&unit, x.len())?)?;
    Ok(Profile {
        log_det: cov.log_det(),
        quad: cov.quad_form(x)?,
    })
}

/// `log L(σ, ρ)` from the unit-variance profile, using
/// `Σ(σ, ρ) = σ² C(ρ)`.
fn profile_loglik(m: usize, p: &Profile, sigma: f64) -> f64 {
    let mf = m as f64;
    -0.5 * (mf * (2.0 * PI).ln() + p.log_det + 2.0 * mf * sigma.ln() + p.quad / (sigma * sigma))
}

/// Grid-search MLE. Ties go to the smaller σ, then the smaller ρ. Grid
/// points whose covariance cannot be factored are skipped.
pub fn fit_grid_mle(x_burn: &[f64], template: &KernelSpec, grid: &ParamGrid) -> Result<FitResult> {
    check_burn_in(x_burn)?;
    grid.validate()?;
    let m = x_burn.len();
    let mut sigmas = grid.sigmas.clone();
    let mut rhos = grid.rhos.clone();
    sigmas.sort_by(f64::total_cmp);
    rhos.sort_by(f64::total_cmp);

    // one factorization per range value; σ enters in closed form
    let mut profiles = Vec::with_capacity(rhos.len());
    for &rho in &rhos {
        match profile(x_burn, template, rho) {
            Ok(p) => profiles.push(Some(p)),
            Err(Error::Conditioning { .. }) => profiles.push(None),
            Err(e) => return Err(e),
        }
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for &sigma in &sigmas {
        for (rho, p) in rhos.iter().zip(&profiles) {
            let Some(p) = p else { continue };
            let ll = profile_loglik(m, p, sigma);
            if !ll.is_finite() {
                continue;
            }
            if best.is_none_or(|(_, _, b)| ll > b) {
                best = Some((sigma, *rho, ll));
            }
        }
    }
    let (sigma_hat, rho_hat, loglik) = best.ok_or_else(|| {
        Error::EstimationFailed("no grid point admits a positive definite covariance".into())
    })?;
    Ok(FitResult {
        sigma_hat,
        rho_hat,
        loglik,
        microergodic: microergodic(template, sigma_hat, rho_hat),
    })
}

/// Profile MLE at a fixed range: `σ̂² = xᵀC(ρ)⁻¹x / m`.
pub fn fit_fixed_rho(x_burn: &[f64], template: &KernelSpec, rho_fixed: f64) -> Result<FitResult> {
    check_burn_in(x_burn)?;
    if !(rho_fixed > 0.0) || !rho_fixed.is_finite() {
        return Err(invalid(format!(
            "rho_fixed must be positive, got {rho_fixed}"
        )));
    }
    let m = x_burn.len();
    let p = profile(x_burn, template, rho_fixed)?;
    let sigma_hat = (p.quad / m as f64).sqrt();
    if !(sigma_hat > 0.0) {
        return Err(Error::EstimationFailed(
            "zero variance estimate gives a singular plug-in covariance".into(),
        ));
    }
    Ok(FitResult {
        sigma_hat,
        rho_hat: rho_fixed,
        loglik: profile_loglik(m, &p, sigma_hat),
        microergodic: microergodic(template, sigma_hat, rho_fixed),
    })
}

/// Runs `estimator` on the burn-in prefix.
pub fn fit(
    x_burn: &[f64],
    template: &KernelSpec,
    estimator: &EstimatorChoice,
) -> Result<FitResult> {
    estimator.validate()?;
    match estimator {
        EstimatorChoice::GridMle { grid } => fit_grid_mle(x_burn, template, grid),
        EstimatorChoice::FixedRho { rho_fixed } => fit_fixed_rho(x_burn, template, *rho_fixed),
        EstimatorChoice::Oracle { sigma, rho } => {
            let spec = template.with_params(*sigma, *rho);
            Ok(FitResult {
                sigma_hat: *sigma,
                rho_hat: *rho,
                loglik: gaussian_loglik(x_burn, &spec)?,
                microergodic: microergodic(template, *sigma, *rho),
            })
        }
    }
}
