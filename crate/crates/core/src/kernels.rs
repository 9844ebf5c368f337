//! Stationary covariance kernels and their spectral densities.
//!
//! Spectral densities follow the convention
//! `K̂(ω) = ∫ K(r) e^{-iωr} dr`, so that `K(r) = (1/2π) ∫ K̂(ω) e^{iωr} dω`
//! and in particular `K(0) = (1/2π) ∫ K̂`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::special::{bessel_k, gauss_legendre, hurwitz_zeta};

/// Covariance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// Matern with smoothness `shape = ν`.
    Matern,
    /// `σ² exp(-|r/ρ|^β)` with `shape = β ∈ (0, 2)`.
    PoweredExponential,
    /// `σ² exp(-(r/ρ)²/2)`.
    SquaredExponential,
    /// `σ² (1 - |r/ρ|)₊`.
    Triangular,
    /// Toeplitz autocovariance `σ² exp(-k/ρ)`.
    ExpToeplitz,
    /// Toeplitz autocovariance `σ² (1 + k/ρ)^{-(1+λ)}` with `shape = λ`.
    PolyToeplitz,
    /// Uncorrelated samples with variance `σ²`.
    WhiteNoise,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Matern => "matern",
            KernelFamily::PoweredExponential => "powered-exponential",
            KernelFamily::SquaredExponential => "squared-exponential",
            KernelFamily::Triangular => "triangular",
            KernelFamily::ExpToeplitz => "exp-toeplitz",
            KernelFamily::PolyToeplitz => "poly-toeplitz",
            KernelFamily::WhiteNoise => "white-noise",
        }
    }

    /// Families defined only through their integer-lag autocovariance.
    pub fn is_toeplitz_only(self) -> bool {
        matches!(self, KernelFamily::ExpToeplitz | KernelFamily::PolyToeplitz)
    }

    pub fn uses_shape(self) -> bool {
        matches!(
            self,
            KernelFamily::Matern | KernelFamily::PoweredExponential | KernelFamily::PolyToeplitz
        )
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "matern" => KernelFamily::Matern,
            "powered-exponential" | "powexp" => KernelFamily::PoweredExponential,
            "squared-exponential" | "sqexp" | "gaussian" => KernelFamily::SquaredExponential,
            "triangular" => KernelFamily::Triangular,
            "exp-toeplitz" => KernelFamily::ExpToeplitz,
            "poly-toeplitz" => KernelFamily::PolyToeplitz,
            "white-noise" | "white" => KernelFamily::WhiteNoise,
            other => return Err(invalid(format!("unknown kernel family '{other}'"))),
        })
    }
}

/// Sampling design: `n` points on `[0, 1]` at `k/n`, or `n` points at unit
/// spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Fixed { n: usize },
    Increasing { n: usize },
}

impl Domain {
    pub fn n(self) -> usize {
        match self {
            Domain::Fixed { n } | Domain::Increasing { n } => n,
        }
    }

    pub fn is_fixed(self) -> bool {
        matches!(self, Domain::Fixed { .. })
    }

    pub fn with_n(self, n: usize) -> Domain {
        match self {
            Domain::Fixed { .. } => Domain::Fixed { n },
            Domain::Increasing { .. } => Domain::Increasing { n },
        }
    }

    /// Physical distance between consecutive samples.
    pub fn spacing(self) -> f64 {
        match self {
            Domain::Fixed { n } => 1.0 / n as f64,
            Domain::Increasing { .. } => 1.0,
        }
    }
}

/// A covariance family with its parameters and sampling design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma: f64,
    pub rho: f64,
    /// ν (Matern), β (powered exponential) or λ (polynomial Toeplitz).
    #[serde(default)]
    pub shape: f64,
    pub domain: Domain,
}

impl KernelSpec {
    /// Builds and validates a spec.
    pub fn new(
        family: KernelFamily,
        sigma: f64,
        rho: f64,
        shape: f64,
        domain: Domain,
    ) -> Result<Self> {
        let spec = KernelSpec {
            family,
            sigma,
            rho,
            shape,
            domain,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn matern(sigma: f64, rho: f64, nu: f64, n: usize) -> Result<Self> {
        Self::new(KernelFamily::Matern, sigma, rho, nu, Domain::Fixed { n })
    }

    pub fn powered_exponential(sigma: f64, rho: f64, beta: f64, n: usize) -> Result<Self> {
        Self::new(
            KernelFamily::PoweredExponential,
            sigma,
            rho,
            beta,
            Domain::Fixed { n },
        )
    }

    pub fn squared_exponential(sigma: f64, rho: f64, n: usize) -> Result<Self> {
        Self::new(
            KernelFamily::SquaredExponential,
            sigma,
            rho,
            0.0,
            Domain::Fixed { n },
        )
    }

    pub fn triangular(sigma: f64, rho: f64, n: usize) -> Result<Self> {
        Self::new(
            KernelFamily::Triangular,
            sigma,
            rho,
            0.0,
            Domain::Fixed { n },
        )
    }

    pub fn exp_toeplitz(sigma: f64, rho: f64, n: usize) -> Result<Self> {
        Self::new(
            KernelFamily::ExpToeplitz,
            sigma,
            rho,
            0.0,
            Domain::Increasing { n },
        )
    }

    pub fn poly_toeplitz(sigma: f64, rho: f64, lambda: f64, n: usize) -> Result<Self> {
        Self::new(
            KernelFamily::PolyToeplitz,
            sigma,
            rho,
            lambda,
            Domain::Increasing { n },
        )
    }

    /// `σ² I`. The range parameter is unused and set to 1.
    pub fn white_noise(sigma: f64, n: usize) -> Result<Self> {
        Self::new(
            KernelFamily::WhiteNoise,
            sigma,
            1.0,
            0.0,
            Domain::Increasing { n },
        )
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    pub fn with_n(&self, n: usize) -> KernelSpec {
        KernelSpec {
            domain: self.domain.with_n(n),
            ..*self
        }
    }

    pub fn with_params(&self, sigma: f64, rho: f64) -> KernelSpec {
        KernelSpec {
            sigma,
            rho,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(invalid(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(invalid(format!("rho must be positive, got {}", self.rho)));
        }
        let shape = self.shape;
        match self.family {
            KernelFamily::Matern if !(shape > 0.0 && shape.is_finite()) => {
                return Err(invalid(format!(
                    "Matern smoothness must be positive, got {shape}"
                )))
            }
            KernelFamily::PoweredExponential if !(shape > 0.0 && shape < 2.0) => {
                return Err(invalid(format!(
                    "powered exponential beta must lie in (0, 2), got {shape}"
                )))
            }
            KernelFamily::PolyToeplitz if !(shape > 0.0 && shape.is_finite()) => {
                return Err(invalid(format!(
                    "polynomial decay lambda must be positive, got {shape}"
                )))
            }
            _ => {}
        }
        if self.family.is_toeplitz_only() && self.domain.is_fixed() {
            return Err(invalid(format!(
                "{} is an increasing-domain family and cannot be sampled on a fixed domain",
                self.family.name()
            )));
        }
        Ok(())
    }

    /// Smoothness index ν of the spectral tail `K̂(ω) ≍ ω^{-(2ν+1)}`, where
    /// the family has one.
    pub fn smoothness(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Matern => Some(self.shape),
            KernelFamily::PoweredExponential => Some(self.shape / 2.0),
            KernelFamily::Triangular => Some(0.5),
            _ => None,
        }
    }
}

fn matern_correlation(x: f64, nu: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(1.0);
    }
    // closed forms for the half-integer orders in common use
    if nu == 0.5 {
        return Ok((-x).exp());
    }
    if nu == 1.5 {
        return Ok((1.0 + x) * (-x).exp());
    }
    if nu == 2.5 {
        return Ok((1.0 + x + x * x / 3.0) * (-x).exp());
    }
    if x > 700.0 {
        return Ok(0.0);
    }
    // 2^{1-ν}/Γ(ν) x^ν K_ν(x), assembled in log space
    let k = bessel_k(nu, x)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let log = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu) + nu * x.ln() + k.ln();
    Ok(log.exp().min(1.0))
}

/// Covariance `K(lag)` at a physical distance. For the Toeplitz families the
/// lag is measured in samples.
pub fn eval_cov(spec: &KernelSpec, lag: f64) -> Result<f64> {
    spec.validate()?;
    if !lag.is_finite() {
        return Err(invalid(format!("lag must be finite, got {lag}")));
    }
    let var = spec.sigma * spec.sigma;
    let r = lag.abs() / spec.rho;
    let corr = match spec.family {
        KernelFamily::Matern => matern_correlation(r, spec.shape)?,
        KernelFamily::PoweredExponential => (-r.powf(spec.shape)).exp(),
        KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
        KernelFamily::Triangular => (1.0 - r).max(0.0),
        KernelFamily::ExpToeplitz => (-r).exp(),
        KernelFamily::PolyToeplitz => (1.0 + r).powf(-(1.0 + spec.shape)),
        KernelFamily::WhiteNoise => {
            if lag == 0.0 {
                1.0
            } else {
                0.0
            }
        }
    };
    Ok(var * corr)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Spectral density `K̂(ω)` of a fixed-domain family.
pub fn eval_spectral(spec: &KernelSpec, omega: f64) -> Result<f64> {
    spec.validate()?;
    if !omega.is_finite() {
        return Err(invalid(format!("frequency must be finite, got {omega}")));
    }
    let var = spec.sigma * spec.sigma;
    let rho = spec.rho;
    let w = omega.abs();
    match spec.family {
        KernelFamily::Matern => {
            let nu = spec.shape;
            let norm = (4.0 * PI).sqrt() * (ln_gamma(nu + 0.5) - ln_gamma(nu)).exp();
            Ok(norm * var * rho.powf(-2.0 * nu) * (1.0 / (rho * rho) + w * w).powf(-(nu + 0.5)))
        }
        KernelFamily::SquaredExponential => {
            Ok(rho * var * (2.0 * PI).sqrt() * (-0.5 * (rho * w).powi(2)).exp())
        }
        KernelFamily::Triangular => {
            let s = sinc(0.5 * rho * w);
            Ok(rho * var * s * s)
        }
        KernelFamily::PoweredExponential => {
            Ok(var * rho * powexp_unit_spectral(spec.shape, rho * w))
        }
        KernelFamily::ExpToeplitz | KernelFamily::PolyToeplitz | KernelFamily::WhiteNoise => {
            Err(Error::Unsupported(format!(
                "{} has no spectral density on the real line; use toeplitz_generator_at",
                spec.family.name()
            )))
        }
    }
}

/// Fourier transform of `exp(-|r|^β)` at `w >= 0`.
///
/// The integral `2 Re ∫₀^∞ exp(-r^β) e^{iwr} dr` is taken along the ray
/// `r = s e^{iθ}` with `θ = min(π/2, π/(4β))`, where the integrand decays
/// exponentially in `s` instead of oscillating.
fn powexp_unit_spectral(beta: f64, w: f64) -> f64 {
    if w == 0.0 {
        return 2.0 * gamma(1.0 + 1.0 / beta);
    }
    let theta = (PI / 2.0).min(PI / (4.0 * beta));
    let (ct, st) = (theta.cos(), theta.sin());
    let (cb, sb) = ((beta * theta).cos(), (beta * theta).sin());
    // integrand f(s) e^{iθ}, with r^β = s^β e^{iβθ} and e^{iwr} = e^{iws cosθ} e^{-ws sinθ}
    let integrand = |s: f64| -> f64 {
        if s == 0.0 {
            return ct;
        }
        let sb_pow = s.powf(beta);
        let modulus = (-sb_pow * cb - w * s * st).exp();
        let phase = -sb_pow * sb + w * s * ct + theta;
        modulus * phase.cos()
    };
    // truncate where either exponential factor has fallen below e^{-40}
    let upper = (40.0 / (w * st)).min((40.0 / cb).powf(1.0 / beta));
    // s = upper * v^p clusters nodes near the s^β cusp at the origin
    let p = (2.0 / beta).ceil().max(2.0);
    let (nodes, weights) = gauss_legendre(32);
    let panels = 200;
    let mut total = 0.0;
    for j in 0..panels {
        let a = j as f64 / panels as f64;
        let b = (j + 1) as f64 / panels as f64;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in nodes.iter().zip(&weights) {
            let v = mid + half * x;
            let s = upper * v.powf(p);
            let jac = upper * p * v.powf(p - 1.0);
            total += wt * half * integrand(s) * jac;
        }
    }
    2.0 * total
}

/// Autocovariances `f_0, …, f_{n-1}` of an increasing-domain spec.
pub fn toeplitz_cov_seq(spec: &KernelSpec, n: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.domain.is_fixed() {
        return Err(Error::Unsupported(
            "toeplitz_cov_seq needs an increasing-domain spec; fixed-domain matrices are built by the covariance module"
                .into(),
        ));
    }
    (0..n).map(|k| eval_cov(spec, k as f64)).collect()
}

/// Generator `f(ω) = Σ_k f_k e^{-ikω}` of the Toeplitz family on `[-π, π]`.
/// `f(0)` is the long-run variance `Σ_k f_k`.
pub fn toeplitz_generator_at(spec: &KernelSpec, omega: f64) -> Result<f64> {
    spec.validate()?;
    if spec.domain.is_fixed() {
        return Err(Error::Unsupported(
            "Toeplitz generator needs an increasing-domain spec".into(),
        ));
    }
    if !(omega.abs() <= PI) {
        return Err(invalid(format!(
            "frequency must lie in [-pi, pi], got {omega}"
        )));
    }
    let var = spec.sigma * spec.sigma;
    match spec.family {
        KernelFamily::WhiteNoise => Ok(var),
        KernelFamily::ExpToeplitz => {
            let a = (-1.0 / spec.rho).exp();
            Ok(var * (1.0 - a * a) / (1.0 - 2.0 * a * omega.cos() + a * a))
        }
        KernelFamily::PolyToeplitz if omega == 0.0 => {
            // Σ_{k>=1} (1 + k/ρ)^{-s} = ρ^s ζ(s, ρ + 1)
            let s = 1.0 + spec.shape;
            Ok(var * (1.0 + 2.0 * spec.rho.powf(s) * hurwitz_zeta(s, spec.rho + 1.0)))
        }
        _ => {
            // direct summation; terms decay at least polynomially
            let mut total = eval_cov(spec, 0.0)?;
            for k in 1..2_000_000usize {
                let f = eval_cov(spec, k as f64)?;
                total += 2.0 * f * (k as f64 * omega).cos();
                if f.abs() < 1e-18 * var {
                    break;
                }
            }
            Ok(total)
        }
    }
}
