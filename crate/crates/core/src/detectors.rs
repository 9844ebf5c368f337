//! Mean-shift test statistics: GLRT with known covariance (known and unknown
//! baseline mean), the plug-in GLRT and CUSUM, with their thresholds.
//!
//! Change times are counts: a change at `t` means samples `1..=t` (1-based)
//! carry mean `μ - b/2` and samples `t+1..=n` carry `μ + b/2`.

use serde::{Deserialize, Serialize};

use crate::covariance::{build_cov, CovOperator};
use crate::error::{invalid, Error, Result};
use crate::estimation::{fit, EstimatorChoice, FitResult};
use crate::kernels::KernelSpec;

/// Minimum burn-in length for the plug-in GLRT.
pub const MIN_BURN_IN: usize = 10;

/// Default inflation ϑ applied to `f(0)` for the increasing-domain CUSUM.
pub const DEFAULT_VARTHETA: f64 = 0.1;

/// Admissible change times `[⌈αn⌉, ⌊(1-α)n⌋]`, clipped to `[1, n-1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeWindow {
    pub n: usize,
    pub alpha: f64,
    pub t_min: usize,
    pub t_max: usize,
}

/// `x` rounded when it is within floating noise of an integer.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

impl ChangeWindow {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(invalid(format!("alpha must lie in (0, 1/2), got {alpha}")));
        }
        if n < 2 {
            return Err(invalid(format!("need n >= 2, got {n}")));
        }
        let nf = n as f64;
        let t_min = (snap(alpha * nf).ceil() as usize).max(1);
        let t_max = (snap((1.0 - alpha) * nf).floor() as usize).min(n - 1);
        if t_min > t_max {
            return Err(Error::EmptyWindow { n, alpha });
        }
        Ok(ChangeWindow {
            n,
            alpha,
            t_min,
            t_max,
        })
    }

    pub fn len(&self) -> usize {
        self.t_max - self.t_min + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> std::ops::RangeInclusive<usize> {
        self.t_min..=self.t_max
    }

    /// Burn-in length `⌊αn⌋` used by the plug-in GLRT.
    pub fn burn_in(&self) -> usize {
        snap(self.alpha * self.n as f64).floor() as usize
    }
}

/// `ζ_t`: `-1` on the first `t` samples, `+1` afterwards.
pub fn sign_vector(n: usize, t: usize) -> Vec<f64> {
    (0..n).map(|i| if i < t { -1.0 } else { 1.0 }).collect()
}

/// Outcome of a detector on one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// Maximum over the window of the squared normalized score.
    pub statistic: f64,
    /// Arg-max change time (smallest on ties).
    pub t_hat: usize,
    pub threshold: f64,
    pub reject: bool,
    /// Estimated jump `b`.
    pub b_hat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_t_scores: Option<Vec<f64>>,
}

impl DetectionResult {
    fn from_scan(scan: Scan, threshold: f64, keep_trace: bool) -> Self {
        DetectionResult {
            statistic: scan.statistic,
            t_hat: scan.t_hat,
            threshold,
            reject: scan.statistic >= threshold,
            b_hat: scan.b_hat,
            per_t_scores: keep_trace.then_some(scan.scores),
        }
    }
}

struct Scan {
    statistic: f64,
    t_hat: usize,
    b_hat: f64,
    scores: Vec<f64>,
}

/// First maximum of `scores`; index 0 corresponds to `t_min`.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Precomputed data-independent part of the GLRT scan for one covariance and
/// window: `q_t = ζ_tᵀΣ⁻¹ζ_t` and `r_t = ζ_tᵀΣ⁻¹1` for every window `t`, and
/// `1ᵀΣ⁻¹1`.
///
/// Built with one `O(n³)` pass: `h_t = L⁻¹ζ_t` is updated through
/// `h_{t+1} = h_t - 2 L⁻¹e_{t+1}`, each column `L⁻¹e_{t+1}` coming from a
/// forward substitution that starts at row `t+1`.
#[derive(Debug, Clone)]
pub struct GlrtPlan {
    cov: CovOperator,
    window: ChangeWindow,
    q: Vec<f64>,
    r: Vec<f64>,
    ones_inv_ones: f64,
}

impl GlrtPlan {
    pub fn new(cov: CovOperator, window: ChangeWindow) -> Result<Self> {
        let n = cov.n();
        if window.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: window.n,
            });
        }
        let mut l_inv_ones = vec![1.0; n];
        cov.forward_solve_in_place(&mut l_inv_ones)?;
        let ones_inv_ones = l_inv_ones.iter().map(|v| v * v).sum();

        let mut h = sign_vector(n, window.t_min);
        cov.forward_solve_in_place(&mut h)?;
        let mut q = Vec::with_capacity(window.len());
        let mut r = Vec::with_capacity(window.len());
        let mut col = vec![0.0; n];
        for t in window.times() {
            if t > window.t_min {
                // ζ_t = ζ_{t-1} - 2 e_t with e_t at 0-based index t-1
                let k = t - 1;
                col[..k].fill(0.0);
                col[k..].fill(0.0);
                col[k] = 1.0;
                cov.forward_from(&mut col, k);
                for (hi, ci) in h[k..].iter_mut().zip(&col[k..]) {
                    *hi -= 2.0 * ci;
                }
            }
            q.push(h.iter().map(|v| v * v).sum());
            r.push(h.iter().zip(&l_inv_ones).map(|(a, b)| a * b).sum());
        }
        Ok(GlrtPlan {
            cov,
            window,
            q,
            r,
            ones_inv_ones,
        })
    }

    pub fn cov(&self) -> &CovOperator {
        &self.cov
    }

    pub fn window(&self) -> &ChangeWindow {
        &self.window
    }

    /// `ζ_tᵀΣ⁻¹ζ_t` for each window time.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `s_t = ζ_tᵀY` for `Y = Σ⁻¹X`, using `s_{t+1} = s_t - 2Y_{t+1}`.
    fn scores_from(&self, y: &[f64]) -> Vec<f64> {
        let w = &self.window;
        let mut s: f64 =
            y[..w.t_min].iter().map(|v| -v).sum::<f64>() + y[w.t_min..].iter().sum::<f64>();
        let mut out = Vec::with_capacity(w.len());
        for t in w.times() {
            if t > w.t_min {
                s -= 2.0 * y[t - 1];
            }
            out.push(s);
        }
        out
    }

    fn solve_data(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cov.n() {
            return Err(Error::DimensionMismatch {
                expected: self.cov.n(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("observations must be finite"));
        }
        self.cov.solve(x)
    }

    fn scan_known_mean(&self, x: &[f64]) -> Result<Scan> {
        let y = self.solve_data(x)?;
        let s = self.scores_from(&y);
        let scores: Vec<f64> = s.iter().zip(&self.q).map(|(s, q)| s * s / q).collect();
        let best = argmax(&scores);
        Ok(Scan {
            statistic: scores[best],
            t_hat: self.window.t_min + best,
            b_hat: 2.0 * s[best] / self.q[best],
            scores,
        })
    }

    fn scan_unknown_mean(&self, x: &[f64]) -> Result<Scan> {
        let y = self.solve_data(x)?;
        let s = self.scores_from(&y);
        let ones_y: f64 = y.iter().sum();
        let mut scores = Vec::with_capacity(s.len());
        let mut numer = Vec::with_capacity(s.len());
        let mut b2s = Vec::with_capacity(s.len());
        for (i, t) in self.window.times().enumerate() {
            let b1 = self.r[i] / self.ones_inv_ones;
            let b2 = self.q[i] - self.r[i] * self.r[i] / self.ones_inv_ones;
            if !(b2 > 1e-12 * self.q[i]) {
                return Err(Error::DegenerateWindow { t });
            }
            let num = s[i] - b1 * ones_y;
            scores.push(num * num / b2);
            numer.push(num);
            b2s.push(b2);
        }
        let best = argmax(&scores);
        Ok(Scan {
            statistic: scores[best],
            t_hat: self.window.t_min + best,
            b_hat: 2.0 * numer[best] / b2s[best],
            scores,
        })
    }

    /// GLRT with known covariance and zero baseline mean.
    pub fn glrt(&self, x: &[f64], delta: f64, keep_trace: bool) -> Result<DetectionResult> {
        let threshold = threshold_glrt(self.window.n, self.window.alpha, delta)?;
        Ok(DetectionResult::from_scan(
            self.scan_known_mean(x)?,
            threshold,
            keep_trace,
        ))
    }

    /// GLRT with known covariance and unknown baseline mean.
    pub fn glrt_general(&self, x: &[f64], delta: f64, keep_trace: bool) -> Result<DetectionResult> {
        let threshold = threshold_glrt(self.window.n, self.window.alpha, delta)?;
        Ok(DetectionResult::from_scan(
            self.scan_unknown_mean(x)?,
            threshold,
            keep_trace,
        ))
    }

    /// Maximum squared score of the known-mean GLRT, without the threshold.
    pub fn statistic(&self, x: &[f64]) -> Result<f64> {
        Ok(self.scan_known_mean(x)?.statistic)
    }

    pub fn statistic_general(&self, x: &[f64]) -> Result<f64> {
        Ok(self.scan_unknown_mean(x)?.statistic)
    }
}

fn check_cov(cov: &CovOperator, x: &[f64], window: &ChangeWindow) -> Result<()> {
    if x.len() != cov.n() {
        return Err(Error::DimensionMismatch {
            expected: cov.n(),
            got: x.len(),
        });
    }
    if window.n != cov.n() {
        return Err(Error::DimensionMismatch {
            expected: cov.n(),
            got: window.n,
        });
    }
    Ok(())
}

/// GLRT for a shift in a zero-mean Gaussian vector with known covariance:
/// `max_t (ζ_tᵀΣ⁻¹X)² / (ζ_tᵀΣ⁻¹ζ_t)` against [`threshold_glrt`].
pub fn glrt(
    x: &[f64],
    cov: &CovOperator,
    window: &ChangeWindow,
    delta: f64,
) -> Result<DetectionResult> {
    check_cov(cov, x, window)?;
    GlrtPlan::new(cov.clone(), *window)?.glrt(x, delta, false)
}

/// GLRT when the baseline mean `μ` is unknown: the score projects out the
/// constant direction, `((ζ_t - B₁(t)1)ᵀΣ⁻¹X)² / B₂(t)` with
/// `B₁ = ζᵀΣ⁻¹1 / 1ᵀΣ⁻¹1` and `B₂ = ζᵀΣ⁻¹ζ - (ζᵀΣ⁻¹1)² / 1ᵀΣ⁻¹1`.
pub fn glrt_general(
    x: &[f64],
    cov: &CovOperator,
    window: &ChangeWindow,
    delta: f64,
) -> Result<DetectionResult> {
    check_cov(cov, x, window)?;
    GlrtPlan::new(cov.clone(), *window)?.glrt_general(x, delta, false)
}

/// Plug-in GLRT outcome: the detection plus the parameters fitted on the
/// burn-in prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginOutcome {
    pub result: DetectionResult,
    pub fit: FitResult,
}

/// Plug-in GLRT. Fits `(σ, ρ)` on the first `⌊αn⌋` samples with `estimator`
/// (family, shape and domain taken from `template`), rebuilds `Σ̃_n` from the
/// fit and runs [`glrt`] with the unchanged threshold.
pub fn plugin_glrt(
    x: &[f64],
    template: &KernelSpec,
    window: &ChangeWindow,
    delta: f64,
    estimator: &EstimatorChoice,
) -> Result<PluginOutcome> {
    let n = template.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if window.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: window.n,
        });
    }
    let m = window.burn_in();
    if m < MIN_BURN_IN {
        return Err(Error::BurnInTooShort {
            got: m,
            need: MIN_BURN_IN,
        });
    }
    let fitted = fit(&x[..m], template, estimator)?;
    let cov = build_cov(&template.with_params(fitted.sigma_hat, fitted.rho_hat))?;
    let result = glrt(x, &cov, window, delta)?;
    Ok(PluginOutcome {
        result,
        fit: fitted,
    })
}

/// Normalization of the CUSUM statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CusumDomain {
    /// Squared `U_t / √n`.
    Fixed,
    /// Squared `U_t`.
    Increasing,
}

/// CUSUM: `U_t = √(t(n-t)/n) (mean(X_{t+1..n}) - mean(X_{1..t}))`.
///
/// The fixed-domain statistic is `max_t U_t²/n`; the increasing-domain one is
/// `max_t U_t²`. Both are compared with [`threshold_cusum`], which for the
/// increasing domain is inflated by `(1+ϑ) f(0)` when `f0_hint` carries the
/// long-run variance `f(0)`.
pub fn cusum(
    x: &[f64],
    window: &ChangeWindow,
    delta: f64,
    domain: CusumDomain,
    f0_hint: Option<f64>,
) -> Result<DetectionResult> {
    let threshold = threshold_cusum(window.n, window.alpha, delta, domain, f0_hint)?;
    let scan = cusum_scan(x, window, domain)?;
    Ok(DetectionResult::from_scan(scan, threshold, false))
}

/// CUSUM statistic without the threshold.
pub fn cusum_statistic(x: &[f64], window: &ChangeWindow, domain: CusumDomain) -> Result<f64> {
    Ok(cusum_scan(x, window, domain)?.statistic)
}

fn cusum_scan(x: &[f64], window: &ChangeWindow, domain: CusumDomain) -> Result<Scan> {
    let n = window.n;
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("observations must be finite"));
    }
    let total: f64 = x.iter().sum();
    let mut prefix: f64 = x[..window.t_min - 1].iter().sum();
    let nf = n as f64;
    let norm = match domain {
        CusumDomain::Fixed => nf,
        CusumDomain::Increasing => 1.0,
    };
    let mut scores = Vec::with_capacity(window.len());
    let mut diffs = Vec::with_capacity(window.len());
    for t in window.times() {
        prefix += x[t - 1];
        let tf = t as f64;
        let diff = (total - prefix) / (nf - tf) - prefix / tf;
        let u2 = tf * (nf - tf) / nf * diff * diff;
        scores.push(u2 / norm);
        diffs.push(diff);
    }
    let best = argmax(&scores);
    Ok(Scan {
        statistic: scores[best],
        t_hat: window.t_min + best,
        b_hat: diffs[best],
        scores,
    })
}

fn log_term(n: usize, alpha: f64, delta: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("need n >= 2, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(invalid(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let l = (2.0 * n as f64 * (1.0 - 2.0 * alpha) / delta).ln();
    if l < -1e-12 {
        return Err(invalid(format!(
            "2n(1-2alpha)/delta must be at least 1 (n = {n}, alpha = {alpha}, delta = {delta})"
        )));
    }
    Ok(l.max(0.0))
}

/// `R_{n,δ} = 1 + 2[log(2n(1-2α)/δ) + √log(2n(1-2α)/δ)]`.
pub fn threshold_glrt(n: usize, alpha: f64, delta: f64) -> Result<f64> {
    let l = log_term(n, alpha, delta)?;
    Ok(1.0 + 2.0 * (l + l.sqrt()))
}

/// Threshold for the squared-normalized CUSUM statistic. Equal to
/// [`threshold_glrt`]; on the increasing domain it is multiplied by
/// `(1 + ϑ) f(0)` when `f0_hint` is given.
pub fn threshold_cusum(
    n: usize,
    alpha: f64,
    delta: f64,
    domain: CusumDomain,
    f0_hint: Option<f64>,
) -> Result<f64> {
    let base = threshold_glrt(n, alpha, delta)?;
    match (domain, f0_hint) {
        (CusumDomain::Increasing, Some(f0)) => {
            if !(f0 > 0.0) || !f0.is_finite() {
                return Err(invalid(format!("f(0) hint must be positive, got {f0}")));
            }
            Ok(base * (1.0 + DEFAULT_VARTHETA) * f0)
        }
        _ => Ok(base),
    }
}

/// Threshold on the raw `max_t |U_t|`: `√(n R_{n,δ})`.
pub fn threshold_cusum_unnormalized(n: usize, alpha: f64, delta: f64) -> Result<f64> {
    Ok((n as f64 * threshold_glrt(n, alpha, delta)?).sqrt())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `G_β(ω)`, the spectral weight of the normalized CUSUM variance at a change
/// fraction `β`: `|∫₀¹ w(u) e^{-iωu} du|²` with `w = -1` on `[0, β)` and
/// `w = +1` on `[β, 1]`.
pub fn gbeta(omega: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    let a = sinc(beta * omega / 2.0);
    let b = sinc((1.0 - beta) * omega / 2.0);
    let s = (omega / 4.0).sin();
    Ok((beta * a - (1.0 - beta) * b).powi(2) + 4.0 * beta * (1.0 - beta) * a * b * s * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> CovOperator {
        let mut row = vec![0.0; n];
        row[0] = 1.0;
        CovOperator::from_autocov(row).unwrap()
    }

    fn step(n: usize, t: usize, b: f64, mu: f64) -> Vec<f64> {
        sign_vector(n, t).iter().map(|z| mu + 0.5 * b * z).collect()
    }

    #[test]
    fn window_bounds() {
        let w = ChangeWindow::new(500, 0.1).unwrap();
        assert_eq!((w.t_min, w.t_max, w.len()), (50, 450, 401));
        assert_eq!(w.burn_in(), 50);
        let w = ChangeWindow::new(7, 0.2).unwrap();
        assert_eq!((w.t_min, w.t_max), (2, 5));
        for t in w.times() {
            assert!((t.min(7 - t) as f64) > 0.2 * 7.0 - 1.0);
        }
        assert!(ChangeWindow::new(100, 0.5).is_err());
        assert!(ChangeWindow::new(100, 0.0).is_err());
        assert!(matches!(
            ChangeWindow::new(3, 0.45),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn sign_vector_convention() {
        let z = sign_vector(5, 2);
        assert_eq!(z, vec![-1.0, -1.0, 1.0, 1.0, 1.0]);
        assert_eq!(z.iter().filter(|v| **v < 0.0).count(), 2);
    }

    #[test]
    fn glrt_noiseless_step() {
        let w = ChangeWindow::new(100, 0.1).unwrap();
        let x = step(100, 50, 2.0, 0.0);
        let res = glrt(&x, &identity(100), &w, 0.05).unwrap();
        assert!((res.statistic - 100.0).abs() < 1e-10);
        assert_eq!(res.t_hat, 50);
        assert!((res.b_hat - 2.0).abs() < 1e-12);
        assert!(res.reject);
    }

    #[test]
    fn glrt_zero_input() {
        let w = ChangeWindow::new(100, 0.1).unwrap();
        let res = glrt(&[0.0; 100], &identity(100), &w, 0.05).unwrap();
        assert_eq!(
            (res.statistic, res.reject, res.b_hat, res.t_hat),
            (0.0, false, 0.0, 10)
        );
    }

    #[test]
    fn glrt_dimension_mismatch() {
        let w = ChangeWindow::new(100, 0.1).unwrap();
        assert!(matches!(
            glrt(&[0.0; 99], &identity(100), &w, 0.05),
            Err(Error::DimensionMismatch { .. })
        ));
        let w = ChangeWindow::new(90, 0.1).unwrap();
        assert!(glrt(&[0.0; 100], &identity(100), &w, 0.05).is_err());
    }

    #[test]
    fn general_glrt_midpoint_terms() {
        let w = ChangeWindow::new(100, 0.1).unwrap();
        let plan = GlrtPlan::new(identity(100), w).unwrap();
        let i = 50 - w.t_min;
        assert!(plan.r[i].abs() < 1e-12);
        let b2 = plan.q[i] - plan.r[i] * plan.r[i] / plan.ones_inv_ones;
        assert!((b2 - 100.0).abs() < 1e-10);
    }

    #[test]
    fn general_glrt_ignores_constant_level() {
        let w = ChangeWindow::new(100, 0.1).unwrap();
        let res = glrt_general(&[3.7; 100], &identity(100), &w, 0.05).unwrap();
        assert!(res.statistic < 1e-20);
        assert!(!res.reject);

        let res = glrt_general(&step(100, 50, 2.0, 7.0), &identity(100), &w, 0.05).unwrap();
        assert_eq!(res.t_hat, 50);
        assert!((res.statistic - 100.0).abs() < 1e-9);
        assert!((res.b_hat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cusum_examples() {
        let w = ChangeWindow::new(100, 0.1).unwrap();
        let res = cusum(&[2.5; 100], &w, 0.05, CusumDomain::Fixed, None).unwrap();
        assert!(res.statistic < 1e-25);

        let x = step(100, 50, 1.0, 0.0);
        let res = cusum(&x, &w, 0.05, CusumDomain::Fixed, None).unwrap();
        assert!((res.statistic - 0.25).abs() < 1e-12);
        assert_eq!(res.t_hat, 50);
        assert!((res.b_hat - 1.0).abs() < 1e-12);
        let inc = cusum(&x, &w, 0.05, CusumDomain::Increasing, None).unwrap();
        assert!((inc.statistic - 25.0).abs() < 1e-10);
    }

    #[test]
    fn threshold_values() {
        let l = 16000f64.ln();
        let expected = 1.0 + 2.0 * (l + l.sqrt());
        let r = threshold_glrt(500, 0.1, 0.05).unwrap();
        assert_eq!(r, expected);
        assert!((r - 26.5833).abs() < 1e-3);
        assert!(threshold_glrt(100, 0.1, 0.01).unwrap() > threshold_glrt(100, 0.1, 0.1).unwrap());
        assert!(threshold_glrt(101, 0.1, 0.1).unwrap() > threshold_glrt(100, 0.1, 0.1).unwrap());
        // 2n(1-2α)/δ = 1
        let delta = 0.5;
        let alpha = 0.5 - delta / 8.0;
        assert!((threshold_glrt(2, alpha, delta).unwrap() - 1.0).abs() < 1e-6);
        assert!(threshold_glrt(1, 0.1, 0.05).is_err());
        assert!(threshold_glrt(100, 0.1, 1.0).is_err());
    }

    #[test]
    fn cusum_threshold_identity() {
        for &(n, a, d) in &[(500, 0.1, 0.05), (100, 0.2, 0.3), (37, 0.05, 0.9)] {
            let g = threshold_glrt(n, a, d).unwrap();
            assert_eq!(
                threshold_cusum(n, a, d, CusumDomain::Fixed, None).unwrap(),
                g
            );
            assert_eq!(
                threshold_cusum(n, a, d, CusumDomain::Increasing, None).unwrap(),
                g
            );
        }
        let raw = threshold_cusum_unnormalized(500, 0.1, 0.05).unwrap();
        assert!((raw - 115.289).abs() < 1e-3);
        let inflated = threshold_cusum(500, 0.1, 0.05, CusumDomain::Increasing, Some(2.0)).unwrap();
        assert!((inflated - 2.2 * threshold_glrt(500, 0.1, 0.05).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_cusum_threshold_scaling() {
        let f = |n: f64| {
            let l = (2.0 * n * 0.8 / 0.05f64).ln();
            (n * (1.0 + 2.0 * l + 2.0 * l.sqrt())).sqrt()
        };
        let ratio = threshold_cusum_unnormalized(400, 0.1, 0.05).unwrap()
            / threshold_cusum_unnormalized(100, 0.1, 0.05).unwrap();
        assert!((ratio / (f(400.0) / f(100.0)) - 1.0).abs() < 0.03);
    }

    #[test]
    fn gbeta_values() {
        assert!((gbeta(0.0, 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!(gbeta(0.0, 0.5).unwrap().abs() < 1e-15);
        for k in 1..10 {
            let beta = k as f64 / 10.0;
            assert!((gbeta(0.0, beta).unwrap() - (1.0 - 2.0 * beta).powi(2)).abs() < 1e-14);
        }
        assert!(gbeta(1.0, 1.0).is_err());
        // midpoint-rule Fourier transform of the step weight
        for &(omega, beta) in &[(0.7, 0.3), (5.0, 0.5), (23.0, 0.15), (101.0, 0.8)] {
            let m = 200_000;
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..m {
                let u = (k as f64 + 0.5) / m as f64;
                let w = if u < beta { -1.0 } else { 1.0 };
                re += w * (omega * u).cos() / m as f64;
                im -= w * (omega * u).sin() / m as f64;
            }
            let g: f64 = gbeta(omega, beta).unwrap();
            assert!((g - (re * re + im * im)).abs() < 1e-6, "{omega} {beta}");
        }
        let mut max = 0.0f64;
        for i in 0..2000 {
            for k in 1..20 {
                max = max.max(gbeta(i as f64 * 0.05, k as f64 / 20.0).unwrap());
            }
        }
        assert!(max <= 1.0 + 1e-9);
    }
}
