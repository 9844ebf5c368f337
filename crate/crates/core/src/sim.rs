//! Monte Carlo harness: labelled H₀/H₁ trials, ROC curves and AUC summaries,
//! and minimal-detectable-jump curves over sample sizes.
//!
//! Every repetition draws from its own ChaCha8 stream (`seed`, stream =
//! repetition index), so results do not depend on how rayon schedules the
//! repetitions.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{autocov_row, build_cov, CovOperator};
use crate::detectors::{
    cusum_statistic, sign_vector, threshold_cusum, threshold_glrt, ChangeWindow, CusumDomain,
    GlrtPlan, MIN_BURN_IN,
};
use crate::error::{invalid, Error, Result};
use crate::estimation::{fit, EstimatorChoice};
use crate::kernels::{toeplitz_generator_at, KernelSpec};

/// Trials per repetition used by the reference protocol.
pub const DEFAULT_T1: usize = 500;
/// Repetitions used by the reference protocol.
pub const DEFAULT_T2: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// One AUC experiment: kernel, window fraction, jump size and Monte Carlo
/// sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub spec: KernelSpec,
    pub alpha: f64,
    pub b: f64,
    pub t1: usize,
    pub t2: usize,
    pub seed: u64,
}

impl TrialConfig {
    pub fn new(spec: KernelSpec, alpha: f64, b: f64) -> Self {
        TrialConfig {
            spec,
            alpha,
            b,
            t1: DEFAULT_T1,
            t2: DEFAULT_T2,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        ChangeWindow::new(self.spec.n(), self.alpha)?;
        if self.t1 < 2 {
            return Err(invalid(format!("t1 must be at least 2, got {}", self.t1)));
        }
        if self.t2 < 1 {
            return Err(invalid("t2 must be at least 1"));
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(invalid(format!(
                "jump size must be nonnegative, got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// A labelled series.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub label: Hypothesis,
    pub x: Vec<f64>,
    /// Change time for H₁ draws.
    pub t_true: Option<usize>,
}

/// RNG for repetition `rep` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Draws trials for a fixed covariance.
#[derive(Debug, Clone)]
pub struct TrialGenerator {
    cov: Arc<CovOperator>,
    window: ChangeWindow,
}

impl TrialGenerator {
    pub fn new(cov: Arc<CovOperator>, window: ChangeWindow) -> Result<Self> {
        if cov.n() != window.n {
            return Err(Error::DimensionMismatch {
                expected: cov.n(),
                got: window.n,
            });
        }
        Ok(TrialGenerator { cov, window })
    }

    pub fn cov(&self) -> &Arc<CovOperator> {
        &self.cov
    }

    /// Zero-mean draw from `N(0, Σ_n)`.
    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.cov.n())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        self.cov
            .sample_chol(&z)
            .expect("draw has the operator's length")
    }

    /// Draw under `H_{1,t}`: noise plus `(b/2) ζ_t`.
    pub fn h1_at<R: Rng + ?Sized>(&self, rng: &mut R, b: f64, t: usize) -> Vec<f64> {
        let mut x = self.noise(rng);
        for (xi, z) in x.iter_mut().zip(sign_vector(self.cov.n(), t)) {
            *xi += 0.5 * b * z;
        }
        x
    }

    /// Fair coin for the label; under H₁ the change time is uniform on the
    /// window.
    pub fn trial<R: Rng + ?Sized>(&self, rng: &mut R, b: f64) -> Trial {
        if rng.random_bool(0.5) {
            let t = rng.random_range(self.window.t_min..=self.window.t_max);
            Trial {
                label: Hypothesis::H1,
                x: self.h1_at(rng, b, t),
                t_true: Some(t),
            }
        } else {
            Trial {
                label: Hypothesis::H0,
                x: self.noise(rng),
                t_true: None,
            }
        }
    }
}

/// Draws one labelled trial for `cfg`. Builds the covariance on every call;
/// use [`TrialGenerator`] for repeated draws.
pub fn gen_trial<R: Rng + ?Sized>(cfg: &TrialConfig, rng: &mut R) -> Result<Trial> {
    cfg.validate()?;
    let window = ChangeWindow::new(cfg.spec.n(), cfg.alpha)?;
    let generator = TrialGenerator::new(Arc::new(build_cov(&cfg.spec)?), window)?;
    Ok(generator.trial(rng, cfg.b))
}

/// Detector used to score trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DetectorChoice {
    Glrt,
    GlrtGeneral,
    PluginGlrt { estimator: EstimatorChoice },
    Cusum,
}

impl DetectorChoice {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorChoice::Glrt => "glrt",
            DetectorChoice::GlrtGeneral => "glrt-general",
            DetectorChoice::PluginGlrt { .. } => "plugin-glrt",
            DetectorChoice::Cusum => "cusum",
        }
    }
}

/// GLRT plans for unit-variance covariances keyed by range. A plug-in fit
/// `(σ̂, ρ̂)` reuses the plan for `C(ρ̂)`, since the GLRT statistic under
/// `σ̂² C` is the statistic under `C` divided by `σ̂²`.
#[derive(Debug, Default)]
struct PlanCache {
    plans: Mutex<HashMap<u64, Arc<GlrtPlan>>>,
}

impl PlanCache {
    fn get(&self, template: &KernelSpec, window: &ChangeWindow, rho: f64) -> Result<Arc<GlrtPlan>> {
        if let Some(plan) = self
            .plans
            .lock()
            .expect("plan cache poisoned")
            .get(&rho.to_bits())
        {
            return Ok(plan.clone());
        }
        let unit = template.with_params(1.0, rho);
        let plan = Arc::new(GlrtPlan::new(build_cov(&unit)?, *window)?);
        Ok(self
            .plans
            .lock()
            .expect("plan cache poisoned")
            .entry(rho.to_bits())
            .or_insert(plan)
            .clone())
    }
}

/// A detector prepared for repeated scoring on one design.
#[derive(Debug)]
enum Scorer {
    Glrt(Arc<GlrtPlan>),
    GlrtGeneral(Arc<GlrtPlan>),
    Plugin {
        template: KernelSpec,
        estimator: EstimatorChoice,
        window: ChangeWindow,
        cache: PlanCache,
    },
    Cusum {
        window: ChangeWindow,
        domain: CusumDomain,
        f0: Option<f64>,
    },
}

impl Scorer {
    fn score(&self, x: &[f64]) -> Result<f64> {
        match self {
            Scorer::Glrt(plan) => plan.statistic(x),
            Scorer::GlrtGeneral(plan) => plan.statistic_general(x),
            Scorer::Plugin {
                template,
                estimator,
                window,
                cache,
            } => {
                let fitted = fit(&x[..window.burn_in()], template, estimator)?;
                let plan = cache.get(template, window, fitted.rho_hat)?;
                Ok(plan.statistic(x)? / (fitted.sigma_hat * fitted.sigma_hat))
            }
            Scorer::Cusum { window, domain, .. } => cusum_statistic(x, window, *domain),
        }
    }

    /// Rejection threshold used by the calibration runs.
    fn threshold(&self, n: usize, alpha: f64, delta: f64) -> Result<f64> {
        match self {
            Scorer::Cusum { domain, f0, .. } => threshold_cusum(n, alpha, delta, *domain, *f0),
            _ => threshold_glrt(n, alpha, delta),
        }
    }
}

/// A design (kernel, `n`, `α`) with its detectors prepared, ready to run AUC
/// experiments at any jump size.
#[derive(Debug)]
pub struct Experiment {
    generator: TrialGenerator,
    detectors: Vec<DetectorChoice>,
    scorers: Vec<Scorer>,
}

impl Experiment {
    pub fn new(spec: &KernelSpec, alpha: f64, detectors: &[DetectorChoice]) -> Result<Self> {
        if detectors.is_empty() {
            return Err(Error::EmptyInput("detector list"));
        }
        let window = ChangeWindow::new(spec.n(), alpha)?;
        let cov = Arc::new(build_cov(spec)?);
        let mut plan: Option<Arc<GlrtPlan>> = None;
        let mut known_plan = || -> Result<Arc<GlrtPlan>> {
            if plan.is_none() {
                plan = Some(Arc::new(GlrtPlan::new((*cov).clone(), window)?));
            }
            Ok(plan.clone().expect("just set"))
        };
        let mut scorers = Vec::with_capacity(detectors.len());
        for d in detectors {
            scorers.push(match d {
                DetectorChoice::Glrt => Scorer::Glrt(known_plan()?),
                DetectorChoice::GlrtGeneral => Scorer::GlrtGeneral(known_plan()?),
                DetectorChoice::PluginGlrt { estimator } => {
                    estimator.validate()?;
                    if window.burn_in() < MIN_BURN_IN {
                        return Err(Error::BurnInTooShort {
                            got: window.burn_in(),
                            need: MIN_BURN_IN,
                        });
                    }
                    Scorer::Plugin {
                        template: *spec,
                        estimator: estimator.clone(),
                        window,
                        cache: PlanCache::default(),
                    }
                }
                DetectorChoice::Cusum if spec.domain.is_fixed() => Scorer::Cusum {
                    window,
                    domain: CusumDomain::Fixed,
                    f0: None,
                },
                DetectorChoice::Cusum => Scorer::Cusum {
                    window,
                    domain: CusumDomain::Increasing,
                    f0: Some(toeplitz_generator_at(spec, 0.0)?),
                },
            });
        }
        Ok(Experiment {
            generator: TrialGenerator::new(cov, window)?,
            detectors: detectors.to_vec(),
            scorers,
        })
    }

    pub fn detectors(&self) -> &[DetectorChoice] {
        &self.detectors
    }

    pub fn generator(&self) -> &TrialGenerator {
        &self.generator
    }

    /// Scores `t1` trials for every detector on the same draws.
    fn repetition(&self, b: f64, t1: usize, seed: u64, rep: u64) -> Result<Vec<RocCurve>> {
        let mut rng = stream_rng(seed, rep);
        let k = self.scorers.len();
        let mut h0 = vec![Vec::with_capacity(t1 / 2 + 8); k];
        let mut h1 = vec![Vec::with_capacity(t1 / 2 + 8); k];
        for _ in 0..t1 {
            let trial = self.generator.trial(&mut rng, b);
            let bucket = match trial.label {
                Hypothesis::H0 => &mut h0,
                Hypothesis::H1 => &mut h1,
            };
            for (scores, scorer) in bucket.iter_mut().zip(&self.scorers) {
                scores.push(scorer.score(&trial.x)?);
            }
        }
        h0.iter().zip(&h1).map(|(a, b)| roc_auc(a, b)).collect()
    }

    /// Mean AUC over `t2` repetitions of `t1` trials, one summary per
    /// detector in construction order. All detectors see the same draws.
    pub fn run(&self, b: f64, t1: usize, t2: usize, seed: u64) -> Result<Vec<AucSummary>> {
        if t1 < 2 || t2 < 1 {
            return Err(invalid(format!(
                "need t1 >= 2 and t2 >= 1, got t1 = {t1}, t2 = {t2}"
            )));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(invalid(format!("jump size must be nonnegative, got {b}")));
        }
        let reps: Vec<Vec<RocCurve>> = (0..t2 as u64)
            .into_par_iter()
            .map(|rep| self.repetition(b, t1, seed, rep))
            .collect::<Result<_>>()?;
        Ok((0..self.scorers.len())
            .map(|d| AucSummary::from_curves(reps.iter().map(|r| r[d].clone()).collect()))
            .collect())
    }

    /// Empirical rejection rate under H₀ of every detector for each `delta`,
    /// over `trials` shared null draws. The plug-in GLRT uses the GLRT
    /// threshold; the increasing-domain CUSUM threshold is inflated by the
    /// kernel's long-run variance `f(0)`.
    pub fn null_rejection_rates(
        &self,
        deltas: &[f64],
        trials: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        if trials == 0 {
            return Err(invalid("calibration needs at least one trial"));
        }
        if deltas.is_empty() {
            return Err(Error::EmptyInput("delta list"));
        }
        let w = &self.generator.window;
        let thresholds: Vec<Vec<f64>> = self
            .scorers
            .iter()
            .map(|s| {
                deltas
                    .iter()
                    .map(|d| s.threshold(w.n, w.alpha, *d))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut rng = stream_rng(seed, 0);
        let mut counts = vec![vec![0usize; deltas.len()]; self.scorers.len()];
        for _ in 0..trials {
            let x = self.generator.noise(&mut rng);
            for ((c, scorer), th) in counts.iter_mut().zip(&self.scorers).zip(&thresholds) {
                let s = scorer.score(&x)?;
                for (ci, t) in c.iter_mut().zip(th) {
                    if s >= *t {
                        *ci += 1;
                    }
                }
            }
        }
        Ok(counts
            .into_iter()
            .map(|c| c.into_iter().map(|k| k as f64 / trials as f64).collect())
            .collect())
    }
}

/// ROC curve from a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false-alarm rate, power)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC curve of a score that should be larger under H₁, swept over every
/// distinct pooled score. Tied H₀/H₁ scores produce a diagonal segment, so
/// the trapezoidal area equals `P(S₁ > S₀) + ½ P(S₁ = S₀)`.
pub fn roc_auc(scores_h0: &[f64], scores_h1: &[f64]) -> Result<RocCurve> {
    if scores_h0.is_empty() {
        return Err(Error::EmptyInput("H0 scores"));
    }
    if scores_h1.is_empty() {
        return Err(Error::EmptyInput("H1 scores"));
    }
    if scores_h0.iter().chain(scores_h1).any(|s| s.is_nan()) {
        return Err(invalid("scores must not be NaN"));
    }
    let mut pooled: Vec<(f64, bool)> = scores_h0
        .iter()
        .map(|s| (*s, false))
        .chain(scores_h1.iter().map(|s| (*s, true)))
        .collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (n0, n1) = (scores_h0.len() as f64, scores_h1.len() as f64);
    let mut points = Vec::with_capacity(pooled.len() + 1);
    points.push((0.0, 0.0));
    let (mut fp, mut tp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let v = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == v {
            if pooled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (x0, y0) = *points.last().expect("starts with origin");
        let (x1, y1) = (fp as f64 / n0, tp as f64 / n1);
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        points.push((x1, y1));
    }
    Ok(RocCurve { points, auc })
}

/// Mean and standard error of AUC over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    pub mean_auc: f64,
    pub stderr: f64,
    pub per_rep: Vec<f64>,
    #[serde(skip)]
    pub curves: Vec<RocCurve>,
}

impl AucSummary {
    fn from_curves(curves: Vec<RocCurve>) -> Self {
        let per_rep: Vec<f64> = curves.iter().map(|c| c.auc).collect();
        let k = per_rep.len() as f64;
        let mean_auc = per_rep.iter().sum::<f64>() / k;
        let stderr = if per_rep.len() > 1 {
            let var = per_rep.iter().map(|a| (a - mean_auc).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        AucSummary {
            mean_auc,
            stderr,
            per_rep,
            curves,
        }
    }
}

/// Runs the AUC protocol for one detector.
pub fn run_auc_experiment(cfg: &TrialConfig, detector: &DetectorChoice) -> Result<AucSummary> {
    Ok(run_auc_experiments(cfg, std::slice::from_ref(detector))?.remove(0))
}

/// Runs the AUC protocol for several detectors on common draws.
pub fn run_auc_experiments(
    cfg: &TrialConfig,
    detectors: &[DetectorChoice],
) -> Result<Vec<AucSummary>> {
    cfg.validate()?;
    Experiment::new(&cfg.spec, cfg.alpha, detectors)?.run(cfg.b, cfg.t1, cfg.t2, cfg.seed)
}

/// Settings for [`rate_curve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub alpha: f64,
    pub t1: usize,
    pub t2: usize,
    pub seed: u64,
    pub target_auc: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            alpha: 0.1,
            t1: DEFAULT_T1,
            t2: DEFAULT_T2,
            seed: 0,
            target_auc: 0.9,
            bracket: (0.01, 10.0),
            iterations: 8,
        }
    }
}

/// Smallest jump reaching the target AUC at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub b_min: f64,
    /// The target was not crossed inside the bracket; `b_min` is the edge.
    pub saturated: bool,
}

/// Minimal detectable jump per sample size: bisection on `b` of the mean
/// AUC. Bisection is geometric (midpoint `√(lo·hi)`), since `b_min` spans
/// orders of magnitude across `n`. Every evaluation at a given `n` reuses the
/// same seed, so the AUC curve in `b` is driven by common random numbers.
pub fn rate_curve(
    template: &KernelSpec,
    detector: &DetectorChoice,
    n_list: &[usize],
    cfg: &RateConfig,
) -> Result<Vec<RatePoint>> {
    if n_list.is_empty() {
        return Err(Error::EmptyInput("n list"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n list must be strictly ascending"));
    }
    if !(cfg.target_auc > 0.5 && cfg.target_auc < 1.0) {
        return Err(invalid(format!(
            "target AUC must lie in (0.5, 1), got {}",
            cfg.target_auc
        )));
    }
    let (lo0, hi0) = cfg.bracket;
    if !(lo0 > 0.0 && hi0 > lo0) {
        return Err(invalid("bracket must satisfy 0 < lo < hi"));
    }
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let exp = Experiment::new(
            &template.with_n(n),
            cfg.alpha,
            std::slice::from_ref(detector),
        )?;
        let auc = |b: f64| -> Result<f64> { Ok(exp.run(b, cfg.t1, cfg.t2, cfg.seed)?[0].mean_auc) };
        if auc(hi0)? < cfg.target_auc {
            out.push(RatePoint {
                n,
                b_min: hi0,
                saturated: true,
            });
            continue;
        }
        if auc(lo0)? >= cfg.target_auc {
            out.push(RatePoint {
                n,
                b_min: lo0,
                saturated: true,
            });
            continue;
        }
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..cfg.iterations {
            let mid = (lo * hi).sqrt();
            if auc(mid)? >= cfg.target_auc {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(RatePoint {
            n,
            b_min: (lo * hi).sqrt(),
            saturated: false,
        });
    }
    Ok(out)
}

/// Least-squares slope of `log b_min` against `log n`.
pub fn log_log_slope(points: &[RatePoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.b_min.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Long-run variance `f(0)` of an increasing-domain spec, summed from its
/// autocovariances up to lag `n - 1`.
pub fn finite_long_run_variance(spec: &KernelSpec) -> Result<f64> {
    let row = autocov_row(spec, spec.n())?;
    Ok(row[0] + 2.0 * row[1..].iter().sum::<f64>())
}

/// One line of `auc.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub detector: String,
    pub family: String,
    pub nu_or_beta: f64,
    pub sigma: f64,
    pub rho: f64,
    pub n: usize,
    pub alpha: f64,
    pub b: f64,
    pub mean_auc: f64,
    pub stderr: f64,
}

impl AucRow {
    pub fn new(
        detector: &DetectorChoice,
        spec: &KernelSpec,
        alpha: f64,
        b: f64,
        summary: &AucSummary,
    ) -> Self {
        AucRow {
            detector: detector.name().to_string(),
            family: spec.family.name().to_string(),
            nu_or_beta: spec.shape,
            sigma: spec.sigma,
            rho: spec.rho,
            n: spec.n(),
            alpha,
            b,
            mean_auc: summary.mean_auc,
            stderr: summary.stderr,
        }
    }
}

/// One line of `rate.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub detector: String,
    pub family: String,
    pub shape: f64,
    pub n: usize,
    pub b_min: f64,
    pub saturated: bool,
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row).map_err(|e| Error::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Writes `auc.csv` rows with header
/// `detector,family,nu_or_beta,sigma,rho,n,alpha,b,mean_auc,stderr`.
pub fn write_auc_csv<W: Write>(w: W, rows: &[AucRow]) -> Result<()> {
    write_rows(w, rows)
}

/// Writes `rate.csv` rows with header `detector,family,shape,n,b_min,saturated`.
pub fn write_rate_csv<W: Write>(w: W, rows: &[RateRow]) -> Result<()> {
    write_rows(w, rows)
}
