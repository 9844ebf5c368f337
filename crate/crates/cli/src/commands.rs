//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use meanshift_core::detectors::{cusum, CusumDomain};
use meanshift_core::sim::{write_auc_csv, write_rate_csv, AucRow, RateRow};
use meanshift_core::{
    build_cov, glrt, glrt_general, plugin_glrt, rate_curve, toeplitz_generator_at, ChangeWindow,
    DetectorChoice, Experiment, FitResult, RateConfig,
};
use serde::Serialize;

use crate::config::RunConfig;

/// Shortest series `detect` accepts.
pub const MIN_SERIES_LEN: usize = 10;

/// JSON printed by `detect`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectOutput {
    pub statistic: f64,
    pub t_hat: usize,
    pub threshold: f64,
    pub reject: bool,
    pub b_hat: f64,
    pub detector: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
}

/// Parses newline-separated reals. Blank lines are skipped; anything else
/// that is not a finite number is an error naming its 1-based line.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => bail!("line {}: expected a finite number, got '{t}'", i + 1),
        }
    }
    Ok(out)
}

fn single_delta(cfg: &RunConfig) -> Result<f64> {
    match cfg.deltas.as_slice() {
        [d] => Ok(*d),
        _ => bail!("detect takes a single delta, got {}", cfg.deltas.len()),
    }
}

pub fn detect(cfg: &RunConfig) -> Result<DetectOutput> {
    let path = cfg.input.as_ref().context("detect needs --input")?;
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let x = parse_series(&text).with_context(|| format!("parsing {}", path.display()))?;
    if x.len() < MIN_SERIES_LEN {
        bail!(
            "series has {} values; at least {MIN_SERIES_LEN} are needed",
            x.len()
        );
    }
    let n = x.len();
    let spec = cfg.single_kernel()?.with_n(n);
    let detector = cfg.single_detector()?;
    let delta = single_delta(cfg)?;
    let window = ChangeWindow::new(n, cfg.alpha)?;
    let mut fit = None;
    let result = match detector {
        DetectorChoice::Glrt => glrt(&x, &build_cov(&spec)?, &window, delta)?,
        DetectorChoice::GlrtGeneral => glrt_general(&x, &build_cov(&spec)?, &window, delta)?,
        DetectorChoice::PluginGlrt { estimator } => {
            let out = plugin_glrt(&x, &spec, &window, delta, estimator)?;
            fit = Some(out.fit);
            out.result
        }
        DetectorChoice::Cusum if spec.domain.is_fixed() => {
            cusum(&x, &window, delta, CusumDomain::Fixed, None)?
        }
        DetectorChoice::Cusum => {
            let f0 = toeplitz_generator_at(&spec, 0.0)?;
            cusum(&x, &window, delta, CusumDomain::Increasing, Some(f0))?
        }
    };
    Ok(DetectOutput {
        statistic: result.statistic,
        t_hat: result.t_hat,
        threshold: result.threshold,
        reject: result.reject,
        b_hat: result.b_hat,
        detector: detector.name().to_string(),
        n,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub delta: f64,
    pub empirical_rate: f64,
    pub trials: usize,
}

pub fn calibrate(cfg: &RunConfig) -> Result<Vec<CalibrationRow>> {
    if cfg.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let spec = cfg.single_kernel()?;
    let detector = cfg.single_detector()?;
    let exp = Experiment::new(spec, cfg.alpha, std::slice::from_ref(detector))?;
    let rates = exp.null_rejection_rates(&cfg.deltas, cfg.trials, cfg.seed)?;
    Ok(cfg
        .deltas
        .iter()
        .zip(&rates[0])
        .map(|(d, r)| CalibrationRow {
            delta: *d,
            empirical_rate: *r,
            trials: cfg.trials,
        })
        .collect())
}

pub fn auc(cfg: &RunConfig) -> Result<Vec<AucRow>> {
    if cfg.b_grid.is_empty() {
        bail!("auc needs a nonempty --b-grid");
    }
    let mut rows = Vec::new();
    for spec in &cfg.kernels {
        let exp = Experiment::new(spec, cfg.alpha, &cfg.detectors)?;
        let per_b = cfg
            .b_grid
            .iter()
            .map(|&b| exp.run(b, cfg.t1, cfg.t2, cfg.seed))
            .collect::<meanshift_core::Result<Vec<_>>>()?;
        for (d, det) in cfg.detectors.iter().enumerate() {
            for (b, summaries) in cfg.b_grid.iter().zip(&per_b) {
                rows.push(AucRow::new(det, spec, cfg.alpha, *b, &summaries[d]));
            }
        }
    }
    Ok(rows)
}

pub fn rate(cfg: &RunConfig) -> Result<Vec<RateRow>> {
    if cfg.n_grid.is_empty() {
        bail!("rate needs a nonempty --n-grid");
    }
    let rc = RateConfig {
        alpha: cfg.alpha,
        t1: cfg.t1,
        t2: cfg.t2,
        seed: cfg.seed,
        target_auc: cfg.target_auc,
        bracket: cfg.bracket,
        ..RateConfig::default()
    };
    let mut rows = Vec::new();
    for spec in &cfg.kernels {
        for det in &cfg.detectors {
            for p in rate_curve(spec, det, &cfg.n_grid, &rc)? {
                rows.push(RateRow {
                    detector: det.name().to_string(),
                    family: spec.family.name().to_string(),
                    shape: spec.shape,
                    n: p.n,
                    b_min: p.b_min,
                    saturated: p.saturated,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes `path` through a temporary file in the same directory, renamed
/// into place once complete.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_calibration_csv<W: Write>(mut w: W, rows: &[CalibrationRow]) -> Result<()> {
    writeln!(w, "delta,empirical_rate,trials")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.delta, r.empirical_rate, r.trials)?;
    }
    Ok(())
}

pub fn save_auc(dir: &Path, rows: &[AucRow]) -> Result<PathBuf> {
    let path = dir.join("auc.csv");
    write_atomic(&path, |w| Ok(write_auc_csv(w, rows)?))?;
    Ok(path)
}

pub fn save_rate(dir: &Path, rows: &[RateRow]) -> Result<PathBuf> {
    let path = dir.join("rate.csv");
    write_atomic(&path, |w| Ok(write_rate_csv(w, rows)?))?;
    Ok(path)
}

pub fn print_auc_table<W: Write>(mut w: W, rows: &[AucRow]) -> Result<()> {
    writeln!(
        w,
        "{:<14} {:<20} {:>6} {:>10} {:>9} {:>9}",
        "detector", "family", "n", "b", "mean_auc", "stderr"
    )?;
    for r in rows {
        writeln!(
            w,
            "{:<14} {:<20} {:>6} {:>10.4} {:>9.4} {:>9.4}",
            r.detector, r.family, r.n, r.b, r.mean_auc, r.stderr
        )?;
    }
    Ok(())
}

pub fn print_rate_table<W: Write>(mut w: W, rows: &[RateRow]) -> Result<()> {
    writeln!(
        w,
        "{:<14} {:<20} {:>6} {:>6} {:>12} {:>10}",
        "detector", "family", "shape", "n", "b_min", "saturated"
    )?;
    for r in rows {
        writeln!(
            w,
            "{:<14} {:<20} {:>6} {:>6} {:>12.6} {:>10}",
            r.detector, r.family, r.shape, r.n, r.b_min, r.saturated
        )?;
    }
    Ok(())
}
