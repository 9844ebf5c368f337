//! Run configuration: a JSON file given with `--config`, overridden field by
//! field by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use meanshift_core::{
    DetectorChoice, Domain, EstimatorChoice, KernelFamily, KernelSpec, ParamGrid,
};
use serde::Deserialize;

pub const DEFAULT_N: usize = 500;
pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_TRIALS: usize = 2000;

/// Flags shared by every subcommand.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Newline-separated series (detect).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Kernel family, or a comma-separated list for auc/rate.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// ν (matern), β (powered-exponential) or λ (poly-toeplitz).
    #[arg(long)]
    pub shape: Option<f64>,
    /// fixed or increasing; defaults to increasing for the Toeplitz families.
    #[arg(long)]
    pub domain: Option<String>,
    /// Sample count for simulations.
    #[arg(long)]
    pub n: Option<usize>,
    /// glrt, glrt-general, plugin-glrt or cusum; comma-separated for auc/rate.
    #[arg(long)]
    pub detector: Option<String>,
    /// grid-mle, fixed-rho[:RHO] or oracle.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Comma-separated σ values of the estimation grid.
    #[arg(long)]
    pub sigma_grid: Option<String>,
    /// Comma-separated ρ values of the estimation grid.
    #[arg(long)]
    pub rho_grid: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// False-alarm budget; comma-separated for calibrate.
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub b_grid: Option<String>,
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials per repetition.
    #[arg(long)]
    pub t1: Option<usize>,
    /// Repetitions.
    #[arg(long)]
    pub t2: Option<usize>,
    /// Null trials for calibrate.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Target AUC for rate.
    #[arg(long)]
    pub target_auc: Option<f64>,
    /// Bisection bracket `lo,hi` for rate.
    #[arg(long)]
    pub bracket: Option<String>,
    /// Output directory for CSV files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One kernel in a config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub family: String,
    pub sigma: Option<f64>,
    pub rho: Option<f64>,
    pub shape: Option<f64>,
    pub domain: Option<String>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub kernels: Option<Vec<KernelEntry>>,
    pub n: Option<usize>,
    pub detectors: Option<Vec<String>>,
    pub estimator: Option<String>,
    pub sigma_grid: Option<Vec<f64>>,
    pub rho_grid: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub delta: Option<Vec<f64>>,
    pub b_grid: Option<Vec<f64>>,
    pub n_grid: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub trials: Option<usize>,
    pub target_auc: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub kernels: Vec<KernelSpec>,
    pub detectors: Vec<DetectorChoice>,
    pub alpha: f64,
    pub deltas: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub seed: u64,
    pub t1: usize,
    pub t2: usize,
    pub trials: usize,
    pub target_auc: f64,
    pub bracket: (f64, f64),
    pub out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad {what} value '{p}': {e}"))
        })
        .collect()
}

fn parse_domain(s: &str, n: usize) -> Result<Domain> {
    match s.to_ascii_lowercase().as_str() {
        "fixed" => Ok(Domain::Fixed { n }),
        "increasing" => Ok(Domain::Increasing { n }),
        other => bail!("unknown domain '{other}' (expected fixed or increasing)"),
    }
}

fn default_shape(family: KernelFamily) -> f64 {
    match family {
        KernelFamily::Matern | KernelFamily::PolyToeplitz => 0.5,
        KernelFamily::PoweredExponential => 1.0,
        _ => 0.0,
    }
}

fn build_kernel(entry: &KernelEntry, n: usize) -> Result<KernelSpec> {
    let family: KernelFamily = entry.family.parse()?;
    let domain = match &entry.domain {
        Some(d) => parse_domain(d, n)?,
        None if family.is_toeplitz_only() || family == KernelFamily::WhiteNoise => {
            Domain::Increasing { n }
        }
        None => Domain::Fixed { n },
    };
    let (default_sigma, default_rho) = match family {
        KernelFamily::ExpToeplitz | KernelFamily::PolyToeplitz => (1.0, 2.0),
        KernelFamily::WhiteNoise => (1.0, 1.0),
        _ => (1.0, 0.5),
    };
    let spec = KernelSpec::new(
        family,
        entry.sigma.unwrap_or(default_sigma),
        entry.rho.unwrap_or(default_rho),
        entry.shape.unwrap_or_else(|| default_shape(family)),
        domain,
    )?;
    Ok(spec)
}

fn parse_estimator(
    s: &str,
    grid: ParamGrid,
    kernel: Option<&KernelSpec>,
) -> Result<EstimatorChoice> {
    let (name, arg) = match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let est = match name {
        "grid-mle" => EstimatorChoice::GridMle { grid },
        "fixed-rho" => {
            let rho_fixed = match arg {
                Some(v) => v
                    .parse()
                    .with_context(|| format!("bad fixed-rho value '{v}'"))?,
                None => grid.max_rho(),
            };
            EstimatorChoice::FixedRho { rho_fixed }
        }
        "oracle" => {
            let k = kernel.context("oracle estimator needs a kernel")?;
            EstimatorChoice::Oracle {
                sigma: k.sigma,
                rho: k.rho,
            }
        }
        other => {
            bail!("unknown estimator '{other}' (expected grid-mle, fixed-rho[:RHO] or oracle)")
        }
    };
    est.validate()?;
    Ok(est)
}

fn parse_detector(s: &str, estimator: &EstimatorChoice) -> Result<DetectorChoice> {
    Ok(match s {
        "glrt" => DetectorChoice::Glrt,
        "glrt-general" => DetectorChoice::GlrtGeneral,
        "plugin-glrt" => DetectorChoice::PluginGlrt {
            estimator: estimator.clone(),
        },
        "cusum" => DetectorChoice::Cusum,
        other => {
            bail!("unknown detector '{other}' (expected glrt, glrt-general, plugin-glrt or cusum)")
        }
    })
}

impl RunConfig {
    /// Merges the config file (if any) with the flags.
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let n = flags.n.or(file.n).unwrap_or(DEFAULT_N);

        let entries: Vec<KernelEntry> = match &flags.kernel {
            Some(k) => k
                .split(',')
                .map(str::trim)
                .filter(|f| !f.is_empty())
                .map(|family| KernelEntry {
                    family: family.to_string(),
                    sigma: flags.sigma,
                    rho: flags.rho,
                    shape: flags.shape,
                    domain: flags.domain.clone(),
                })
                .collect(),
            None => file
                .kernels
                .clone()
                .unwrap_or_else(|| {
                    vec![KernelEntry {
                        family: "matern".into(),
                        sigma: None,
                        rho: None,
                        shape: None,
                        domain: None,
                    }]
                })
                .into_iter()
                .map(|mut e| {
                    e.sigma = flags.sigma.or(e.sigma);
                    e.rho = flags.rho.or(e.rho);
                    e.shape = flags.shape.or(e.shape);
                    e.domain = flags.domain.clone().or(e.domain);
                    e
                })
                .collect(),
        };
        if entries.is_empty() {
            bail!("no kernel given");
        }
        let kernels = entries
            .iter()
            .map(|e| build_kernel(e, n))
            .collect::<Result<Vec<_>>>()?;

        let standard = ParamGrid::standard();
        let sigmas = match &flags.sigma_grid {
            Some(s) => parse_list("sigma-grid", s)?,
            None => file.sigma_grid.clone().unwrap_or(standard.sigmas),
        };
        let rhos = match &flags.rho_grid {
            Some(s) => parse_list("rho-grid", s)?,
            None => file.rho_grid.clone().unwrap_or(standard.rhos),
        };
        let grid = ParamGrid::new(sigmas, rhos)?;
        let est_name = flags
            .estimator
            .clone()
            .or(file.estimator.clone())
            .unwrap_or_else(|| "grid-mle".into());
        let estimator = parse_estimator(&est_name, grid, kernels.first())?;

        let det_names: Vec<String> = match &flags.detector {
            Some(d) => parse_list("detector", d)?,
            None => file
                .detectors
                .clone()
                .unwrap_or_else(|| vec!["glrt".into()]),
        };
        if det_names.is_empty() {
            bail!("no detector given");
        }
        let detectors = det_names
            .iter()
            .map(|d| parse_detector(d, &estimator))
            .collect::<Result<Vec<_>>>()?;

        let deltas = match &flags.delta {
            Some(d) => parse_list("delta", d)?,
            None => file.delta.clone().unwrap_or_else(|| vec![DEFAULT_DELTA]),
        };
        let b_grid = match &flags.b_grid {
            Some(b) => parse_list("b-grid", b)?,
            None => file.b_grid.clone().unwrap_or_default(),
        };
        let n_grid = match &flags.n_grid {
            Some(s) => parse_list("n-grid", s)?,
            None => file.n_grid.clone().unwrap_or_default(),
        };
        let bracket = match &flags.bracket {
            Some(s) => match parse_list::<f64>("bracket", s)?.as_slice() {
                [lo, hi] => (*lo, *hi),
                _ => bail!("bracket needs exactly two values lo,hi"),
            },
            None => file.bracket.unwrap_or((0.01, 10.0)),
        };

        Ok(RunConfig {
            input: flags.input.clone().or(file.input),
            kernels,
            detectors,
            alpha: flags.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
            deltas,
            b_grid,
            n_grid,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            t1: flags
                .t1
                .or(file.t1)
                .unwrap_or(meanshift_core::sim::DEFAULT_T1),
            t2: flags
                .t2
                .or(file.t2)
                .unwrap_or(meanshift_core::sim::DEFAULT_T2),
            trials: flags.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
            target_auc: flags.target_auc.or(file.target_auc).unwrap_or(0.9),
            bracket,
            out: flags.out.clone().or(file.out),
        })
    }

    pub fn single_kernel(&self) -> Result<&KernelSpec> {
        match self.kernels.as_slice() {
            [k] => Ok(k),
            _ => bail!(
                "this command takes exactly one kernel, got {}",
                self.kernels.len()
            ),
        }
    }

    pub fn single_detector(&self) -> Result<&DetectorChoice> {
        match self.detectors.as_slice() {
            [d] => Ok(d),
            _ => bail!(
                "this command takes exactly one detector, got {}",
                self.detectors.len()
            ),
        }
    }
}
