//! Command-line front end for mean-shift detection: run a detector on a
//! series, or run calibration, AUC and rate experiments.
//!
//! Exit codes: `0` success, `1` error, `2` when `detect` rejects the
//! no-change hypothesis.

pub mod commands;
pub mod config;

use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "meanshift",
    version,
    about = "Detect a single shift in the mean of Gaussian process data",
    after_help = "Exit status: 0 on success, 1 on error, 2 when detect rejects (a change was found)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one detector on a series and print the result as JSON.
    Detect(Flags),
    /// Monte Carlo false-alarm rate under no change, per delta.
    Calibrate(Flags),
    /// Mean AUC per detector and jump size; writes auc.csv.
    Auc(Flags),
    /// Smallest jump reaching the target AUC per sample size; writes rate.csv.
    Rate(Flags),
}

/// Runs one command; the returned code follows the convention above.
pub fn execute(command: &Command) -> Result<ExitCode> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Detect(flags) => {
            let res = commands::detect(&RunConfig::resolve(flags)?)?;
            writeln!(out, "{}", serde_json::to_string(&res)?)?;
            Ok(if res.reject {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Calibrate(flags) => {
            let cfg = RunConfig::resolve(flags)?;
            let rows = commands::calibrate(&cfg)?;
            if let Some(dir) = &cfg.out {
                commands::write_atomic(&dir.join("calibration.csv"), |w| {
                    commands::write_calibration_csv(w, &rows)
                })?;
            }
            commands::write_calibration_csv(&mut out, &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Auc(flags) => {
            let cfg = RunConfig::resolve(flags)?;
            let rows = commands::auc(&cfg)?;
            let path = commands::save_auc(cfg.out.as_deref().unwrap_or(".".as_ref()), &rows)?;
            commands::print_auc_table(&mut out, &rows)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rate(flags) => {
            let cfg = RunConfig::resolve(flags)?;
            let rows = commands::rate(&cfg)?;
            let path = commands::save_rate(cfg.out.as_deref().unwrap_or(".".as_ref()), &rows)?;
            commands::print_rate_table(&mut out, &rows)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Parses arguments and runs. Usage errors exit with `1`, not clap's `2`,
/// which is reserved for a rejecting `detect`.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
