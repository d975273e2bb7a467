// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `combss` command line.
//!
//! Exit codes: 0 on success, 1 for invalid input or IO failures, 2 when the
//! interval-halving search for a known number of change points gives up.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use combss_core::lambda_select::{
    bisection_for_k, confidence_bound, default_bracket, default_lambda_max, discrepancy_principle,
    DEFAULT_ALPHA, DEFAULT_DELTA_LAMBDA, DEFAULT_MAX_STEPS,
};
use combss_core::simgen::ScaleAxis;
use combss_core::{experiment_config, simulate, CombssOptions, Error};

use crate::harness::{aggregate, cp_histogram, rules_for, run_experiment, HarnessOptions};
use crate::{io, CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "combss",
    version,
    about = "Change-point detection by continuous best subset selection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Interval halving on λ until exactly K change points are found.
    KnownK,
    /// Discrepancy principle with known noise level.
    Dp,
    /// Confidence bound with known noise level.
    Cb,
}

#[derive(Debug, Clone, clap::Args)]
pub struct FitArgs {
    /// Selection threshold on t.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Adam iteration cap per penalty value.
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Adam step size.
    #[arg(long, default_value_t = CombssOptions::default().learning_rate)]
    pub learning_rate: f64,
}

impl FitArgs {
    fn options(&self) -> Result<CombssOptions> {
        let opts = CombssOptions {
            threshold: self.threshold,
            max_iterations: self.max_iter,
            learning_rate: self.learning_rate,
            ..CombssOptions::default()
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate change points in a sequence (CSV, one value per line).
    Detect {
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Number of change points (known-k).
        #[arg(long)]
        k: Option<usize>,
        /// Noise standard deviation (dp, cb).
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Penalty grid step (dp, cb).
        #[arg(long, default_value_t = DEFAULT_DELTA_LAMBDA)]
        delta_lambda: f64,
        /// Largest penalty tried; defaults to the mean square of the data.
        #[arg(long)]
        lambda_max: Option<f64>,
        /// Interval-halving step cap (known-k).
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Merge estimates closer than this many indices and refit.
        #[arg(long)]
        merge_gap: Option<usize>,
        #[command(flatten)]
        fit: FitArgs,
        /// Result JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the penalty search trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Draw one noisy sequence from a signal spec (JSON).
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation study (A1, A2, B1 or B2).
    Experiment {
        name: String,
        /// Replications per grid value.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output prefix; writes PREFIX_records.csv, PREFIX_summary.csv and
        /// PREFIX_histogram.csv. Defaults to the experiment name.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Restrict the grid to these values (comma separated).
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        /// Jump size for experiments that vary the spacing.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        merge_gap: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_DELTA_LAMBDA)]
        delta_lambda: f64,
        /// Grid value for the change-point histogram; defaults to the largest.
        #[arg(long)]
        hist_scale: Option<f64>,
        #[command(flatten)]
        fit: FitArgs,
        /// Record per-replication wall time (output is then not reproducible).
        #[arg(long)]
        timing: bool,
        /// Use the directed distance from the true change points to the
        /// estimates instead of the symmetric Hausdorff distance.
        #[arg(long)]
        one_sided_hausdorff: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(Error::BisectionExhausted { trace, .. }) = &e {
                for (lambda, k) in trace {
                    eprintln!("  lambda={lambda} k_hat={k}");
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p, e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let label = path.unwrap_or(Path::new("<stdout>"));
    let mut out = output(path)?;
    f(&mut *out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(label, e))
}

fn require<T>(value: Option<T>, what: &str, mode: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Validation(format!("--{what} is required with --mode {mode}")))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Detect {
            input,
            mode,
            k,
            sigma,
            alpha,
            delta_lambda,
            lambda_max,
            max_steps,
            merge_gap,
            fit,
            out,
            trace,
        } => {
            let opts = fit.options()?;
            if merge_gap == Some(0) {
                return Err(CliError::Validation("--merge-gap must be positive".into()));
            }
            let y = io::read_series(&input)?;
            if y.len() < 2 {
                return Err(CliError::Validation(
                    "need at least two observations".into(),
                ));
            }
            let mut result = match mode {
                Mode::KnownK => {
                    if sigma.is_some() {
                        return Err(CliError::Validation(
                            "--sigma does not apply to --mode known-k".into(),
                        ));
                    }
                    let k = require(k, "k", "known-k")?;
                    let (lo, hi) = match lambda_max {
                        Some(hi) => (0.0, hi),
                        None => default_bracket(&y),
                    };
                    let sel = match bisection_for_k(&y, k, lo, hi, max_steps, &opts) {
                        Err(Error::BisectionExhausted {
                            steps,
                            k_target,
                            trace: probes,
                        }) => {
                            if let Some(path) = &trace {
                                io::write_bisection_trace(path, &probes)?;
                            }
                            return Err(Error::BisectionExhausted {
                                steps,
                                k_target,
                                trace: probes,
                            }
                            .into());
                        }
                        other => other?,
                    };
                    if let Some(path) = &trace {
                        io::write_bisection_trace(path, &sel.trace)?;
                    }
                    sel.result
                }
                Mode::Dp | Mode::Cb => {
                    if k.is_some() {
                        return Err(CliError::Validation(
                            "--k only applies to --mode known-k".into(),
                        ));
                    }
                    let name = if mode == Mode::Dp { "dp" } else { "cb" };
                    let sigma = require(sigma, "sigma", name)?;
                    let lambda_max = lambda_max.unwrap_or_else(|| default_lambda_max(&y));
                    let sel = if mode == Mode::Dp {
                        discrepancy_principle(&y, sigma, delta_lambda, lambda_max, &opts)?
                    } else {
                        confidence_bound(&y, sigma, alpha, delta_lambda, lambda_max, &opts)?
                    };
                    if let Some(path) = &trace {
                        io::write_scan_trace(path, &sel.trace)?;
                    }
                    sel.result
                }
            };
            if let Some(gap) = merge_gap {
                result = result.merged(&y, gap)?;
            }
            emit(out.as_deref(), |w| io::write_detection(w, &result))
        }
        Command::Simulate { spec, seed, out } => {
            let spec = io::read_spec(&spec)?;
            let y = simulate(&spec, seed);
            emit(out.as_deref(), |w| io::write_series(w, &y))
        }
        Command::Experiment {
            name,
            reps,
            seed,
            out,
            threads,
            scales,
            delta,
            merge_gap,
            alpha,
            delta_lambda,
            hist_scale,
            fit,
            timing,
            one_sided_hausdorff,
        } => {
            let mut config = experiment_config(&name)?;
            if let Some(reps) = reps {
                config.replications = reps;
            }
            if let Some(seed) = seed {
                config.base_seed = seed;
            }
            if let Some(scales) = scales {
                config.scale_values = scales;
            }
            if let Some(delta) = delta {
                if config.scale_axis != ScaleAxis::MinGap {
                    return Err(CliError::Validation(format!(
                        "--delta does not apply to {name}, which varies δ"
                    )));
                }
                config.base_spec.delta = delta;
            }
            config.merge_gap = merge_gap;
            if threads == Some(0) {
                return Err(CliError::Validation("--threads must be positive".into()));
            }
            let opts = HarnessOptions {
                combss: fit.options()?,
                alpha,
                delta_lambda,
                threads,
                timing,
                one_sided_hausdorff,
                ..HarnessOptions::default()
            };
            config.validate()?;
            let hist_scale = hist_scale.unwrap_or(
                *config
                    .scale_values
                    .last()
                    .expect("validated grid is nonempty"),
            );
            if !config.scale_values.contains(&hist_scale) {
                return Err(CliError::Validation(format!(
                    "--hist-scale {hist_scale} is not on the grid"
                )));
            }

            let records = run_experiment(&config, &opts)?;
            let summary = aggregate(&records);
            let histogram = cp_histogram(&records, hist_scale, rules_for(config.mode)[0]);

            let prefix = out.unwrap_or_else(|| PathBuf::from(&name));
            let path = |suffix: &str| {
                let mut p = prefix.clone().into_os_string();
                p.push(suffix);
                PathBuf::from(p)
            };
            let (rec_path, sum_path, hist_path) = (
                path("_records.csv"),
                path("_summary.csv"),
                path("_histogram.csv"),
            );
            io::write_records(&rec_path, &records)?;
            io::write_summary(&sum_path, &summary)?;
            io::write_histogram(&hist_path, &histogram)?;
            for p in [rec_path, sum_path, hist_path] {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}
