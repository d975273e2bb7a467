// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo experiments: simulate, select λ, detect, score, aggregate.

use std::collections::BTreeMap;
use std::time::Instant;

use combss_core::lambda_select::{
    bisection_for_k, confidence_bound, default_bracket, default_lambda_max,
    discrepancy_and_confidence, discrepancy_principle, DEFAULT_ALPHA, DEFAULT_DELTA_LAMBDA,
    DEFAULT_MAX_STEPS,
};
use combss_core::metrics::{directed_hausdorff, evaluate};
use combss_core::simgen::{derive_seed, simulate_scaled, SelectionMode};
use combss_core::{CombssOptions, DetectionResult, Error, ExperimentConfig, SelectionRule};
use rayon::prelude::*;

use crate::{CliError, Result};

#[derive(Debug, Clone)]
pub struct HarnessOptions {
    pub combss: CombssOptions,
    pub alpha: f64,
    pub delta_lambda: f64,
    pub max_bisection_steps: usize,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Record wall-clock time per replication. Off by default so that output
    /// files are reproducible byte for byte.
    pub timing: bool,
    /// Score with the directed distance from the true change points to the
    /// estimates instead of the symmetric Hausdorff distance.
    pub one_sided_hausdorff: bool,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            combss: CombssOptions::default(),
            alpha: DEFAULT_ALPHA,
            delta_lambda: DEFAULT_DELTA_LAMBDA,
            max_bisection_steps: DEFAULT_MAX_STEPS,
            threads: None,
            timing: false,
            one_sided_hausdorff: false,
        }
    }
}

/// One (grid value, replication, rule) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub scale_value: f64,
    pub replication: usize,
    pub rule: SelectionRule,
    pub lambda: f64,
    pub k_hat: usize,
    pub tau_hat: Vec<usize>,
    pub f1: f64,
    pub hausdorff: f64,
    pub hausdorff_std: f64,
    /// Interval halving never hit the target count. Scored as F1 = 0 with no
    /// Hausdorff distance.
    pub skipped: bool,
    pub wall_time_ms: f64,
}

/// Per (grid value, rule) means.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scale_value: f64,
    pub rule: SelectionRule,
    /// Over all replications, skipped ones counting as 0.
    pub mean_f1: f64,
    /// Over replications that were not skipped and have a finite distance.
    pub mean_hausdorff: f64,
    pub mean_hausdorff_std: f64,
    /// Over replications that were not skipped.
    pub mean_k_hat: f64,
    pub n_skipped: usize,
    pub n_inf_hausdorff: usize,
}

fn rule_order(rule: SelectionRule) -> u8 {
    match rule {
        SelectionRule::KnownK => 0,
        SelectionRule::Discrepancy => 1,
        SelectionRule::ConfidenceBound => 2,
    }
}

/// Rules an experiment mode reports, in output order.
pub fn rules_for(mode: SelectionMode) -> &'static [SelectionRule] {
    match mode {
        SelectionMode::KnownK => &[SelectionRule::KnownK],
        SelectionMode::Dp => &[SelectionRule::Discrepancy],
        SelectionMode::Cb => &[SelectionRule::ConfidenceBound],
        SelectionMode::DpAndCb => &[SelectionRule::Discrepancy, SelectionRule::ConfidenceBound],
    }
}

fn run_one(
    config: &ExperimentConfig,
    opts: &HarnessOptions,
    scale: f64,
    rep: usize,
) -> Result<Vec<ExperimentRecord>> {
    let spec = config.spec_at(scale)?;
    let y = simulate_scaled(
        &spec,
        derive_seed(config.base_seed, rep as u64),
        config.noise_scale,
    );
    let post = |r: DetectionResult| -> Result<DetectionResult> {
        Ok(match config.merge_gap {
            Some(gap) => r.merged(&y, gap)?,
            None => r,
        })
    };
    let start = Instant::now();
    let elapsed = |start: Instant| {
        if opts.timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    };

    let score = |rule: SelectionRule, result: &DetectionResult, lambda: f64, wall_time_ms: f64| {
        let report = evaluate(
            &spec.tau,
            &result.tau_hat,
            ExperimentConfig::tolerance(&spec),
            spec.min_gap(),
        );
        let hausdorff = if opts.one_sided_hausdorff {
            directed_hausdorff(&spec.tau, &result.tau_hat)
        } else {
            report.hausdorff
        };
        ExperimentRecord {
            scale_value: scale,
            replication: rep,
            rule,
            lambda,
            k_hat: result.k_hat,
            tau_hat: result.tau_hat.clone(),
            f1: report.f1,
            hausdorff,
            hausdorff_std: hausdorff / spec.min_gap() as f64,
            skipped: false,
            wall_time_ms,
        }
    };

    let mut out = Vec::with_capacity(2);
    match config.mode {
        SelectionMode::KnownK => {
            let (lo, hi) = default_bracket(&y);
            match bisection_for_k(&y, spec.k(), lo, hi, opts.max_bisection_steps, &opts.combss) {
                Ok(sel) => {
                    let result = post(sel.result)?;
                    out.push(score(
                        SelectionRule::KnownK,
                        &result,
                        sel.lambda,
                        elapsed(start),
                    ));
                }
                Err(Error::BisectionExhausted { trace, .. }) => {
                    let (lambda, k_hat) = trace.last().copied().unwrap_or((f64::NAN, 0));
                    out.push(ExperimentRecord {
                        scale_value: scale,
                        replication: rep,
                        rule: SelectionRule::KnownK,
                        lambda,
                        k_hat,
                        tau_hat: Vec::new(),
                        f1: 0.0,
                        hausdorff: f64::NAN,
                        hausdorff_std: f64::NAN,
                        skipped: true,
                        wall_time_ms: elapsed(start),
                    });
                }
                Err(e) => return Err(e.into()),
            }
        }
        SelectionMode::Dp | SelectionMode::Cb | SelectionMode::DpAndCb => {
            let sigma = spec.sigma;
            let lambda_max = default_lambda_max(&y);
            let selections = match config.mode {
                SelectionMode::Dp => {
                    vec![discrepancy_principle(
                        &y,
                        sigma,
                        opts.delta_lambda,
                        lambda_max,
                        &opts.combss,
                    )?]
                }
                SelectionMode::Cb => {
                    vec![confidence_bound(
                        &y,
                        sigma,
                        opts.alpha,
                        opts.delta_lambda,
                        lambda_max,
                        &opts.combss,
                    )?]
                }
                _ => {
                    let (dp, cb) = discrepancy_and_confidence(
                        &y,
                        sigma,
                        opts.alpha,
                        opts.delta_lambda,
                        lambda_max,
                        &opts.combss,
                    )?;
                    vec![dp, cb]
                }
            };
            let ms = elapsed(start);
            for sel in selections {
                let result = post(sel.result)?;
                out.push(score(sel.trace.rule, &result, sel.lambda, ms));
            }
        }
    }
    Ok(out)
}

/// Runs every (grid value, replication) pair in parallel. Records come back
/// ordered by grid value, replication, then rule, whatever the thread count.
pub fn run_experiment(
    config: &ExperimentConfig,
    opts: &HarnessOptions,
) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    opts.combss.validate()?;
    let jobs: Vec<(f64, usize)> = config
        .scale_values
        .iter()
        .flat_map(|&s| (0..config.replications).map(move |r| (s, r)))
        .collect();
    let work = || -> Result<Vec<ExperimentRecord>> {
        let nested: Vec<Vec<ExperimentRecord>> = jobs
            .par_iter()
            .map(|&(s, r)| run_one(config, opts, s, r))
            .collect::<Result<_>>()?;
        Ok(nested.into_iter().flatten().collect())
    };
    match opts.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Validation(format!("cannot start thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Groups records by (grid value, rule). Rows are sorted by grid value then
/// rule, so the result does not depend on record order.
pub fn aggregate(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(u64, u8), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        // Grid values are nonnegative, so the bit pattern sorts like the value.
        groups
            .entry((r.scale_value.to_bits(), rule_order(r.rule)))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|mut group| {
            group.sort_by_key(|r| r.replication);
            let kept = || group.iter().filter(|r| !r.skipped);
            let finite = || kept().filter(|r| r.hausdorff.is_finite());
            SummaryRow {
                scale_value: group[0].scale_value,
                rule: group[0].rule,
                mean_f1: mean(group.iter().map(|r| r.f1)),
                mean_hausdorff: mean(finite().map(|r| r.hausdorff)),
                mean_hausdorff_std: mean(finite().map(|r| r.hausdorff_std)),
                mean_k_hat: mean(kept().map(|r| r.k_hat as f64)),
                n_skipped: group.iter().filter(|r| r.skipped).count(),
                n_inf_hausdorff: kept().filter(|r| r.hausdorff.is_infinite()).count(),
            }
        })
        .collect()
}

/// How often each index was estimated as a change point, for one grid value
/// and rule. Sorted by index.
pub fn cp_histogram(
    records: &[ExperimentRecord],
    scale_value: f64,
    rule: SelectionRule,
) -> Vec<(usize, usize)> {
    let mut counts = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.scale_value == scale_value && r.rule == rule)
    {
        for &t in &r.tau_hat {
            *counts.entry(t).or_insert(0usize) += 1;
        }
    }
    counts.into_iter().collect()
}
