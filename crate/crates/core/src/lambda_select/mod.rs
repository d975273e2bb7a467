// SPDX-License-Identifier: MIT OR Apache-2.0

//! Choosing the penalty λ.
//!
//! * Known number of change points: interval halving on λ until the selection
//!   has exactly `k_target` change points.
//! * Known noise level σ: scan `λ = 0, Δλ, 2Δλ, …` and compare the
//!   standardized residual `‖y - μ̂_λ‖² / σ²` against its expectation `n`
//!   (discrepancy principle) or against the χ²₁₋α(n) quantile (confidence
//!   bound).

mod chi2;

use alloc::vec::Vec;

pub use chi2::{chi2_cdf, chi2_pdf, chi2_quantile, regularized_gamma_p};

use crate::changepoint::{restricted_ols, DetectionResult};
use crate::combss::{run_combss, CombssOptions, CombssRun};
use crate::error::{Error, Result};

pub const DEFAULT_DELTA_LAMBDA: f64 = 0.005;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_MAX_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SelectionRule {
    KnownK,
    Discrepancy,
    ConfidenceBound,
}

impl SelectionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionRule::KnownK => "known_k",
            SelectionRule::Discrepancy => "dp",
            SelectionRule::ConfidenceBound => "cb",
        }
    }
}

/// Runs the optimizer at `lambda` and refits on the selected columns.
pub fn detect_at_lambda(
    y: &[f64],
    lambda: f64,
    opts: &CombssOptions,
) -> Result<(CombssRun, DetectionResult)> {
    let run = run_combss(y, lambda, opts)?;
    let result = restricted_ols(y, &run.s)?.with_lambda(lambda);
    Ok((run, result))
}

/// `‖y‖² / n`: at this penalty the empty model beats any selection that
/// spends a full unit of `Σ t`.
pub fn default_lambda_max(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
}

/// Bracket for interval halving. Falls back to `[0, 1]` on all-zero data.
pub fn default_bracket(y: &[f64]) -> (f64, f64) {
    let hi = default_lambda_max(y);
    (0.0, if hi > 0.0 { hi } else { 1.0 })
}

/// A chosen penalty together with its fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KnownKSelection {
    pub lambda: f64,
    pub result: DetectionResult,
    /// Every probed `(lambda, k_hat)` pair.
    pub trace: Vec<(f64, usize)>,
}

/// Interval halving on λ for a target number of change points.
///
/// Assumes `k_hat` weakly decreases in λ. When no probe within `max_steps`
/// hits `k_target`, returns [`Error::BisectionExhausted`] carrying the probes.
pub fn bisection_for_k(
    y: &[f64],
    k_target: usize,
    lambda_lo: f64,
    lambda_hi: f64,
    max_steps: usize,
    opts: &CombssOptions,
) -> Result<KnownKSelection> {
    if !(lambda_lo >= 0.0 && lambda_lo < lambda_hi && lambda_hi.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "penalty bracket [{lambda_lo}, {lambda_hi}] is empty or invalid"
        )));
    }
    if k_target == 0 {
        return Err(Error::InvalidInput(
            "target number of change points must be positive".into(),
        ));
    }
    let (mut lo, mut hi) = (lambda_lo, lambda_hi);
    let mut trace = Vec::with_capacity(max_steps);
    for _ in 0..max_steps {
        let mid = 0.5 * (lo + hi);
        let (_, result) = detect_at_lambda(y, mid, opts)?;
        trace.push((mid, result.k_hat));
        match result.k_hat.cmp(&k_target) {
            core::cmp::Ordering::Equal => {
                return Ok(KnownKSelection {
                    lambda: mid,
                    result,
                    trace,
                })
            }
            core::cmp::Ordering::Greater => lo = mid,
            core::cmp::Ordering::Less => hi = mid,
        }
    }
    Err(Error::BisectionExhausted {
        steps: max_steps,
        k_target,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanEntry {
    pub lambda: f64,
    pub k_hat: usize,
    /// `rss / σ²`.
    pub standardized_rss: f64,
}

/// The penalty grid as scanned, and which entry a rule picked.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanTrace {
    pub entries: Vec<ScanEntry>,
    pub chosen_index: usize,
    pub rule: SelectionRule,
}

/// Penalty chosen from a scan.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanSelection {
    pub lambda: f64,
    pub result: DetectionResult,
    pub trace: ScanTrace,
}

/// Fits along `λ_j = j·Δλ` for `λ_j <= lambda_max`, caching every fit so that
/// several rules can be evaluated on the same scan.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaScan {
    entries: Vec<ScanEntry>,
    results: Vec<DetectionResult>,
}

impl LambdaScan {
    /// Scans until `stop(standardized_rss)` holds for an entry (that entry is
    /// kept) or the grid is exhausted.
    pub fn run(
        y: &[f64],
        sigma: f64,
        delta_lambda: f64,
        lambda_max: f64,
        opts: &CombssOptions,
        stop: impl Fn(f64) -> bool,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput("sigma must be positive".into()));
        }
        if !(delta_lambda > 0.0 && delta_lambda.is_finite()) {
            return Err(Error::InvalidInput("penalty step must be positive".into()));
        }
        if !(lambda_max >= 0.0 && lambda_max.is_finite()) {
            return Err(Error::InvalidInput(
                "lambda_max must be finite and nonnegative".into(),
            ));
        }
        let steps = libm::floor(lambda_max / delta_lambda * (1.0 + 1e-12)) as usize;
        let variance = sigma * sigma;
        let mut entries = Vec::new();
        let mut results = Vec::new();
        for j in 0..=steps {
            let lambda = j as f64 * delta_lambda;
            let (_, result) = detect_at_lambda(y, lambda, opts)?;
            let standardized_rss = result.rss / variance;
            entries.push(ScanEntry {
                lambda,
                k_hat: result.k_hat,
                standardized_rss,
            });
            results.push(result);
            if stop(standardized_rss) {
                break;
            }
        }
        Ok(Self { entries, results })
    }

    pub fn entries(&self) -> &[ScanEntry] {
        &self.entries
    }

    pub fn results(&self) -> &[DetectionResult] {
        &self.results
    }

    /// First crossing of `target` (≥), then whichever side of the crossing
    /// is closer to `target`; ties go to the smaller λ.
    pub fn discrepancy_index(&self, target: f64) -> usize {
        match self
            .entries
            .iter()
            .position(|e| e.standardized_rss >= target)
        {
            None => self.entries.len() - 1,
            Some(0) => 0,
            Some(j) => {
                let below = (self.entries[j - 1].standardized_rss - target).abs();
                let above = (self.entries[j].standardized_rss - target).abs();
                if below <= above {
                    j - 1
                } else {
                    j
                }
            }
        }
    }

    /// Last entry before the standardized residual first exceeds `threshold`.
    pub fn confidence_index(&self, threshold: f64) -> usize {
        match self
            .entries
            .iter()
            .position(|e| e.standardized_rss > threshold)
        {
            None => self.entries.len() - 1,
            Some(j) => j.saturating_sub(1),
        }
    }

    pub fn select(&self, rule: SelectionRule, index: usize) -> ScanSelection {
        ScanSelection {
            lambda: self.entries[index].lambda,
            result: self.results[index].clone(),
            trace: ScanTrace {
                entries: self.entries.clone(),
                chosen_index: index,
                rule,
            },
        }
    }

    pub fn discrepancy(&self, n: usize) -> ScanSelection {
        self.select(SelectionRule::Discrepancy, self.discrepancy_index(n as f64))
    }

    pub fn confidence_bound(&self, n: usize, alpha: f64) -> ScanSelection {
        let threshold = chi2_quantile(1.0 - alpha, n as u32);
        self.select(
            SelectionRule::ConfidenceBound,
            self.confidence_index(threshold),
        )
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput("alpha must lie in (0, 1)".into()))
    }
}

/// Discrepancy principle: standardized residual closest to `n`.
pub fn discrepancy_principle(
    y: &[f64],
    sigma: f64,
    delta_lambda: f64,
    lambda_max: f64,
    opts: &CombssOptions,
) -> Result<ScanSelection> {
    let n = y.len();
    let scan = LambdaScan::run(y, sigma, delta_lambda, lambda_max, opts, |r| r >= n as f64)?;
    Ok(scan.discrepancy(n))
}

/// Confidence bound: largest scanned penalty before the standardized
/// residual exceeds χ²₁₋α(n).
pub fn confidence_bound(
    y: &[f64],
    sigma: f64,
    alpha: f64,
    delta_lambda: f64,
    lambda_max: f64,
    opts: &CombssOptions,
) -> Result<ScanSelection> {
    check_alpha(alpha)?;
    let n = y.len();
    let threshold = chi2_quantile(1.0 - alpha, n as u32);
    let scan = LambdaScan::run(y, sigma, delta_lambda, lambda_max, opts, |r| r > threshold)?;
    Ok(scan.confidence_bound(n, alpha))
}

/// Both rules from one shared scan, `(discrepancy, confidence_bound)`.
pub fn discrepancy_and_confidence(
    y: &[f64],
    sigma: f64,
    alpha: f64,
    delta_lambda: f64,
    lambda_max: f64,
    opts: &CombssOptions,
) -> Result<(ScanSelection, ScanSelection)> {
    check_alpha(alpha)?;
    let n = y.len();
    let threshold = chi2_quantile(1.0 - alpha, n as u32).max(n as f64);
    let scan = LambdaScan::run(y, sigma, delta_lambda, lambda_max, opts, |r| r > threshold)?;
    Ok((scan.discrepancy(n), scan.confidence_bound(n, alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn entries(rss: &[f64]) -> LambdaScan {
        LambdaScan {
            entries: rss
                .iter()
                .enumerate()
                .map(|(j, &r)| ScanEntry {
                    lambda: j as f64 * 0.005,
                    k_hat: 0,
                    standardized_rss: r,
                })
                .collect(),
            results: Vec::new(),
        }
    }

    #[test]
    fn discrepancy_picks_closer_side() {
        assert_eq!(entries(&[1.0, 7.0, 12.0]).discrepancy_index(8.0), 1);
        assert_eq!(entries(&[1.0, 5.0, 9.0]).discrepancy_index(8.0), 2);
        // Equidistant: smaller λ.
        assert_eq!(entries(&[1.0, 6.0, 10.0]).discrepancy_index(8.0), 1);
        assert_eq!(entries(&[9.0, 10.0]).discrepancy_index(8.0), 0);
        assert_eq!(entries(&[1.0, 2.0]).discrepancy_index(8.0), 1);
    }

    #[test]
    fn confidence_picks_previous() {
        assert_eq!(entries(&[1.0, 7.0, 12.0]).confidence_index(10.0), 1);
        assert_eq!(entries(&[11.0]).confidence_index(10.0), 0);
        assert_eq!(entries(&[1.0, 10.0]).confidence_index(10.0), 1);
    }

    fn step_signal() -> Vec<f64> {
        vec![0.0, 0.0, 0.0, 0.0, 5.0, 5.0, 5.0, 5.0]
    }

    #[test]
    fn discrepancy_keeps_real_change() {
        let y = step_signal();
        let sel = discrepancy_principle(
            &y,
            1.0,
            DEFAULT_DELTA_LAMBDA,
            default_lambda_max(&y),
            &CombssOptions::default(),
        )
        .unwrap();
        assert_eq!(sel.result.tau_hat, [5]);
        assert_eq!(sel.trace.rule, SelectionRule::Discrepancy);
        assert!(sel
            .trace
            .entries
            .windows(2)
            .all(|w| w[1].lambda > w[0].lambda));
    }

    #[test]
    fn confidence_keeps_real_change() {
        let y = step_signal();
        let sel = confidence_bound(
            &y,
            1.0,
            0.05,
            DEFAULT_DELTA_LAMBDA,
            default_lambda_max(&y),
            &CombssOptions::default(),
        )
        .unwrap();
        assert_eq!(sel.result.tau_hat, [5]);
        let (dp, cb) = discrepancy_and_confidence(
            &y,
            1.0,
            0.05,
            DEFAULT_DELTA_LAMBDA,
            default_lambda_max(&y),
            &CombssOptions::default(),
        )
        .unwrap();
        assert!(cb.lambda >= dp.lambda - DEFAULT_DELTA_LAMBDA);
        assert_eq!(dp.trace.entries, cb.trace.entries);
    }

    #[test]
    fn zero_data_selects_nothing() {
        let y = vec![0.0; 10];
        let opts = CombssOptions::default();
        let dp = discrepancy_principle(&y, 1.0, 0.005, default_lambda_max(&y), &opts).unwrap();
        assert_eq!(dp.result.k_hat, 0);
        let cb = confidence_bound(&y, 1.0, 0.05, 0.005, default_lambda_max(&y), &opts).unwrap();
        assert_eq!(cb.result.k_hat, 0);
    }

    #[test]
    fn bisection_single_jump() {
        let y: Vec<f64> = (1..=20).map(|i| if i >= 11 { 10.0 } else { 0.0 }).collect();
        let (lo, hi) = default_bracket(&y);
        let sel =
            bisection_for_k(&y, 1, lo, hi, DEFAULT_MAX_STEPS, &CombssOptions::default()).unwrap();
        assert_eq!(sel.result.tau_hat, [11]);
        assert_eq!(sel.result.k_hat, 1);
        assert_eq!(sel.trace.last().unwrap().0, sel.lambda);
    }

    #[test]
    fn bisection_on_constant_data_fails() {
        let y = vec![0.0; 12];
        let (lo, hi) = default_bracket(&y);
        match bisection_for_k(&y, 1, lo, hi, DEFAULT_MAX_STEPS, &CombssOptions::default()) {
            Err(Error::BisectionExhausted { steps, trace, .. }) => {
                assert_eq!(steps, DEFAULT_MAX_STEPS);
                assert_eq!(trace.len(), DEFAULT_MAX_STEPS);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn bisection_rejects_bad_bracket() {
        let y = [1.0, 2.0, 3.0];
        assert!(matches!(
            bisection_for_k(&y, 1, 1.0, 1.0, 5, &CombssOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }
}
