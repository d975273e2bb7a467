// SPDX-License-Identifier: MIT OR Apache-2.0

//! From a binary column selection to a piecewise-constant fit.
//!
//! Column `j` of `X` is the step function that is 1 from position `j` on, so
//! least squares restricted to the selected columns is plain averaging over
//! the segments that the selection cuts out. When column 1 (the artificial
//! change point τ₀) is not selected, the leading segment has no free level
//! and its mean is pinned to 0.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{check_len, Result};

/// One segment of a selection, as a 1-based half-open range.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub bounds: Range<usize>,
    /// Leading segment whose level is fixed at 0.
    pub zero_constrained: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segmentation {
    /// Selected columns, 1-based and strictly increasing.
    pub change_indices: Vec<usize>,
    /// Consecutive segments covering `1..n+1`.
    pub segments: Vec<Segment>,
}

pub fn segments_from_s(s: &[bool]) -> Segmentation {
    let n = s.len();
    let change_indices: Vec<usize> = s
        .iter()
        .enumerate()
        .filter_map(|(i, &si)| si.then_some(i + 1))
        .collect();
    let mut segments = Vec::with_capacity(change_indices.len() + 1);
    let mut start = 1;
    let mut zero_constrained = !s.first().copied().unwrap_or(false);
    for &j in change_indices.iter().filter(|&&j| j > 1) {
        segments.push(Segment {
            bounds: start..j,
            zero_constrained,
        });
        start = j;
        zero_constrained = false;
    }
    if n > 0 {
        segments.push(Segment {
            bounds: start..n + 1,
            zero_constrained,
        });
    }
    Segmentation {
        change_indices,
        segments,
    }
}

/// Selection vector for change points `tau` (1-based, excluding τ₀).
pub fn selection_from_tau(n: usize, tau: &[usize], include_tau0: bool) -> Vec<bool> {
    let mut s = vec![false; n];
    if include_tau0 && n > 0 {
        s[0] = true;
    }
    for &j in tau {
        if (1..=n).contains(&j) {
            s[j - 1] = true;
        }
    }
    s
}

/// Restricted least-squares fit for a selection, with the derived change
/// points.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionResult {
    /// Estimated change points in `2..=n`, increasing. Excludes τ₀.
    pub tau_hat: Vec<usize>,
    /// Whether column 1 (τ₀) was selected.
    pub includes_tau0: bool,
    /// Selected columns (1-based); `beta_hat[k]` belongs to `selected[k]`.
    pub selected: Vec<usize>,
    /// `β̂_[s]`: jumps `μ̂_j - μ̂_{j-1}` at the selected columns, `μ̂_0 = 0`.
    pub beta_hat: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub rss: f64,
    pub lambda_used: f64,
    pub k_hat: usize,
}

impl DetectionResult {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_used = lambda;
        self
    }

    /// Selection vector this result was fitted from.
    pub fn selection(&self) -> Vec<bool> {
        selection_from_tau(self.mu_hat.len(), &self.tau_hat, self.includes_tau0)
    }

    /// Merges near-duplicate change points and refits.
    pub fn merged(&self, y: &[f64], min_gap: usize) -> Result<Self> {
        let tau = merge_close(&self.tau_hat, min_gap);
        let s = selection_from_tau(y.len(), &tau, self.includes_tau0);
        Ok(restricted_ols(y, &s)?.with_lambda(self.lambda_used))
    }
}

/// Least squares over `β` supported on `s`, computed by segment averaging.
pub fn restricted_ols(y: &[f64], s: &[bool]) -> Result<DetectionResult> {
    check_len(y.len(), s.len())?;
    let seg = segments_from_s(s);
    let mut mu_hat = vec![0.0; y.len()];
    for segment in seg.segments.iter().filter(|seg| !seg.zero_constrained) {
        let range = segment.bounds.start - 1..segment.bounds.end - 1;
        let mean = y[range.clone()].iter().sum::<f64>() / range.len() as f64;
        mu_hat[range].fill(mean);
    }
    let rss = y.iter().zip(&mu_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let beta_hat = seg
        .change_indices
        .iter()
        .map(|&j| mu_hat[j - 1] - if j > 1 { mu_hat[j - 2] } else { 0.0 })
        .collect();
    let tau_hat: Vec<usize> = seg
        .change_indices
        .iter()
        .copied()
        .filter(|&j| j > 1)
        .collect();
    Ok(DetectionResult {
        k_hat: tau_hat.len(),
        includes_tau0: s.first().copied().unwrap_or(false),
        tau_hat,
        selected: seg.change_indices,
        beta_hat,
        mu_hat,
        rss,
        lambda_used: 0.0,
    })
}

/// Replaces every run of estimates with consecutive gaps `< min_gap` by the
/// run's median (lower median for even runs).
pub fn merge_close(tau_hat: &[usize], min_gap: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cluster: Vec<usize> = Vec::new();
    for &j in tau_hat {
        if let Some(&last) = cluster.last() {
            if j - last >= min_gap {
                out.push(cluster[(cluster.len() - 1) / 2]);
                cluster.clear();
            }
        }
        cluster.push(j);
    }
    if !cluster.is_empty() {
        out.push(cluster[(cluster.len() - 1) / 2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn seg(start: usize, end: usize, zero: bool) -> Segment {
        Segment {
            bounds: start..end,
            zero_constrained: zero,
        }
    }

    #[test]
    fn segments_examples() {
        let s = segments_from_s(&[true, false, true, false]);
        assert_eq!(s.change_indices, [1, 3]);
        assert_eq!(s.segments, [seg(1, 3, false), seg(3, 5, false)]);

        let s = segments_from_s(&[false, false, true, false]);
        assert_eq!(s.segments, [seg(1, 3, true), seg(3, 5, false)]);

        let s = segments_from_s(&[false; 4]);
        assert_eq!(s.segments, [seg(1, 5, true)]);
    }

    #[test]
    fn ols_examples() {
        let r = restricted_ols(&[1.0, 1.0, 5.0, 5.0], &[true, false, true, false]).unwrap();
        assert_eq!(r.mu_hat, [1.0, 1.0, 5.0, 5.0]);
        assert_eq!(r.beta_hat, [1.0, 4.0]);
        assert_eq!(r.selected, [1, 3]);
        assert_eq!(r.tau_hat, [3]);
        assert!(r.includes_tau0);
        assert_eq!(r.rss, 0.0);

        let r = restricted_ols(&[2.0, 4.0], &[true, false]).unwrap();
        assert_eq!(r.mu_hat, [3.0, 3.0]);
        assert_eq!(r.beta_hat, [3.0]);
        assert_eq!(r.rss, 2.0);
        assert_eq!(r.k_hat, 0);

        let r = restricted_ols(&[1.0, 1.0, 5.0, 5.0], &[false, false, true, false]).unwrap();
        assert_eq!(r.mu_hat, [0.0, 0.0, 5.0, 5.0]);
        assert_eq!(r.rss, 2.0);
        assert!(!r.includes_tau0);
        assert_eq!(r.beta_hat, [5.0]);

        assert!(restricted_ols(&[1.0], &[true, false]).is_err());
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_close(&[90, 91], 2), [90]);
        assert_eq!(merge_close(&[31, 61, 91], 5), [31, 61, 91]);
        assert_eq!(merge_close(&[10, 11, 12, 40], 3), [11, 40]);
        assert!(merge_close(&[], 3).is_empty());
    }

    #[test]
    fn merged_result_refits() {
        let y = [0.0, 0.0, 0.0, 4.0, 4.0, 4.0];
        let r = restricted_ols(&y, &[false, false, false, true, true, false]).unwrap();
        assert_eq!(r.tau_hat, [4, 5]);
        let m = r.with_lambda(0.3).merged(&y, 2).unwrap();
        assert_eq!(m.tau_hat, [4]);
        assert_eq!(m.rss, 0.0);
        assert_eq!(m.lambda_used, 0.3);
    }

    proptest! {
        #[test]
        fn matches_dense_least_squares(
            case in (1usize..=30).prop_flat_map(|n| (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(-10.0f64..10.0, n),
            ))
        ) {
            let (s, y) = case;
            let n = y.len();
            let cols: Vec<usize> = (0..n).filter(|&j| s[j]).collect();
            let r = restricted_ols(&y, &s).unwrap();
            let yv = DVector::from_column_slice(&y);
            let dense_mu = if cols.is_empty() {
                DVector::zeros(n)
            } else {
                let xs = DMatrix::from_fn(n, cols.len(), |i, k| if cols[k] <= i { 1.0 } else { 0.0 });
                let beta = (xs.transpose() * &xs).cholesky().unwrap().solve(&(xs.transpose() * &yv));
                for (a, b) in r.beta_hat.iter().zip(beta.iter()) {
                    prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
                }
                xs * beta
            };
            for (a, b) in r.mu_hat.iter().zip(dense_mu.iter()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
            // β̂_j = μ̂_j - μ̂_{j-1}
            for (&j, &b) in r.selected.iter().zip(&r.beta_hat) {
                let prev = if j > 1 { r.mu_hat[j - 2] } else { 0.0 };
                prop_assert!((r.mu_hat[j - 1] - prev - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn rss_is_nested(
            case in (2usize..=30).prop_flat_map(|n| (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(-10.0f64..10.0, n),
                0..n,
            ))
        ) {
            let (mut s, y, extra) = case;
            let before = restricted_ols(&y, &s).unwrap().rss;
            s[extra] = true;
            let after = restricted_ols(&y, &s).unwrap().rss;
            prop_assert!(after <= before + 1e-9);
        }

        #[test]
        fn merge_is_idempotent_and_spaced(
            mut tau in proptest::collection::btree_set(2usize..200, 0..30),
            gap in 1usize..10,
        ) {
            let tau: Vec<usize> = core::mem::take(&mut tau).into_iter().collect();
            let once = merge_close(&tau, gap);
            prop_assert_eq!(merge_close(&once, gap), once.clone());
            prop_assert!(once.windows(2).all(|w| w[1] - w[0] >= gap));
        }
    }
}
