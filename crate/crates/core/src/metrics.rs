// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scoring estimated change points against the truth.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `f64::INFINITY` when exactly one of the two sets is empty.
    pub hausdorff: f64,
    /// `hausdorff / L`.
    pub hausdorff_standardized: f64,
}

/// Tolerance-based F1 with one-to-one matching.
///
/// Pairs are taken greedily by increasing distance (ties: smaller truth index,
/// then smaller estimate index); a pair counts when its distance is at most
/// `tol`. Two empty sets score 1.
pub fn f1_score(truth: &[usize], estimate: &[usize], tol: f64) -> F1Score {
    if truth.is_empty() && estimate.is_empty() {
        return F1Score {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (i, &a) in truth.iter().enumerate() {
        for (j, &b) in estimate.iter().enumerate() {
            let dist = a.abs_diff(b);
            if dist as f64 <= tol {
                pairs.push((dist, i, j));
            }
        }
    }
    pairs.sort_unstable();
    let mut truth_used = alloc::vec![false; truth.len()];
    let mut est_used = alloc::vec![false; estimate.len()];
    let mut hits = 0usize;
    for (_, i, j) in pairs {
        if !truth_used[i] && !est_used[j] {
            truth_used[i] = true;
            est_used[j] = true;
            hits += 1;
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(hits, estimate.len());
    let recall = ratio(hits, truth.len());
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    F1Score {
        precision,
        recall,
        f1,
    }
}

/// `max_{a ∈ from} min_{b ∈ to} |a - b|`. Empty `from` gives 0, empty `to`
/// (with nonempty `from`) gives infinity.
pub fn directed_hausdorff(from: &[usize], to: &[usize]) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    if to.is_empty() {
        return f64::INFINITY;
    }
    from.iter()
        .map(|&a| {
            to.iter()
                .map(|&b| a.abs_diff(b))
                .min()
                .unwrap_or(usize::MAX)
        })
        .max()
        .unwrap_or(0) as f64
}

/// Symmetric Hausdorff distance.
pub fn hausdorff(truth: &[usize], estimate: &[usize]) -> f64 {
    directed_hausdorff(truth, estimate).max(directed_hausdorff(estimate, truth))
}

pub fn evaluate(truth: &[usize], estimate: &[usize], tol: f64, min_gap: usize) -> EvalReport {
    let F1Score {
        precision,
        recall,
        f1,
    } = f1_score(truth, estimate, tol);
    let hausdorff = hausdorff(truth, estimate);
    EvalReport {
        precision,
        recall,
        f1,
        hausdorff,
        hausdorff_standardized: hausdorff / min_gap as f64,
    }
}
