// SPDX-License-Identifier: MIT OR Apache-2.0

//! Offline detection of multiple mean change points in univariate Gaussian
//! sequences, posed as best-subset regression on a lower-triangular all-ones
//! design and solved by continuous Boolean relaxation.
//!
//! The crate is `no_std` (it needs `alloc`). Every routine is a pure function
//! of its inputs; file formats, the experiment driver, and the CLI live in the
//! companion `combss-cli` crate.
//!
//! Index conventions: sequences are 0-based slices, while change-point
//! locations (`tau`, `tau_hat`, `change_indices`) are 1-based positions in
//! `1..=n`, with position 1 reserved for the artificial change point τ₀.

#![no_std]
#![forbid(unsafe_code)]
// `!(x >= lo)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod changepoint;
pub mod combss;
mod error;
pub mod lambda_select;
pub mod linalg;
pub mod metrics;
pub mod simgen;

pub use changepoint::{restricted_ols, DetectionResult, Segmentation};
pub use combss::{run_combss, CombssOptions, CombssRun};
pub use error::{Error, Result};
pub use lambda_select::{
    bisection_for_k, chi2_quantile, confidence_bound, discrepancy_principle, LambdaScan, ScanTrace,
    SelectionRule,
};
pub use metrics::{f1_score, hausdorff, EvalReport};
pub use simgen::{experiment_config, simulate, staircase_mu, ExperimentConfig, SignalSpec};
