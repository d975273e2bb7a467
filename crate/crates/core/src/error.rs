// SPDX-License-Identifier: MIT OR Apache-2.0

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the detection pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A Thomas pivot fell below the singularity floor.
    SingularSystem { row: usize, pivot: f64 },
    /// Two sequences that must share a length do not.
    DimensionMismatch { expected: usize, found: usize },
    /// A scalar or sequence argument is outside its domain.
    InvalidInput(String),
    /// A signal description violates its invariants.
    InvalidSpec(String),
    /// Experiment name is not one of A1, A2, B1, B2.
    UnknownExperiment(String),
    /// Interval halving did not hit the target count. `trace` holds every
    /// probed `(lambda, k_hat)` pair in order.
    BisectionExhausted {
        steps: usize,
        k_target: usize,
        trace: Vec<(f64, usize)>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SingularSystem { row, pivot } => {
                write!(
                    f,
                    "singular tridiagonal system: pivot {pivot:e} at row {row}"
                )
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidSpec(msg) => write!(f, "invalid signal spec: {msg}"),
            Error::UnknownExperiment(name) => {
                write!(f, "unknown experiment {name:?} (expected A1, A2, B1 or B2)")
            }
            Error::BisectionExhausted {
                steps, k_target, ..
            } => write!(
                f,
                "interval halving found no penalty giving {k_target} change points in {steps} steps"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
