// SPDX-License-Identifier: MIT OR Apache-2.0

//! Std companion to `combss-core`: the Monte-Carlo experiment harness, the
//! CSV/JSON file formats, and the `combss` command-line tool.

pub mod cli;
mod error;
pub mod harness;
pub mod io;

pub use error::{CliError, Result};
