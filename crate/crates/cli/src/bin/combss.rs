// SPDX-License-Identifier: MIT OR Apache-2.0

use std::process::ExitCode;

fn main() -> ExitCode {
    combss_cli::cli::main_with_args(std::env::args_os())
}
