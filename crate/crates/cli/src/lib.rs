//! The `cstl` command-line tool.

mod args;
mod commands;
mod output;

pub use args::{Ablation, Cli, Command, OptimizerArg, CONFIG_ENV};
pub use commands::run;

/// Exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<conformal_stl::Error>() {
        Some(conformal_stl::Error::Config(_)) => 2,
        _ => 1,
    }
}
