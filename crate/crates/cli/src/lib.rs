//! Configuration, experiment commands and result files for the `flatlab`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod suite;

pub use commands::run_command;
pub use config::{Overrides, RunConfig};

/// Process exit code for a library error.
pub fn exit_code(err: &flatlab::Error) -> i32 {
    match err {
        flatlab::Error::Config(_) | flatlab::Error::Domain(_) => 2,
        flatlab::Error::Numerical(_) => 3,
        flatlab::Error::InsufficientData(_) => 4,
    }
}
