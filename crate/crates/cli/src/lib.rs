//! Batch front end: configuration, runs, images and dump comparison.

pub mod config;
pub mod diff;
pub mod render;
pub mod run;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// `diff` found fields further apart than the tolerance, or incomparable headers.
    pub const DIFFERENT: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const IO: i32 = 4;
}

pub use config::{ConfigError, RunConfig};
pub use diff::{diff_dumps, diff_files, DiffError, DiffReport};
pub use run::{run, RunError, RunSummary};

/// Exit code for a failed run.
pub fn run_exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Config(_) => exit::CONFIG,
        RunError::Solver { .. } => exit::SOLVER,
        RunError::Io { .. } => exit::IO,
        RunError::Core(vortexmap::Error::Io(_)) => exit::IO,
        // Anything else the core rejects came from the configured values.
        RunError::Core(_) => exit::CONFIG,
    }
}
