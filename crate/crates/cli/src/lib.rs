//! Library side of the `fredkin` command-line tool: presets, output formats,
//! the verification suites and one function per subcommand.

pub mod commands;
pub mod format;
pub mod presets;
pub mod verify;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const IO: i32 = 2;
    pub const VERIFICATION: i32 = 3;
    pub const TRUNCATED: i32 = 4;
}

/// Environment variable holding the worker-thread count for parallel work.
pub const WORKERS_ENV: &str = "FREDKIN_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] fredkin_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Usage(_) | CliError::Core(_) => exit::USAGE,
        }
    }
}

/// What a subcommand hands back to `main`: text for stdout and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    pub fn ok(stdout: String) -> Self {
        Outcome { stdout, code: exit::SUCCESS }
    }
}
