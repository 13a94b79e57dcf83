//! Library half of the `transval` binary: config parsing and validation,
//! the experiment runner, and the result-table CSV codec. The binary in
//! `main.rs` is a thin argument layer over these modules, so everything the
//! CLI does can be driven and tested in-process.

pub mod config;
pub mod runner;
pub mod table;

use std::fmt;

/// CLI-level failure, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; lists one line per offending key. Exit 2.
    Config(Vec<String>),
    /// The sweep ran but at least one cell failed. Exit 3.
    CellFailure(usize),
    /// A runtime computation outside the grid failed (estimators). Exit 3.
    Run(String),
    /// Filesystem trouble reading or writing. Exit 4.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::CellFailure(_) | CliError::Run(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(issues) => {
                writeln!(f, "invalid config:")?;
                for issue in issues {
                    writeln!(f, "  - {issue}")?;
                }
                Ok(())
            }
            CliError::CellFailure(count) => {
                write!(f, "{count} grid cell(s) failed; see # error records in the output")
            }
            CliError::Run(msg) => write!(f, "run failed: {msg}"),
            CliError::Io(msg) => write!(f, "I/O error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
