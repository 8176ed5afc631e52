//! Command-line front end for the `eqnf` library: problem-file ingestion,
//! the decompose / normal-form / reduce / periodic / verify pipelines and
//! their text and JSON reports.

pub mod commands;
pub mod problem;
pub mod report;

use thiserror::Error;

pub use commands::{run, Command};
pub use problem::{parse_problem, read_problem, Overrides, Problem, ProblemFile};
pub use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant failure: {0}")]
    Invariant(String),

    #[error("numerical failure: {0}")]
    Numerical(eqnf::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<eqnf::Error> for CliError {
    fn from(e: eqnf::Error) -> Self {
        use eqnf::Error as E;
        match e {
            E::InvalidInput(_)
            | E::DimensionMismatch { .. }
            | E::NotClosed { .. }
            | E::BadCharacter(_)
            | E::GroupTooLarge { .. } => CliError::Parse(e.to_string()),
            E::InvariantViolation(_) | E::NotEquivariant { .. } => {
                CliError::Invariant(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
