use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const BUDGET: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
    #[error("{name}: {reason}")]
    Config { name: &'static str, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] flowdiff_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn config(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Config { name, reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use flowdiff_core::Error as E;
        match self {
            Error::Parse { .. } | Error::Config { .. } => exit::PARSE,
            Error::Io { .. } => exit::IO,
            Error::Core(e) => match e {
                E::InfeasibleMass { .. } | E::NoFeasibleDelta => exit::INFEASIBLE,
                E::BudgetExceeded { .. } => exit::BUDGET,
                E::SelfLoop { .. }
                | E::NodeOutOfRange { .. }
                | E::EmptyGraph
                | E::Disconnected { .. }
                | E::InvalidParameter { .. }
                | E::UnsupportedExponent { .. }
                | E::EmptySet { .. } => exit::PARSE,
                _ => exit::OTHER,
            },
        }
    }
}
