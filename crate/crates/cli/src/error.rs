use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cea::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Usage(String),

    #[error("did not converge: {0}")]
    NotConverged(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2: input or parse error; 3: mathematical precondition; 4: solver did
    /// not converge.
    pub fn exit_code(&self) -> i32 {
        use cea::Error as E;
        match self {
            CliError::Core(
                E::Positivity(_)
                | E::RecantingWitness { .. }
                | E::AmbiguousEdge { .. }
                | E::ZeroProbabilityCondition
                | E::DegenerateDomain(_),
            ) => 3,
            CliError::NotConverged(_) => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
