use std::path::PathBuf;

use fkam_core::arithmetic::ArithError;
use fkam_core::cohomology::CohomologyError;
use fkam_core::engine::EngineError;
use fkam_core::fibered::JetError;
use fkam_core::schedule::ScheduleError;
use fkam_core::strip::StripError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed {what} at `{path}`: {message}")]
    Input { what: String, path: String, message: String },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] fkam_core::Error),
}

macro_rules! via_core {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

via_core!(ArithError, ScheduleError, StripError, CohomologyError, JetError, EngineError);

impl CliError {
    /// Module the failure originated in.
    pub fn module(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.module(),
            _ => "report_cli",
        }
    }
}
