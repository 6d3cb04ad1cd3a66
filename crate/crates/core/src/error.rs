use thiserror::Error;

use crate::arithmetic::ArithError;
use crate::cohomology::CohomologyError;
use crate::engine::EngineError;
use crate::fibered::JetError;
use crate::schedule::ScheduleError;
use crate::strip::StripError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arithmetic: {0}")]
    Arith(#[from] ArithError),
    #[error("schedule: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("strip: {0}")]
    Strip(#[from] StripError),
    #[error("cohomology: {0}")]
    Cohomology(#[from] CohomologyError),
    #[error("fibered map: {0}")]
    Jet(#[from] JetError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
}

impl Error {
    /// Name of the module the error originated in.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Arith(_) => "arithmetic",
            Error::Schedule(_) => "schedule",
            Error::Strip(_) => "strip_fourier",
            Error::Cohomology(_) => "cohomology",
            Error::Jet(_) => "fibered_map",
            Error::Engine(e) => e.module(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
