//! The staged Newton scheme with parameter correction.

mod config;
mod family;
mod hypotheses;
mod run;
mod stage;
mod trace;
mod zero;

pub use config::{EngineConfig, Mode};
pub use family::{Coupling, ParamFamily};
pub use hypotheses::{verify_hypotheses, HypothesisCheck, HypothesisReport};
pub use run::{prepare, resume, run, run_with_checkpoints, Checkpoint, KamResult, Preparation, PreparedState};
pub use stage::{replay, replay_to, run_stage, RunState, StageKind, StageRecord};
pub use trace::{StageTrace, StepRecord};
pub use zero::{find_parameter_zero, ZeroReport};

use num_complex::Complex64;
use thiserror::Error;

use crate::arithmetic::ArithError;
use crate::cohomology::CohomologyError;
use crate::fibered::JetError;
use crate::schedule::ScheduleError;
use crate::strip::StripError;

#[derive(Debug, Error, Clone)]
pub enum EngineError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Strip(#[from] StripError),
    #[error("hypotheses not satisfied: {0}")]
    HypothesisFailed(String),
    #[error("transversality fails: |d/dt mean rho1| = {value} not in ({lower}, {upper})")]
    Transversality { value: f64, lower: f64, upper: f64 },
    #[error("epsilon = {epsilon:e} exceeds epsilon_bar = delta*l_n*/24 = {epsilon_bar:e}")]
    EpsilonAboveBar { epsilon: f64, epsilon_bar: f64 },
    #[error("R_eps undefined: discriminant L^-2 - 2T eps (1+4W) = {discriminant:e} < 0; shrink epsilon")]
    NegativeDiscriminant { discriminant: f64 },
    #[error("no zero inside the circle |t - {center}| = {radius:e} (winding 0)")]
    WindingZero { center: Complex64, radius: f64 },
    #[error("zero is not simple: winding number {winding}")]
    WindingMany { winding: i64 },
    #[error("phase of g undersampled on the parameter circle (jump {jump})")]
    Undersampled { jump: f64 },
    #[error("stage {stage}: stop rule not reached after {steps} steps (|eta| = {eta:e}, threshold {threshold:e})")]
    StopRuleNotReached { stage: usize, steps: usize, eta: f64, threshold: f64 },
    #[error("stage {stage}: assertion {what} failed: {value:e} > {bound:e}")]
    AssertionFailed { stage: usize, what: String, value: f64, bound: f64 },
    #[error("stage {stage} step {step}: disc radius {radius} below 3/8")]
    RadiusFloor { stage: usize, step: usize, radius: f64 },
    #[error("stage {stage}: new parameter disc not nested (|dt| + p_next = {reach:e} > p = {p:e})")]
    Containment { stage: usize, reach: f64, p: f64 },
    #[error("replay requested {requested} records but the log has {available}")]
    LogEnd { requested: usize, available: usize },
    #[error("stage budget exhausted: residual {residual:e} above target {target:e}")]
    BudgetExhausted { residual: f64, target: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{source} (after {} traced stages)", traces.len())]
    WithTrace { source: Box<EngineError>, traces: Vec<StageTrace> },
}

impl EngineError {
    pub fn module(&self) -> &'static str {
        match self {
            EngineError::Arith(_) => "arithmetic",
            EngineError::Schedule(_) => "schedule",
            EngineError::Cohomology(_) => "cohomology",
            EngineError::Jet(_) => "fibered_map",
            EngineError::Strip(_) => "strip_fourier",
            EngineError::WithTrace { source, .. } => source.module(),
            _ => "kam_engine",
        }
    }

    /// The underlying error without trace decoration.
    pub fn root(&self) -> &EngineError {
        match self {
            EngineError::WithTrace { source, .. } => source.root(),
            e => e,
        }
    }
}
