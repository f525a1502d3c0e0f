//! Crate-wide error type.

use crate::state::ControlTrajectory;
use thiserror::Error;

/// Errors produced by mesh construction, assembly, the solvers, and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh: {0}")]
    Mesh(String),

    #[error("assembly: {0}")]
    Assembly(String),

    #[error("unknown boundary tag {0}")]
    UnknownTag(String),

    #[error("singular linear system in {system} at time step {step}")]
    LinearSolve { step: usize, system: &'static str },

    #[error("dense reference solve failed: {0}")]
    DenseSolve(String),

    #[error("degenerate search direction: step-size denominator below 1e-300")]
    DegenerateDirection,

    #[error("nonfinite objective or gradient at iteration {iteration}")]
    NonfiniteObjective {
        iteration: usize,
        /// Offending iterate, kept so callers can dump it for post-mortems.
        iterate: Box<ControlTrajectory>,
    },

    #[error("oracle guard: {0}")]
    OracleGuard(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
