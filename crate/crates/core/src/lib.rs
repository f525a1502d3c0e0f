//! Boundary optimal control of 2D unsteady thermally convective
//! (Boussinesq) flow.
//!
//! The pipeline discretizes first and optimizes second: a Marchuk-Yanenko
//! splitting with an incremental L²-projection turns each time step of the
//! coupled Navier-Stokes / temperature system into linear advection-diffusion
//! solves plus a degenerate Stokes projection, on the P1-isoP2
//! (Bercovier-Pironneau) element pair. The fully discrete adjoint system is
//! the exact transpose of the linearized dynamics, so the boundary trace of
//! the temperature adjoint yields the exact gradient of the discrete
//! objective. A limited-memory BFGS driver over the control space closes the
//! loop, with a step size from minimizing the linearized-model objective
//! instead of a line search.
//!
//! Entry points: [`state::ProblemSetup`] (presets `example1`/`example2`),
//! [`state::Discretization`], [`optimizer::lbfgs_solve`], and the `cli`
//! module behind the `bouscontrol` binary.

pub mod adjoint;
pub mod cli;
mod error;
pub mod fem;
pub mod linearized;
pub mod mesh;
pub mod optimizer;
pub mod oracle;
pub mod solver;
pub mod sparse;
pub mod state;
mod util;

pub use error::{Error, Result};
