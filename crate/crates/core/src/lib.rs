//! Finite element discretization of the coupled Hasegawa-Mima system
//!
//! ```text
//! (I - Delta) u_t + [grad p x grad u] + [grad u x grad w] = 0,   w = u - Delta u
//! ```
//!
//! on a doubly periodic square, using P1 elements on a uniform triangulation
//! and implicit Euler in time. Each timestep solves a nonlinear algebraic
//! system with one of Newton, Chord or Modified Newton iteration; a
//! semilinear scheme that lags the nonlinearity is included for comparison.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod oracle;
pub mod output;
pub mod problems;
pub mod solvers;
pub mod sparse;

pub use assembly::FemOperators;
pub use error::{Error, Result};
pub use grid::{DofGrid, Element};
pub use integrator::{run, RunOptions, RunResult, StopReason};
pub use problems::{preset, ProblemSpec};
pub use solvers::{Method, SolverConfig, State, StepReport};
pub use sparse::{CsrMatrix, DenseMatrix, Lu};
