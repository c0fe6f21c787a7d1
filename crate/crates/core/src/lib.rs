//! Matrix-free exponential integration toolkit.
//!
//! Two engines evaluate the action of φ-functions of a Jacobian on a vector:
//!
//! - [`leja`]: Newton interpolation at real Leja points, including the
//!   *vertical* mode where several scaled arguments `φ_l(c_i·h·J)b` share a
//!   single sequence of operator applications.
//! - [`kiops`]: Krylov projection of the augmented operator with incomplete
//!   orthogonalization, adaptive substepping and adaptive basis size.
//!
//! On top of those, [`integrators`] provides five embedded exponential
//! integrators (EPIRK4s3, EPIRK4s3A, EPIRK5P1, EXPRB43, EXPRB53s3) with
//! Leja, KIOPS and mixed (LeKry) stage groupings, and [`timestep`] drives
//! them adaptively with the accuracy and cost step size controllers.
//! [`problems`] holds the stiff reaction-diffusion benchmark problems.

pub mod error;
pub mod integrators;
pub mod kiops;
pub mod leja;
pub mod linalg;
pub mod problems;
pub mod spectrum;
pub mod timestep;

pub use error::{Error, Result};
pub use integrators::{Integrator, Scheme, StepResult};
pub use linalg::{DenseMatrix, LinearOperator, StateVector};
pub use problems::{Problem, ProblemKind};
pub use spectrum::SpectrumEstimate;
pub use timestep::{adaptive_loop, LoopOptions, RunOutput, RunStats};
