//! Embedded exponential integrators and their engine groupings.
//!
//! Each step linearizes `u' = f(u)` at `uⁿ` as `f(u) = f(uⁿ) + J(u − uⁿ) +
//! R(u)` and combines φ-function actions of `JΔt` on `f(uⁿ)Δt` and on
//! nonlinear remainders. How the φ actions are batched depends on the
//! [`Scheme`]:
//!
//! - `Leja`: actions sharing an input vector run as one vertical Leja
//!   interpolation; the rest are interpolated one at a time.
//! - `Kiops`: shared-input actions run as one Krylov solve with
//!   intermediate outputs; stage sums of φ actions run as one augmented
//!   (horizontal) Krylov solve.
//! - `LeKry`: internal stages with vertical Leja, final stages with
//!   horizontal Krylov.

mod linearized;
mod methods;
mod stage;

pub use linearized::LinearizedSystem;
pub use methods::{
    step_epirk4s3, step_epirk4s3a, step_epirk5p1, step_exprb43, step_exprb53s3, EPIRK5P1_COEFFS,
    Epirk5p1Coefficients,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kiops::KiopsOptions;
use crate::leja::LejaSequence;
use crate::linalg::StateVector;
use crate::spectrum::SpectrumEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrator {
    Epirk4s3,
    Epirk4s3a,
    Epirk5p1,
    Exprb43,
    Exprb53s3,
}

impl Integrator {
    pub const ALL: [Integrator; 5] = [
        Integrator::Epirk4s3,
        Integrator::Epirk4s3a,
        Integrator::Epirk5p1,
        Integrator::Exprb43,
        Integrator::Exprb53s3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Integrator::Epirk4s3 => "epirk4s3",
            Integrator::Epirk4s3a => "epirk4s3a",
            Integrator::Epirk5p1 => "epirk5p1",
            Integrator::Exprb43 => "exprb43",
            Integrator::Exprb53s3 => "exprb53s3",
        }
    }

    /// Order of the propagated solution.
    pub fn order(self) -> usize {
        match self {
            Integrator::Epirk5p1 | Integrator::Exprb53s3 => 5,
            _ => 4,
        }
    }

    /// Order of the embedded solution; the error estimate behaves like
    /// `Δt^(q+1)`.
    pub fn embedded_order(self) -> usize {
        match self {
            Integrator::Epirk5p1 => 4,
            _ => 3,
        }
    }

    pub fn supports(self, scheme: Scheme) -> bool {
        scheme != Scheme::LeKry || !matches!(self, Integrator::Epirk5p1 | Integrator::Exprb43)
    }

    pub fn schemes(self) -> Vec<Scheme> {
        Scheme::ALL.into_iter().filter(|s| self.supports(*s)).collect()
    }

    /// One step of size `dt` from the linearization `sys`.
    ///
    /// `spectrum` is required whenever the scheme uses Leja interpolation.
    pub fn step(
        self,
        scheme: Scheme,
        sys: &LinearizedSystem,
        dt: f64,
        spectrum: Option<&SpectrumEstimate>,
        opts: &StepOptions,
    ) -> Result<StepResult> {
        if !self.supports(scheme) {
            return Err(Error::UnsupportedScheme {
                integrator: self.name(),
                scheme: scheme.name(),
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
        }
        if scheme != Scheme::Kiops && spectrum.is_none() {
            return Err(Error::InvalidArgument(format!(
                "{} needs a spectral estimate",
                scheme.name()
            )));
        }
        match self {
            Integrator::Epirk4s3 => step_epirk4s3(sys, dt, scheme, spectrum, opts),
            Integrator::Epirk4s3a => step_epirk4s3a(sys, dt, scheme, spectrum, opts),
            Integrator::Epirk5p1 => step_epirk5p1(sys, dt, scheme, spectrum, opts),
            Integrator::Exprb43 => step_exprb43(sys, dt, scheme, spectrum, opts),
            Integrator::Exprb53s3 => step_exprb53s3(sys, dt, scheme, spectrum, opts),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Integrator::ALL
            .into_iter()
            .find(|i| i.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown integrator {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Leja,
    Kiops,
    LeKry,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Leja, Scheme::Kiops, Scheme::LeKry];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Leja => "leja",
            Scheme::Kiops => "kiops",
            Scheme::LeKry => "lekry",
        }
    }

    pub fn uses_leja(self) -> bool {
        self != Scheme::Kiops
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme {s:?}")))
    }
}

/// Engine used for a φ action that either engine may evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Leja,
    Kiops,
}

#[derive(Debug, Clone)]
pub struct StepOptions {
    /// Step tolerance on the embedded error estimate.
    pub tol: f64,
    /// Engine tolerance as a fraction of `tol`.
    pub engine_tol_factor: f64,
    pub kiops: KiopsOptions,
    /// Engine for the fourth-order φ₄ correction under LeKry.
    pub lekry_error_engine: Engine,
    pub leja: &'static LejaSequence,
}

impl StepOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            engine_tol_factor: 0.1,
            kiops: KiopsOptions::default(),
            lekry_error_engine: Engine::Leja,
            leja: LejaSequence::shared(),
        }
    }

    pub fn engine_tol(&self) -> f64 {
        self.tol * self.engine_tol_factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Leja,
    Kiops,
    Remainder,
}

/// Work done by one engine call or remainder evaluation within a step.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub label: &'static str,
    pub kind: GroupKind,
    /// Right-hand-side evaluations and Jacobian actions.
    pub rhs_evals: u64,
    /// Leja polynomial terms, or Krylov operator applications.
    pub iterations: usize,
    pub substeps: usize,
    /// Leja terms needed by the internal-stage coefficients of a vertical
    /// group (zero when it has none).
    pub internal_iterations: usize,
    pub freeze_iterations: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub groups: Vec<GroupStats>,
}

impl StepStats {
    pub fn rhs_evals(&self) -> u64 {
        self.groups.iter().map(|g| g.rhs_evals).sum()
    }

    pub fn leja_iterations(&self) -> usize {
        self.sum_kind(GroupKind::Leja, |g| g.iterations)
    }

    pub fn internal_leja_iterations(&self) -> usize {
        self.sum_kind(GroupKind::Leja, |g| g.internal_iterations)
    }

    pub fn krylov_matvecs(&self) -> usize {
        self.sum_kind(GroupKind::Kiops, |g| g.iterations)
    }

    pub fn substeps(&self) -> usize {
        self.sum_kind(GroupKind::Kiops, |g| g.substeps)
    }

    /// Number of φ-engine calls.
    pub fn engine_calls(&self) -> usize {
        self.groups.iter().filter(|g| g.kind != GroupKind::Remainder).count()
    }

    fn sum_kind(&self, kind: GroupKind, f: impl Fn(&GroupStats) -> usize) -> usize {
        self.groups.iter().filter(|g| g.kind == kind).map(f).sum()
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    /// Propagated (higher-order) solution.
    pub u_high: StateVector,
    /// Embedded lower-order solution.
    pub u_low: StateVector,
    /// `‖u_high − u_low‖₂`
    pub err_est: f64,
    pub stats: StepStats,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lekry_availability() {
        assert!(Integrator::Epirk4s3.supports(Scheme::LeKry));
        assert!(Integrator::Epirk4s3a.supports(Scheme::LeKry));
        assert!(Integrator::Exprb53s3.supports(Scheme::LeKry));
        assert!(!Integrator::Epirk5p1.supports(Scheme::LeKry));
        assert!(!Integrator::Exprb43.supports(Scheme::LeKry));
        let combos: usize = Integrator::ALL.iter().map(|i| i.schemes().len()).sum();
        assert_eq!(combos, 13);
    }

    #[test]
    fn names_round_trip() {
        for i in Integrator::ALL {
            assert_eq!(i.name().parse::<Integrator>().unwrap(), i);
        }
        for s in Scheme::ALL {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("rk4".parse::<Integrator>().is_err());
        assert!("EPIRK4S3".parse::<Integrator>().is_ok());
    }

    #[test]
    fn orders() {
        let orders: Vec<(usize, usize)> = Integrator::ALL.iter().map(|i| (i.order(), i.embedded_order())).collect();
        assert_eq!(orders, vec![(4, 3), (4, 3), (5, 4), (4, 3), (5, 3)]);
    }
}
