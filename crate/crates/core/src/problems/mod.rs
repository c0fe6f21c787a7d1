//! Stiff PDE test problems discretized in space.
//!
//! Every problem supplies its right-hand side and an analytic Jacobian
//! action. Problems whose right-hand side depends explicitly on time are
//! integrated through [`Autonomized`], which appends the clock as an extra
//! state component.

mod grid;
mod linear;
mod reaction;
mod semilinear;

pub use grid::{Boundary, Grid};
pub use linear::LinearProblem;
pub use reaction::{Adr, AllenCahn, Brusselator, BrusselatorForm, GrayScott};
pub use semilinear::{semilinear_exact, semilinear_forcing_continuum, Semilinear, SemilinearForcing};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{StateVector, VectorField};

pub trait Problem: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn grid(&self) -> &Grid;
    fn rhs(&self, t: f64, u: &[f64], out: &mut [f64]);
    /// `out = ∂f/∂u (t, u) · v`
    fn jvp(&self, t: f64, u: &[f64], v: &[f64], out: &mut [f64]);
    fn is_autonomous(&self) -> bool {
        true
    }
    /// `out = ∂f/∂t (t, u)`; zero for autonomous problems.
    fn time_derivative(&self, _t: f64, _u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
    }
    fn initial_condition(&self) -> StateVector;
    fn t_final(&self) -> f64;
    fn exact_solution(&self, _t: f64) -> Option<StateVector> {
        None
    }
}

/// Presents a problem as an autonomous vector field.
///
/// Non-autonomous problems gain a trailing clock component with `dt/dt = 1`,
/// so the state is `[u; t]`. Autonomous problems pass through unchanged.
pub struct Autonomized<'a> {
    problem: &'a dyn Problem,
    clock: bool,
}

impl<'a> Autonomized<'a> {
    pub fn new(problem: &'a dyn Problem) -> Self {
        Self {
            problem,
            clock: !problem.is_autonomous(),
        }
    }

    pub fn problem(&self) -> &dyn Problem {
        self.problem
    }

    pub fn has_clock(&self) -> bool {
        self.clock
    }

    /// Extended state at time `t`.
    pub fn extend(&self, u: &[f64], t: f64) -> StateVector {
        let mut out = u.to_vec();
        if self.clock {
            out.push(t);
        }
        out
    }

    /// Physical part of an extended state.
    pub fn physical<'b>(&self, state: &'b [f64]) -> &'b [f64] {
        &state[..self.problem.dim()]
    }

    fn split<'b>(&self, state: &'b [f64]) -> (&'b [f64], f64) {
        let n = self.problem.dim();
        let t = if self.clock { state[n] } else { 0.0 };
        (&state[..n], t)
    }
}

impl VectorField for Autonomized<'_> {
    fn dim(&self) -> usize {
        self.problem.dim() + usize::from(self.clock)
    }

    fn eval(&self, state: &[f64], out: &mut [f64]) {
        let n = self.problem.dim();
        let (u, t) = self.split(state);
        self.problem.rhs(t, u, &mut out[..n]);
        if self.clock {
            out[n] = 1.0;
        }
    }

    fn jacobian_apply(&self, state: &[f64], v: &[f64], out: &mut [f64]) -> bool {
        let n = self.problem.dim();
        let (u, t) = self.split(state);
        self.problem.jvp(t, u, &v[..n], &mut out[..n]);
        if self.clock {
            let s = v[n];
            if s != 0.0 {
                let mut ft = vec![0.0; n];
                self.problem.time_derivative(t, u, &mut ft);
                for (o, f) in out[..n].iter_mut().zip(&ft) {
                    *o += s * f;
                }
            }
            out[n] = 0.0;
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Adr,
    AllenCahn,
    Brusselator,
    GrayScott,
    Semilinear,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::Adr,
        ProblemKind::AllenCahn,
        ProblemKind::Brusselator,
        ProblemKind::GrayScott,
        ProblemKind::Semilinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Adr => "adr",
            ProblemKind::AllenCahn => "allen_cahn",
            ProblemKind::Brusselator => "brusselator",
            ProblemKind::GrayScott => "gray_scott",
            ProblemKind::Semilinear => "semilinear",
        }
    }

    /// Admissible values of the diffusion parameter.
    pub fn parameter_menu(self) -> &'static [f64] {
        match self {
            ProblemKind::Adr => &[0.1, 0.01],
            ProblemKind::AllenCahn | ProblemKind::Brusselator | ProblemKind::GrayScott => &[1e-1, 1e-2, 1e-3],
            ProblemKind::Semilinear => &[1.0],
        }
    }

    pub fn t_final(self) -> f64 {
        match self {
            ProblemKind::Adr => 0.01,
            ProblemKind::GrayScott => 0.1,
            _ => 1.0,
        }
    }

    /// Builds the problem with diffusion parameter `param` on an `n`-point
    /// (per dimension) grid.
    pub fn build(self, param: f64, n: usize) -> Result<Box<dyn Problem>> {
        if !self.parameter_menu().iter().any(|p| (p - param).abs() <= 1e-12 * p.abs()) {
            return Err(Error::InvalidArgument(format!(
                "parameter {param} not offered for {}; choose one of {:?}",
                self.name(),
                self.parameter_menu()
            )));
        }
        Ok(match self {
            ProblemKind::Adr => Box::new(Adr::new(param, -10.0, 100.0, n)?),
            ProblemKind::AllenCahn => Box::new(AllenCahn::new(param, n)?),
            ProblemKind::Brusselator => Box::new(Brusselator::new(param, n, BrusselatorForm::Printed)?),
            ProblemKind::GrayScott => Box::new(GrayScott::new(param, param, n)?),
            ProblemKind::Semilinear => Box::new(Semilinear::new(n, SemilinearForcing::Discrete)?),
        })
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fd_jacobian_apply;

    struct Fd<'a>(&'a dyn Problem, f64);

    impl VectorField for Fd<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn eval(&self, u: &[f64], out: &mut [f64]) {
            self.0.rhs(self.1, u, out)
        }
    }

    fn check_jvp(p: &dyn Problem) {
        let u: Vec<f64> = p
            .initial_condition()
            .iter()
            .enumerate()
            .map(|(k, x)| x + 0.05 * ((k % 7) as f64 - 3.0) / 3.0)
            .collect();
        let v: Vec<f64> = (0..p.dim()).map(|k| ((k * 13 % 17) as f64 - 8.0) / 8.0).collect();
        let mut analytic = vec![0.0; p.dim()];
        p.jvp(0.3, &u, &v, &mut analytic);
        let fd = fd_jacobian_apply(&Fd(p, 0.3), &u, None, &v).unwrap();
        let scale = analytic.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let err = analytic.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-5 * scale, "{}: {err} (scale {scale})", p.name());
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        for kind in ProblemKind::ALL {
            let p = kind.build(kind.parameter_menu()[0], 12).unwrap();
            check_jvp(p.as_ref());
        }
        check_jvp(&Brusselator::new(0.01, 10, BrusselatorForm::Standard).unwrap());
    }

    #[test]
    fn names_round_trip_and_menu_is_enforced() {
        for kind in ProblemKind::ALL {
            assert_eq!(kind.name().parse::<ProblemKind>().unwrap(), kind);
        }
        assert_eq!("Gray-Scott".parse::<ProblemKind>().unwrap(), ProblemKind::GrayScott);
        assert!("heat".parse::<ProblemKind>().is_err());
        assert!(ProblemKind::Adr.build(0.5, 16).is_err());
        assert!(ProblemKind::Brusselator.build(1e-3, 16).is_ok());
        let finals: Vec<f64> = ProblemKind::ALL.iter().map(|k| k.t_final()).collect();
        assert_eq!(finals, vec![0.01, 1.0, 1.0, 0.1, 1.0]);
    }

    #[test]
    fn clock_augmentation() {
        let p = Semilinear::new(8, SemilinearForcing::Discrete).unwrap();
        let field = Autonomized::new(&p);
        assert!(field.has_clock());
        assert_eq!(field.dim(), 9);
        let state = field.extend(&p.initial_condition(), 0.25);
        let mut out = vec![0.0; 9];
        field.eval(&state, &mut out);
        assert_eq!(out[8], 1.0);
        let mut direct = vec![0.0; 8];
        p.rhs(0.25, &p.initial_condition(), &mut direct);
        assert_eq!(&out[..8], direct.as_slice());

        // d/ds f(u, t + s) at s = 0 through the clock column
        let mut e = vec![0.0; 9];
        e[8] = 1.0;
        let mut col = vec![0.0; 9];
        assert!(field.jacobian_apply(&state, &e, &mut col));
        let mut ft = vec![0.0; 8];
        p.time_derivative(0.25, &p.initial_condition(), &mut ft);
        assert_eq!(&col[..8], ft.as_slice());
        assert_eq!(col[8], 0.0);

        let a = Adr::new(0.1, -10.0, 100.0, 6).unwrap();
        let field = Autonomized::new(&a);
        assert!(!field.has_clock());
        assert_eq!(field.dim(), 36);
    }
}
