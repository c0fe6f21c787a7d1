//! One-dimensional semilinear problem with a known solution.
//!
//! `u_t = u_xx + ∫₀¹ u dx + Φ(x, t)` on `[0, 1]` with zero boundary values;
//! `Φ` is chosen so that `u = x(1−x)eᵗ`.

use super::grid::{Boundary, Grid};
use super::Problem;
use crate::error::Result;
use crate::linalg::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SemilinearForcing {
    /// Built with the discrete integral of `x(1−x)`, so the semi-discrete
    /// system reproduces `x(1−x)eᵗ` exactly at the grid points.
    #[default]
    Discrete,
    /// Built with the exact integral `1/6`; the grid solution then differs
    /// from `x(1−x)eᵗ` by the quadrature error.
    Continuum,
}

pub fn semilinear_exact(x: f64, t: f64) -> f64 {
    x * (1.0 - x) * t.exp()
}

/// `eᵗ(x(1−x) + 2 − 1/6)`
pub fn semilinear_forcing_continuum(x: f64, t: f64) -> f64 {
    t.exp() * (x * (1.0 - x) + 2.0 - 1.0 / 6.0)
}

#[derive(Debug, Clone)]
pub struct Semilinear {
    pub forcing: SemilinearForcing,
    grid: Grid,
    /// `x(1−x) + 2 − ∫x(1−x)` per grid point, times `eᵗ` at runtime.
    profile: Vec<f64>,
}

impl Semilinear {
    pub fn new(n: usize, forcing: SemilinearForcing) -> Result<Self> {
        let grid = Grid::new(1, n, 0.0, 1.0, Boundary::Dirichlet)?;
        let bump = grid.sample_1d(|x| x * (1.0 - x));
        let integral = match forcing {
            SemilinearForcing::Discrete => trapezoid(&grid, &bump),
            SemilinearForcing::Continuum => 1.0 / 6.0,
        };
        let profile = bump.iter().map(|b| b + 2.0 - integral).collect();
        Ok(Self { forcing, grid, profile })
    }
}

/// Composite trapezoid over `[0, 1]` with zero boundary values.
fn trapezoid(grid: &Grid, u: &[f64]) -> f64 {
    grid.h * u.iter().sum::<f64>()
}

impl Problem for Semilinear {
    fn name(&self) -> &'static str {
        "semilinear"
    }

    fn dim(&self) -> usize {
        self.grid.n
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn rhs(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let q = trapezoid(&self.grid, u);
        let et = t.exp();
        for (o, p) in out.iter_mut().zip(&self.profile) {
            *o = q + et * p;
        }
        self.grid.add_laplacian(1.0, u, out);
    }

    fn jvp(&self, _t: f64, _u: &[f64], v: &[f64], out: &mut [f64]) {
        let q = trapezoid(&self.grid, v);
        out.iter_mut().for_each(|o| *o = q);
        self.grid.add_laplacian(1.0, v, out);
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    fn time_derivative(&self, t: f64, _u: &[f64], out: &mut [f64]) {
        let et = t.exp();
        for (o, p) in out.iter_mut().zip(&self.profile) {
            *o = et * p;
        }
    }

    fn initial_condition(&self) -> StateVector {
        self.grid.sample_1d(|x| semilinear_exact(x, 0.0))
    }

    fn t_final(&self) -> f64 {
        1.0
    }

    fn exact_solution(&self, t: f64) -> Option<StateVector> {
        Some(self.grid.sample_1d(|x| semilinear_exact(x, t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forcing_and_exact_values() {
        assert!((semilinear_forcing_continuum(0.5, 0.0) - 25.0 / 12.0).abs() < 1e-15);
        assert!((semilinear_exact(0.5, 1.0) - 0.25 * std::f64::consts::E).abs() < 1e-15);
        assert!((semilinear_exact(0.5, 1.0) - 0.67957).abs() < 1e-5);
    }

    #[test]
    fn discrete_forcing_makes_exact_solution_a_fixed_trajectory() {
        let p = Semilinear::new(31, SemilinearForcing::Discrete).unwrap();
        for t in [0.0, 0.4, 1.0] {
            let u = p.exact_solution(t).unwrap();
            let mut out = vec![0.0; 31];
            p.rhs(t, &u, &mut out);
            // u_t = u for the exact solution
            let err = out.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "t={t}: {err}");
        }
    }

    #[test]
    fn continuum_residual_is_second_order() {
        let residual = |n: usize| {
            let p = Semilinear::new(n, SemilinearForcing::Continuum).unwrap();
            let mut worst = 0.0f64;
            for t in [0.0, 0.5, 1.0] {
                let u = p.exact_solution(t).unwrap();
                let mut out = vec![0.0; n];
                p.rhs(t, &u, &mut out);
                worst = out.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
            }
            worst
        };
        let (r1, r2) = (residual(31), residual(63));
        assert!(r1 < 1e-3);
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn time_derivative_matches_difference_quotient() {
        let p = Semilinear::new(9, SemilinearForcing::Discrete).unwrap();
        let u = p.initial_condition();
        let (mut a, mut b, mut d) = (vec![0.0; 9], vec![0.0; 9], vec![0.0; 9]);
        let eps = 1e-6;
        p.rhs(0.3 + eps, &u, &mut a);
        p.rhs(0.3 - eps, &u, &mut b);
        p.time_derivative(0.3, &u, &mut d);
        for k in 0..9 {
            assert!(((a[k] - b[k]) / (2.0 * eps) - d[k]).abs() < 1e-7);
        }
    }
}
