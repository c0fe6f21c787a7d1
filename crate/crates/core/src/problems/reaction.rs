//! Two-dimensional reaction-diffusion(-advection) problems.

use super::grid::{Boundary, Grid};
use super::Problem;
use crate::error::{Error, Result};
use crate::linalg::StateVector;

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {value}")))
    }
}

/// `α∇²u + β(∂ₓu + ∂ᵧu) + γ·u(1−u)(u−½)` on `[0,1]²`, no-flux boundaries.
#[derive(Debug, Clone)]
pub struct Adr {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    grid: Grid,
}

impl Adr {
    pub fn new(alpha: f64, beta: f64, gamma: f64, n: usize) -> Result<Self> {
        check_positive("alpha", alpha)?;
        Ok(Self {
            alpha,
            beta,
            gamma,
            grid: Grid::new(2, n, 0.0, 1.0, Boundary::Neumann)?,
        })
    }
}

impl Problem for Adr {
    fn name(&self) -> &'static str {
        "adr"
    }

    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn rhs(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(u) {
            *o = self.gamma * x * (1.0 - x) * (x - 0.5);
        }
        self.grid.add_laplacian(self.alpha, u, out);
        self.grid.add_gradient_sum(self.beta, u, out);
    }

    fn jvp(&self, _t: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        for ((o, x), vi) in out.iter_mut().zip(u).zip(v) {
            *o = self.gamma * (-3.0 * x * x + 3.0 * x - 0.5) * vi;
        }
        self.grid.add_laplacian(self.alpha, v, out);
        self.grid.add_gradient_sum(self.beta, v, out);
    }

    fn initial_condition(&self) -> StateVector {
        self.grid.sample_2d(|x, y| {
            let b = x * y * (1.0 - x) * (1.0 - y);
            256.0 * b * b + 0.3
        })
    }

    fn t_final(&self) -> f64 {
        0.01
    }
}

/// `α∇²u + u − u³` on `[−1,1]²`, no-flux boundaries.
#[derive(Debug, Clone)]
pub struct AllenCahn {
    pub alpha: f64,
    grid: Grid,
}

impl AllenCahn {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        check_positive("alpha", alpha)?;
        Ok(Self {
            alpha,
            grid: Grid::new(2, n, -1.0, 1.0, Boundary::Neumann)?,
        })
    }
}

impl Problem for AllenCahn {
    fn name(&self) -> &'static str {
        "allen_cahn"
    }

    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn rhs(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(u) {
            *o = x - x * x * x;
        }
        self.grid.add_laplacian(self.alpha, u, out);
    }

    fn jvp(&self, _t: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        for ((o, x), vi) in out.iter_mut().zip(u).zip(v) {
            *o = (1.0 - 3.0 * x * x) * vi;
        }
        self.grid.add_laplacian(self.alpha, v, out);
    }

    fn initial_condition(&self) -> StateVector {
        use std::f64::consts::PI;
        self.grid
            .sample_2d(|x, y| 0.1 + 0.1 * (2.0 * PI * x).cos() * (2.0 * PI * y).cos())
    }

    fn t_final(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BrusselatorForm {
    /// `uv² − 4u + 1` and `−u²v + 3u`.
    #[default]
    Printed,
    /// Classical `u²v − 4u + 1` and `−u²v + 3u`.
    Standard,
}

/// Brusselator on `[0,1]²` with no-flux boundaries; state is `[u; v]`.
#[derive(Debug, Clone)]
pub struct Brusselator {
    pub alpha: f64,
    pub form: BrusselatorForm,
    grid: Grid,
}

impl Brusselator {
    pub fn new(alpha: f64, n: usize, form: BrusselatorForm) -> Result<Self> {
        check_positive("alpha", alpha)?;
        Ok(Self {
            alpha,
            form,
            grid: Grid::new(2, n, 0.0, 1.0, Boundary::Neumann)?,
        })
    }
}

impl Problem for Brusselator {
    fn name(&self) -> &'static str {
        "brusselator"
    }

    fn dim(&self) -> usize {
        2 * self.grid.len()
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn rhs(&self, _t: f64, state: &[f64], out: &mut [f64]) {
        let m = self.grid.len();
        let (u, v) = state.split_at(m);
        let (du, dv) = out.split_at_mut(m);
        for k in 0..m {
            let (a, b) = (u[k], v[k]);
            du[k] = match self.form {
                BrusselatorForm::Printed => a * b * b - 4.0 * a + 1.0,
                BrusselatorForm::Standard => a * a * b - 4.0 * a + 1.0,
            };
            dv[k] = -a * a * b + 3.0 * a;
        }
        self.grid.add_laplacian(self.alpha, u, du);
        self.grid.add_laplacian(self.alpha, v, dv);
    }

    fn jvp(&self, _t: f64, state: &[f64], w: &[f64], out: &mut [f64]) {
        let m = self.grid.len();
        let (u, v) = state.split_at(m);
        let (wu, wv) = w.split_at(m);
        let (du, dv) = out.split_at_mut(m);
        for k in 0..m {
            let (a, b) = (u[k], v[k]);
            du[k] = match self.form {
                BrusselatorForm::Printed => (b * b - 4.0) * wu[k] + 2.0 * a * b * wv[k],
                BrusselatorForm::Standard => (2.0 * a * b - 4.0) * wu[k] + a * a * wv[k],
            };
            dv[k] = (3.0 - 2.0 * a * b) * wu[k] - a * a * wv[k];
        }
        self.grid.add_laplacian(self.alpha, wu, du);
        self.grid.add_laplacian(self.alpha, wv, dv);
    }

    fn initial_condition(&self) -> StateVector {
        let mut out = self.grid.sample_2d(|_, y| 2.0 + 0.25 * y);
        out.extend(self.grid.sample_2d(|x, _| 1.0 + 0.8 * x));
        out
    }

    fn t_final(&self) -> f64 {
        1.0
    }
}

/// Gray–Scott on the periodic unit square; state is `[u; v]`.
#[derive(Debug, Clone)]
pub struct GrayScott {
    pub alpha_u: f64,
    pub alpha_v: f64,
    pub a: f64,
    pub b: f64,
    grid: Grid,
}

impl GrayScott {
    pub fn new(alpha_u: f64, alpha_v: f64, n: usize) -> Result<Self> {
        check_positive("alpha_u", alpha_u)?;
        check_positive("alpha_v", alpha_v)?;
        Ok(Self {
            alpha_u,
            alpha_v,
            a: 0.04,
            b: 0.06,
            grid: Grid::new(2, n, 0.0, 1.0, Boundary::Periodic)?,
        })
    }
}

impl Problem for GrayScott {
    fn name(&self) -> &'static str {
        "gray_scott"
    }

    fn dim(&self) -> usize {
        2 * self.grid.len()
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn rhs(&self, _t: f64, state: &[f64], out: &mut [f64]) {
        let m = self.grid.len();
        let (u, v) = state.split_at(m);
        let (du, dv) = out.split_at_mut(m);
        for k in 0..m {
            let uvv = u[k] * v[k] * v[k];
            du[k] = -uvv + self.a * (1.0 - u[k]);
            dv[k] = uvv - (self.a + self.b) * v[k];
        }
        self.grid.add_laplacian(self.alpha_u, u, du);
        self.grid.add_laplacian(self.alpha_v, v, dv);
    }

    fn jvp(&self, _t: f64, state: &[f64], w: &[f64], out: &mut [f64]) {
        let m = self.grid.len();
        let (u, v) = state.split_at(m);
        let (wu, wv) = w.split_at(m);
        let (du, dv) = out.split_at_mut(m);
        for k in 0..m {
            let vv = v[k] * v[k];
            let uv2 = 2.0 * u[k] * v[k];
            du[k] = (-vv - self.a) * wu[k] - uv2 * wv[k];
            dv[k] = vv * wu[k] + (uv2 - self.a - self.b) * wv[k];
        }
        self.grid.add_laplacian(self.alpha_u, wu, du);
        self.grid.add_laplacian(self.alpha_v, wv, dv);
    }

    fn initial_condition(&self) -> StateVector {
        let mut out = self.grid.sample_2d(|x, y| {
            1.0 - (-150.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp()
        });
        out.extend(
            self.grid
                .sample_2d(|x, y| (-150.0 * ((x - 0.5).powi(2) + 2.0 * (y - 0.5).powi(2))).exp()),
        );
        out
    }

    fn t_final(&self) -> f64 {
        0.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rhs_of(p: &dyn Problem, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        p.rhs(0.0, u, &mut out);
        out
    }

    fn all_close(v: &[f64], x: f64) -> bool {
        v.iter().all(|y| (y - x).abs() < 1e-12)
    }

    #[test]
    fn adr_pointwise_values() {
        let p = Adr::new(0.1, -10.0, 100.0, 9).unwrap();
        assert!(all_close(&rhs_of(&p, &vec![0.3; 81]), -4.2));
        assert!(all_close(&rhs_of(&p, &vec![0.0; 81]), 0.0));
        let ic = p.initial_condition();
        assert!((ic[4 * 9 + 4] - 1.3).abs() < 1e-14);
        assert!((ic[0] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn adr_diffusion_on_cosine_mode() {
        use std::f64::consts::PI;
        // α-term only: switch off advection and reaction
        let p = Adr::new(0.1, 0.0, 0.0, 65).unwrap();
        let u = p.grid().sample_2d(|x, y| (PI * x).cos() * (PI * y).cos());
        let out = rhs_of(&p, &u);
        let err = out
            .iter()
            .zip(&u)
            .map(|(o, x)| (o + 2.0 * 0.1 * PI * PI * x).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn allen_cahn_values() {
        let p = AllenCahn::new(0.01, 8).unwrap();
        assert!(all_close(&rhs_of(&p, &vec![1.0; 64]), 0.0));
        assert!(all_close(&rhs_of(&p, &vec![-1.0; 64]), 0.0));
        assert!(all_close(&rhs_of(&p, &vec![0.5; 64]), 0.375));
        assert!((p.initial_condition()[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn brusselator_values() {
        let p = Brusselator::new(1e-3, 6, BrusselatorForm::Printed).unwrap();
        let mut s = vec![1.0; 36];
        s.extend(vec![3.0; 36]);
        let out = rhs_of(&p, &s);
        assert!(all_close(&out[..36], 6.0));
        assert!(all_close(&out[36..], 0.0));
        let mut s = vec![0.0; 36];
        s.extend(vec![2.5; 36]);
        let out = rhs_of(&p, &s);
        assert!(all_close(&out[..36], 1.0));
        assert!(all_close(&out[36..], 0.0));

        let std = Brusselator::new(1e-3, 6, BrusselatorForm::Standard).unwrap();
        let mut s = vec![1.0; 36];
        s.extend(vec![3.0; 36]);
        let out = rhs_of(&std, &s);
        assert!(all_close(&out[..36], 0.0));
        assert!(all_close(&out[36..], 0.0));

        let ic = p.initial_condition();
        // last point of u sits at y = 1, first point of v at x = 0
        assert!((ic[35] - 2.25).abs() < 1e-15);
        assert!((ic[36] - 1.0).abs() < 1e-15);
        assert!((ic[71] - 1.8).abs() < 1e-15);
    }

    #[test]
    fn gray_scott_values() {
        let p = GrayScott::new(1e-3, 1e-3, 8).unwrap();
        let mut s = vec![1.0; 64];
        s.extend(vec![0.0; 64]);
        assert!(all_close(&rhs_of(&p, &s), 0.0));
        let mut s = vec![0.5; 64];
        s.extend(vec![0.25; 64]);
        let out = rhs_of(&p, &s);
        assert!(all_close(&out[..64], -0.01125));
        assert!(all_close(&out[64..], 0.03125 - 0.1 * 0.25));
        let ic = p.initial_condition();
        // (0.5, 0.5) is grid point (4, 4)
        assert!(ic[4 * 8 + 4].abs() < 1e-15);
        assert!((ic[64 + 4 * 8 + 4] - 1.0).abs() < 1e-15);
    }
}
