//! Linear autonomous system `u' = A·u` with an explicit matrix.

use super::grid::{Boundary, Grid};
use super::Problem;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, StateVector};

#[derive(Debug, Clone)]
pub struct LinearProblem {
    matrix: DenseMatrix,
    initial: StateVector,
    t_final: f64,
    grid: Grid,
}

impl LinearProblem {
    pub fn new(matrix: DenseMatrix, initial: StateVector, t_final: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        crate::linalg::check_len(matrix.nrows(), initial.len())?;
        let grid = Grid::new(1, matrix.nrows().max(2), 0.0, 1.0, Boundary::Dirichlet)?;
        Ok(Self {
            matrix,
            initial,
            t_final,
            grid,
        })
    }

    /// Second-difference Laplacian with zero Dirichlet values on `[0, 1]`,
    /// started from `sin(πx) + ½ sin(4πx)`.
    pub fn laplacian_1d(n: usize, t_final: f64) -> Result<Self> {
        let grid = Grid::new(1, n, 0.0, 1.0, Boundary::Dirichlet)?;
        let s = 1.0 / (grid.h * grid.h);
        let matrix = DenseMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => -2.0 * s,
            1 => s,
            _ => 0.0,
        });
        use std::f64::consts::PI;
        let initial = grid.sample_1d(|x| (PI * x).sin() + 0.5 * (4.0 * PI * x).sin());
        Ok(Self {
            matrix,
            initial,
            t_final,
            grid,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl Problem for LinearProblem {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn rhs(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|j| self.matrix[(i, j)] * u[j]).sum();
        }
    }

    fn jvp(&self, t: f64, _u: &[f64], v: &[f64], out: &mut [f64]) {
        self.rhs(t, v, out)
    }

    fn initial_condition(&self) -> StateVector {
        self.initial.clone()
    }

    fn t_final(&self) -> f64 {
        self.t_final
    }
}
