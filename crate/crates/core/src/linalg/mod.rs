//! Vector kernels, the matrix-free operator abstraction and small dense
//! matrix functions.

mod dense;
mod jacobian;

use std::cell::Cell;

pub use dense::{
    dense_expm, dense_phi, dense_phi_all, dense_phi_combination, phi_scalar, DenseMatrix,
};
pub use jacobian::{
    fd_jacobian_apply, CountedField, JacobianMode, JacobianOperator, VectorField,
};

use crate::error::{Error, Result};

/// Flat solution payload over the grid.
pub type StateVector = Vec<f64>;

/// Unnormalized Euclidean norm.
pub fn norm_l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum())
}

/// `y <- alpha * x + y`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) -> Result<()> {
    check_len(y.len(), x.len())?;
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
    Ok(())
}

/// Euclidean distance between two vectors of equal length.
pub fn dist_l2(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}

/// Linear combination `Σ c_k x_k` of equally sized vectors.
pub(crate) fn lincomb(terms: &[(f64, &[f64])]) -> StateVector {
    let n = terms.first().map_or(0, |t| t.1.len());
    let mut out = vec![0.0; n];
    for (c, x) in terms {
        debug_assert_eq!(x.len(), n);
        if *c == 0.0 {
            continue;
        }
        for (o, xi) in out.iter_mut().zip(x.iter()) {
            *o += c * xi;
        }
    }
    out
}

/// Monotone count of underlying evaluations.
#[derive(Debug, Default)]
pub struct EvalCounter(Cell<u64>);

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bump(&self) {
        self.0.set(self.0.get() + 1);
    }

    pub fn get(&self) -> u64 {
        self.0.get()
    }
}

/// A linear map applied without forming its matrix.
///
/// `evals` reports how many applications have been charged so far and never
/// decreases. Instances carry interior counters and must not be shared
/// between concurrently running computations.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn evals(&self) -> u64;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn evals(&self) -> u64 {
        (**self).evals()
    }
}

/// Explicit matrix wrapped as an operator, used by tests and oracles.
#[derive(Debug)]
pub struct DenseOperator {
    matrix: DenseMatrix,
    counter: EvalCounter,
}

impl DenseOperator {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            counter: EvalCounter::new(),
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.counter.bump();
        let n = self.dim();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self.matrix[(i, j)] * xj;
            }
            *yi = acc;
        }
    }

    fn evals(&self) -> u64 {
        self.counter.get()
    }
}
