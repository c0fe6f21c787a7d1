use std::cell::Cell;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, check_len, JacobianMode, JacobianOperator, LinearOperator, StateVector, VectorField};

/// Linearization of the vector field at the start of a step: the state
/// `uⁿ`, `f(uⁿ)` and the action of `J = ∂f/∂u (uⁿ)`.
///
/// Acts as the Jacobian operator itself. Every right-hand-side evaluation
/// and Jacobian action made through it is counted.
pub struct LinearizedSystem<'a> {
    field: &'a dyn VectorField,
    u: StateVector,
    f_u: StateVector,
    mode: JacobianMode,
    rhs_calls: Cell<u64>,
    jac_calls: Cell<u64>,
}

impl<'a> LinearizedSystem<'a> {
    /// Evaluates `f(u)` (one charged evaluation).
    pub fn new(field: &'a dyn VectorField, u: StateVector, mode: JacobianMode) -> Result<Self> {
        check_len(field.dim(), u.len())?;
        let mut f_u = vec![0.0; u.len()];
        field.eval(&u, &mut f_u);
        if !all_finite(&f_u) {
            return Err(Error::NonFinite("right-hand side at step start"));
        }
        Ok(Self {
            field,
            u,
            f_u,
            mode,
            rhs_calls: Cell::new(1),
            jac_calls: Cell::new(0),
        })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn f_u(&self) -> &[f64] {
        &self.f_u
    }

    pub fn field(&self) -> &dyn VectorField {
        self.field
    }

    pub fn mode(&self) -> JacobianMode {
        self.mode
    }

    pub fn rhs_calls(&self) -> u64 {
        self.rhs_calls.get()
    }

    pub fn jacobian_calls(&self) -> u64 {
        self.jac_calls.get()
    }

    /// Counted evaluation of `f(k)`.
    pub fn rhs(&self, k: &[f64]) -> Result<StateVector> {
        check_len(self.u.len(), k.len())?;
        self.rhs_calls.set(self.rhs_calls.get() + 1);
        let mut out = vec![0.0; k.len()];
        self.field.eval(k, &mut out);
        Ok(out)
    }

    /// `R(k) = f(k) − f(uⁿ) − J(k − uⁿ)`; one evaluation plus one Jacobian
    /// action. `R(uⁿ)` is exactly zero.
    pub fn remainder(&self, k: &[f64]) -> Result<StateVector> {
        let f_k = self.rhs(k)?;
        let diff: Vec<f64> = k.iter().zip(&self.u).map(|(a, b)| a - b).collect();
        let mut jd = vec![0.0; diff.len()];
        self.apply(&diff, &mut jd);
        let out: StateVector = f_k
            .iter()
            .zip(&self.f_u)
            .zip(&jd)
            .map(|((fk, fu), j)| fk - fu - j)
            .collect();
        if !all_finite(&out) {
            return Err(Error::NonFinite("nonlinear remainder"));
        }
        Ok(out)
    }
}

impl LinearOperator for LinearizedSystem<'_> {
    fn dim(&self) -> usize {
        self.u.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.jac_calls.set(self.jac_calls.get() + 1);
        JacobianOperator::new(self.field, &self.u, &self.f_u, self.mode).apply(x, y);
    }

    /// Right-hand-side evaluations plus Jacobian actions.
    fn evals(&self) -> u64 {
        self.rhs_calls.get() + self.jac_calls.get()
    }
}
