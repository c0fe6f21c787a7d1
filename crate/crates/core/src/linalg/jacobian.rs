use super::{norm_l2, EvalCounter, LinearOperator};
use crate::error::{Error, Result};

/// Autonomous right-hand side `u' = f(u)`.
pub trait VectorField {
    fn dim(&self) -> usize;

    fn eval(&self, u: &[f64], out: &mut [f64]);

    /// Exact Jacobian action `J(u)·v`, when the field knows it.
    ///
    /// Returns `false` if unavailable; callers then fall back to finite
    /// differences.
    fn jacobian_apply(&self, _u: &[f64], _v: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        (**self).eval(u, out)
    }
    fn jacobian_apply(&self, u: &[f64], v: &[f64], out: &mut [f64]) -> bool {
        (**self).jacobian_apply(u, v, out)
    }
}

/// Wraps a field and counts every evaluation.
///
/// Analytic Jacobian actions are charged at the same unit cost as an RHS
/// evaluation, so `evals()` is the cost measure regardless of how the
/// Jacobian is applied.
#[derive(Debug)]
pub struct CountedField<F> {
    inner: F,
    rhs: EvalCounter,
    jvp: EvalCounter,
}

impl<F: VectorField> CountedField<F> {
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            rhs: EvalCounter::new(),
            jvp: EvalCounter::new(),
        }
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn rhs_calls(&self) -> u64 {
        self.rhs.get()
    }

    pub fn jvp_calls(&self) -> u64 {
        self.jvp.get()
    }

    /// Total charged evaluations (RHS calls plus analytic Jacobian actions).
    pub fn evals(&self) -> u64 {
        self.rhs.get() + self.jvp.get()
    }
}

impl<F: VectorField> VectorField for CountedField<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, u: &[f64], out: &mut [f64]) {
        self.rhs.bump();
        self.inner.eval(u, out)
    }

    fn jacobian_apply(&self, u: &[f64], v: &[f64], out: &mut [f64]) -> bool {
        let ok = self.inner.jacobian_apply(u, v, out);
        if ok {
            self.jvp.bump();
        }
        ok
    }
}

fn fd_increment(u: &[f64], v_norm: f64) -> f64 {
    f64::EPSILON.sqrt() * (1.0 + norm_l2(u)) / v_norm
}

/// Forward-difference Jacobian action `(f(u + εv) − f(u))/ε`.
///
/// `f_u` may carry a cached `f(u)`, in which case a single new RHS
/// evaluation is charged.
pub fn fd_jacobian_apply(
    f: &dyn VectorField,
    u: &[f64],
    f_u: Option<&[f64]>,
    v: &[f64],
) -> Result<Vec<f64>> {
    super::check_len(u.len(), v.len())?;
    let v_norm = norm_l2(v);
    if v_norm == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let owned;
    let base = match f_u {
        Some(fu) => fu,
        None => {
            let mut tmp = vec![0.0; u.len()];
            f.eval(u, &mut tmp);
            owned = tmp;
            &owned
        }
    };
    let mut out = vec![0.0; u.len()];
    fd_into(f, u, base, v, v_norm, &mut out);
    if !super::all_finite(&out) {
        return Err(Error::NonFinite("finite-difference Jacobian action"));
    }
    Ok(out)
}

fn fd_into(f: &dyn VectorField, u: &[f64], f_u: &[f64], v: &[f64], v_norm: f64, out: &mut [f64]) {
    let eps = fd_increment(u, v_norm);
    let shifted: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + eps * b).collect();
    f.eval(&shifted, out);
    for (o, fu) in out.iter_mut().zip(f_u) {
        *o = (*o - fu) / eps;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Use the field's exact Jacobian action, falling back to finite
    /// differences where it has none.
    #[default]
    Analytic,
    FiniteDifference,
}

/// Matrix-free `J(u)` frozen at a linearization point.
pub struct JacobianOperator<'a> {
    field: &'a dyn VectorField,
    u: &'a [f64],
    f_u: &'a [f64],
    mode: JacobianMode,
    counter: EvalCounter,
}

impl<'a> JacobianOperator<'a> {
    pub fn new(field: &'a dyn VectorField, u: &'a [f64], f_u: &'a [f64], mode: JacobianMode) -> Self {
        Self {
            field,
            u,
            f_u,
            mode,
            counter: EvalCounter::new(),
        }
    }

    pub fn point(&self) -> &[f64] {
        self.u
    }
}

impl LinearOperator for JacobianOperator<'_> {
    fn dim(&self) -> usize {
        self.u.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.counter.bump();
        if self.mode == JacobianMode::Analytic && self.field.jacobian_apply(self.u, x, y) {
            return;
        }
        let x_norm = norm_l2(x);
        if x_norm == 0.0 {
            y.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        fd_into(self.field, self.u, self.f_u, x, x_norm, y);
    }

    fn evals(&self) -> u64 {
        self.counter.get()
    }
}
