//! Engine calls with per-call accounting.

use super::{GroupKind, GroupStats, LinearizedSystem, StepOptions};
use crate::error::{Error, Result};
use crate::kiops::kiops;
use crate::leja::leja_interpolate_vertical;
use crate::linalg::{LinearOperator, StateVector};
use crate::spectrum::SpectrumEstimate;

pub(super) struct Stage<'s, 'a> {
    sys: &'s LinearizedSystem<'a>,
    dt: f64,
    spectrum: Option<&'s SpectrumEstimate>,
    opts: &'s StepOptions,
    pub groups: Vec<GroupStats>,
}

impl<'s, 'a> Stage<'s, 'a> {
    pub fn new(
        sys: &'s LinearizedSystem<'a>,
        dt: f64,
        spectrum: Option<&'s SpectrumEstimate>,
        opts: &'s StepOptions,
    ) -> Self {
        Self {
            sys,
            dt,
            spectrum,
            opts,
            groups: Vec::new(),
        }
    }

    pub fn u(&self) -> &[f64] {
        self.sys.u()
    }

    /// `f(uⁿ)·Δt`
    pub fn f_dt(&self) -> StateVector {
        self.sys.f_u().iter().map(|x| x * self.dt).collect()
    }

    pub fn remainder(&mut self, label: &'static str, k: &[f64]) -> Result<StateVector> {
        let before = self.sys.evals();
        let r = self.sys.remainder(k)?;
        self.groups.push(GroupStats {
            label,
            kind: GroupKind::Remainder,
            rhs_evals: self.sys.evals() - before,
            iterations: 0,
            substeps: 0,
            internal_iterations: 0,
            freeze_iterations: Vec::new(),
        });
        Ok(r)
    }

    /// `φ_l(c_i·Δt·J)b` for each `c_i` by vertical Leja interpolation; the
    /// first `internal` coefficients belong to internal stages.
    pub fn leja_vertical(
        &mut self,
        label: &'static str,
        order: usize,
        coeffs: &[f64],
        b: &[f64],
        internal: usize,
    ) -> Result<Vec<StateVector>> {
        let est = self
            .spectrum
            .ok_or_else(|| Error::InvalidArgument("Leja interpolation needs a spectral estimate".into()))?;
        let before = self.sys.evals();
        let out = leja_interpolate_vertical(self.sys, b, order, coeffs, self.dt, est, self.opts.engine_tol(), self.opts.leja)?;
        let internal_iterations = out.freeze_iterations[..internal].iter().copied().max().unwrap_or(0);
        self.groups.push(GroupStats {
            label,
            kind: GroupKind::Leja,
            rhs_evals: self.sys.evals() - before,
            iterations: out.iterations,
            substeps: 0,
            internal_iterations,
            freeze_iterations: out.freeze_iterations,
        });
        Ok(out.values)
    }

    pub fn leja(&mut self, label: &'static str, order: usize, b: &[f64]) -> Result<StateVector> {
        Ok(self.leja_vertical(label, order, &[1.0], b, 0)?.remove(0))
    }

    /// `φ_l(c_i·Δt·J)b` for each `c_i` from one Krylov solve with
    /// intermediate outputs.
    pub fn kiops_vertical(
        &mut self,
        label: &'static str,
        order: usize,
        coeffs: &[f64],
        b: &[f64],
    ) -> Result<Vec<StateVector>> {
        let c_max = coeffs.iter().copied().fold(0.0, f64::max);
        let c_min = coeffs.iter().copied().fold(f64::INFINITY, f64::min);
        if !(c_min > 0.0) {
            return Err(Error::InvalidArgument("vertical coefficients must be positive".into()));
        }
        let mut taus: Vec<f64> = coeffs.iter().map(|c| c / c_max).collect();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        let zero = vec![0.0; b.len()];
        let mut vs: Vec<&[f64]> = vec![&zero; order + 1];
        vs[order] = b;
        // outputs carry a factor τ^l that is divided out afterwards; tighten
        // the tolerance accordingly
        let tol = self.opts.engine_tol() * (c_min / c_max).powi(order as i32);
        let before = self.sys.evals();
        let (ws, stats) = kiops(self.sys, &vs, c_max * self.dt, &taus, tol, &self.opts.kiops)?;
        self.groups.push(GroupStats {
            label,
            kind: GroupKind::Kiops,
            rhs_evals: self.sys.evals() - before,
            iterations: stats.matvecs,
            substeps: stats.substeps,
            internal_iterations: 0,
            freeze_iterations: Vec::new(),
        });
        Ok(coeffs
            .iter()
            .map(|c| {
                let tau = c / c_max;
                let k = taus.iter().position(|t| *t == tau).expect("listed output");
                let s = tau.powi(order as i32).recip();
                ws[k].iter().map(|x| x * s).collect()
            })
            .collect())
    }

    /// `Σ_j φ_j(Δt·J)v_j` from one augmented Krylov solve.
    pub fn kiops_horizontal(&mut self, label: &'static str, vs: &[&[f64]]) -> Result<StateVector> {
        let before = self.sys.evals();
        let (mut ws, stats) = kiops(self.sys, vs, self.dt, &[1.0], self.opts.engine_tol(), &self.opts.kiops)?;
        let w = ws.pop().expect("one output");
        self.groups.push(GroupStats {
            label,
            kind: GroupKind::Kiops,
            rhs_evals: self.sys.evals() - before,
            iterations: stats.matvecs,
            substeps: stats.substeps,
            internal_iterations: 0,
            freeze_iterations: Vec::new(),
        });
        Ok(w)
    }

    /// Single `φ_l(Δt·J)b` by Krylov.
    pub fn kiops_single(&mut self, label: &'static str, order: usize, b: &[f64]) -> Result<StateVector> {
        let zero = vec![0.0; b.len()];
        let mut vs: Vec<&[f64]> = vec![&zero; order + 1];
        vs[order] = b;
        self.kiops_horizontal(label, &vs)
    }
}
