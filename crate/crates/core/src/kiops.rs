//! Krylov evaluation of `Σ_j φ_j(Δt·A)v_j` on the augmented operator.
//!
//! The vectors `v_1..v_p` are folded into an `(n + p)`-dimensional operator
//! `Ã = [[A, B], [0, K]]` whose exponential applied to `[v_0; e_p]` carries
//! the whole combination in its leading `n` entries. The exponential is
//! advanced in substeps over `τ ∈ [0, 1]` on a Krylov basis built by
//! incompletely orthogonalized Arnoldi, adapting both the substep length
//! and the basis dimension from the a-posteriori error estimate.

use crate::error::{Error, Result};
use crate::linalg::{check_len, dense_expm, norm_l2, DenseMatrix, EvalCounter, LinearOperator};

/// Operator `Ã = [[s·A, B], [0, K]]` with `B = [b_1 .. b_p]` stored column by
/// column and `K` the `p × p` upshift.
pub struct AugmentedSystem<'a> {
    op: &'a dyn LinearOperator,
    scale: f64,
    cols: Vec<Vec<f64>>,
    counter: EvalCounter,
}

impl<'a> AugmentedSystem<'a> {
    /// Augmented system for the combination `v_0..v_p`; `B` holds
    /// `v_p, .., v_1` so that `exp(Ã)[v_0; e_p]` yields `Σ φ_j(A)v_j`.
    pub fn new(op: &'a dyn LinearOperator, vs: &[&[f64]]) -> Result<Self> {
        let n = op.dim();
        for v in vs {
            check_len(n, v.len())?;
        }
        let cols = vs.iter().skip(1).rev().map(|v| v.to_vec()).collect();
        Ok(Self::from_columns(op, 1.0, cols))
    }

    /// Raw constructor: `cols[k]` multiplies augmented entry `k`.
    pub fn from_columns(op: &'a dyn LinearOperator, scale: f64, cols: Vec<Vec<f64>>) -> Self {
        Self {
            op,
            scale,
            cols,
            counter: EvalCounter::new(),
        }
    }

    pub fn base_dim(&self) -> usize {
        self.op.dim()
    }

    pub fn p(&self) -> usize {
        self.cols.len()
    }
}

impl LinearOperator for AugmentedSystem<'_> {
    fn dim(&self) -> usize {
        self.op.dim() + self.cols.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.counter.bump();
        let n = self.op.dim();
        let p = self.cols.len();
        let (x_top, x_aug) = x.split_at(n);
        let (y_top, y_aug) = y.split_at_mut(n);
        self.op.apply(x_top, y_top);
        if self.scale != 1.0 {
            y_top.iter_mut().for_each(|v| *v *= self.scale);
        }
        for (coef, col) in x_aug.iter().zip(&self.cols) {
            if *coef != 0.0 {
                for (yi, ci) in y_top.iter_mut().zip(col) {
                    *yi += coef * ci;
                }
            }
        }
        if p > 0 {
            y_aug[..p - 1].copy_from_slice(&x_aug[1..]);
            y_aug[p - 1] = 0.0;
        }
    }

    fn evals(&self) -> u64 {
        self.counter.get()
    }
}

/// Applies `sys` to an extended vector, checking its length.
pub fn augmented_apply(sys: &AugmentedSystem, w: &[f64]) -> Result<Vec<f64>> {
    check_len(sys.dim(), w.len())?;
    let mut out = vec![0.0; w.len()];
    sys.apply(w, &mut out);
    Ok(out)
}

/// Arnoldi basis and Hessenberg entries, grown one vector at a time.
#[derive(Debug, Clone)]
pub struct KrylovState {
    /// Orthonormal (up to the orthogonalization window) basis vectors.
    pub basis: Vec<Vec<f64>>,
    /// Row-major `(m_max + 1) × (m_max + 1)` Hessenberg storage.
    h: DenseMatrix,
    /// Current dimension.
    pub m: usize,
    pub iop_len: usize,
    pub breakdown: bool,
}

impl KrylovState {
    fn new(start: Vec<f64>, capacity: usize, iop_len: usize) -> Self {
        let mut basis = Vec::with_capacity(capacity + 1);
        basis.push(start);
        Self {
            basis,
            h: DenseMatrix::zeros(capacity + 1, capacity + 1),
            m: 0,
            iop_len: iop_len.max(1),
            breakdown: false,
        }
    }

    /// Adds the next basis vector. Returns the norm of the orthogonalized
    /// residual; on breakdown (`is_breakdown(norm)` holds) the vector is
    /// discarded and `m` still advances.
    fn step(&mut self, op: &dyn LinearOperator, is_breakdown: impl Fn(f64, &DenseMatrix, usize) -> bool) -> f64 {
        let j = self.m;
        let mut w = vec![0.0; op.dim()];
        op.apply(&self.basis[j], &mut w);
        let lo = (j + 1).saturating_sub(self.iop_len);
        for i in lo..=j {
            let hij: f64 = self.basis[i].iter().zip(&w).map(|(a, b)| a * b).sum();
            self.h[(i, j)] = hij;
            for (wk, vk) in w.iter_mut().zip(&self.basis[i]) {
                *wk -= hij * vk;
            }
        }
        let nrm = norm_l2(&w);
        self.m = j + 1;
        if is_breakdown(nrm, &self.h, j) {
            self.breakdown = true;
            return nrm;
        }
        self.h[(j + 1, j)] = nrm;
        w.iter_mut().for_each(|x| *x /= nrm);
        if self.basis.len() == j + 1 {
            self.basis.push(w);
        } else {
            self.basis[j + 1] = w;
        }
        nrm
    }

    /// Leading `m × m` Hessenberg block.
    pub fn hessenberg(&self) -> DenseMatrix {
        self.h.view((0, 0), (self.m, self.m)).into_owned()
    }

    /// Subdiagonal entry `h_{m+1,m}` (zero after breakdown).
    pub fn residual_norm(&self) -> f64 {
        if self.m == 0 || self.breakdown {
            0.0
        } else {
            self.h[(self.m, self.m - 1)]
        }
    }
}

/// Standalone IOP-Arnoldi: builds up to `m` basis vectors from `start`,
/// orthogonalizing against the last `iop_len` vectors only.
pub fn arnoldi_iop(op: &dyn LinearOperator, start: &[f64], m: usize, iop_len: usize) -> Result<KrylovState> {
    check_len(op.dim(), start.len())?;
    let beta = norm_l2(start);
    if beta == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    if !beta.is_finite() {
        return Err(Error::NonFinite("Arnoldi start vector"));
    }
    let v0 = start.iter().map(|x| x / beta).collect();
    let mut st = KrylovState::new(v0, m, iop_len);
    while st.m < m {
        st.step(op, |nrm, h, j| {
            let col: f64 = (0..=j).map(|i| h[(i, j)] * h[(i, j)]).sum();
            let scale = h.view((0, 0), (j + 1, j + 1)).norm().max(col.sqrt());
            nrm <= 1e-14 * scale
        });
        if st.breakdown {
            break;
        }
    }
    Ok(st)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KiopsOptions {
    pub m_init: usize,
    pub m_min: usize,
    pub m_max: usize,
    pub iop_len: usize,
    /// Smallest admissible substep as a fraction of the full interval.
    pub tau_min: f64,
}

impl Default for KiopsOptions {
    fn default() -> Self {
        Self {
            m_init: 10,
            m_min: 10,
            m_max: 128,
            iop_len: 2,
            tau_min: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KiopsStats {
    /// Accepted substeps.
    pub substeps: usize,
    pub rejections: usize,
    /// Operator applications (Arnoldi steps).
    pub matvecs: usize,
    pub final_m: usize,
}

/// `Σ_{j=0}^{p} φ_j(Δt·A)v_j` with the `Δt^j` factors already inside `v_j`.
pub fn kiops_eval(op: &dyn LinearOperator, vs: &[&[f64]], dt: f64, tol: f64) -> Result<(Vec<f64>, KiopsStats)> {
    let (mut out, stats) = kiops(op, vs, dt, &[1.0], tol, &KiopsOptions::default())?;
    Ok((out.pop().expect("one output"), stats))
}

/// `w(τ) = Σ_j τ^j φ_j(τ·Δt·A)v_j` at every `τ` in `tau_out` (increasing,
/// within `(0, 1]`, last entry `1`).
pub fn kiops(
    op: &dyn LinearOperator,
    vs: &[&[f64]],
    dt: f64,
    tau_out: &[f64],
    tol: f64,
    opts: &KiopsOptions,
) -> Result<(Vec<Vec<f64>>, KiopsStats)> {
    let n = op.dim();
    if vs.is_empty() {
        return Err(Error::InvalidArgument("kiops needs at least v_0".into()));
    }
    for v in vs {
        check_len(n, v.len())?;
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be finite and >= 0, got {dt}")));
    }
    if tau_out.is_empty()
        || tau_out.windows(2).any(|w| w[0] > w[1])
        || tau_out.iter().any(|t| !(*t > 0.0 && *t <= 1.0))
        || *tau_out.last().unwrap() != 1.0
    {
        return Err(Error::InvalidArgument(
            "output times must increase within (0, 1] and end at 1".into(),
        ));
    }
    if opts.m_min == 0 || opts.m_min > opts.m_max {
        return Err(Error::InvalidArgument("need 0 < m_min <= m_max".into()));
    }

    let mut stats = KiopsStats::default();
    if dt == 0.0 {
        // every φ_j(0) term is scaled by a power of τ·Δt = 0 except v_0
        return Ok((vec![vs[0].to_vec(); tau_out.len()], stats));
    }

    let zero = vec![0.0; n];
    let coeff_vs: Vec<&[f64]> = if vs.len() == 1 { vec![&zero] } else { vs[1..].to_vec() };
    let p = coeff_vs.len();

    // max over components of Σ_k |v_k(i)|
    let norm_u = (0..n)
        .map(|i| coeff_vs.iter().map(|v| v[i].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let (nu, mu) = if norm_u > 0.0 && norm_u.is_finite() {
        let ex = norm_u.log2().ceil();
        (2f64.powf(-ex), 2f64.powf(ex))
    } else {
        (1.0, 1.0)
    };
    let cols: Vec<Vec<f64>> = coeff_vs
        .iter()
        .rev()
        .map(|v| v.iter().map(|x| nu * x).collect())
        .collect();
    let sys = AugmentedSystem::from_columns(op, dt, cols);
    let ext = n + p;

    let m_max = opts.m_max;
    let m_min = opts.m_min;
    let mut m = opts.m_init.clamp(m_min, m_max);
    let tau_end = 1.0f64;
    let (gamma, gamma_mmax) = (0.9, 0.6);
    let delta = 1.4;

    let mut outputs: Vec<Option<Vec<f64>>> = vec![None; tau_out.len()];
    let mut next_out = 0;
    let mut w_now = vs[0].to_vec();
    let mut tau_now = 0.0f64;
    let mut tau = tau_end;
    let mut krylov: Option<(KrylovState, f64)> = None;
    let mut ireject = 0usize;
    let mut old_m: Option<usize> = None;
    let mut old_tau = f64::NAN;
    let mut omega = f64::NAN;
    let mut order = 1.0f64;
    let mut kest = 2.0f64;
    let mut order_old = true;
    let mut kest_old = true;

    while tau_now < tau_end {
        if tau < opts.tau_min * tau_end {
            return Err(Error::NonConvergence {
                engine: "kiops",
                iterations: stats.matvecs,
                detail: format!("substep {tau:e} fell below the minimum"),
            });
        }
        let (st, beta) = krylov.get_or_insert_with(|| {
            let mut start = vec![0.0; ext];
            start[..n].copy_from_slice(&w_now);
            for k in 0..p - 1 {
                let i = (p - 1 - k) as i32;
                start[n + k] = tau_now.powi(i) / factorial(i as usize) * mu;
            }
            start[n + p - 1] = mu;
            let beta = norm_l2(&start);
            start.iter_mut().for_each(|x| *x /= beta);
            (KrylovState::new(start, m_max, opts.iop_len), beta)
        });
        let beta = *beta;
        while st.m < m && !st.breakdown {
            st.step(&sys, |nrm, _, _| nrm < tol);
        }
        stats.matvecs = sys.evals() as usize;
        let j = st.m;
        let happy = st.breakdown;

        // (j+1)-square matrix whose exponential also yields the φ_1 column
        // used by the error estimate
        let mut hx = DenseMatrix::zeros(j + 1, j + 1);
        hx.view_mut((0, 0), (j, j)).copy_from(&st.h.view((0, 0), (j, j)));
        hx[(0, j)] = 1.0;
        let f = dense_expm(&(hx * tau))?;

        let m_new;
        let tau_new;
        if happy {
            omega = 0.0;
            m_new = m;
            tau_new = (tau_end - (tau_now + tau)).min(tau);
        } else {
            let nrm = st.residual_norm();
            let err = (beta * nrm * f[(j - 1, j)]).abs();
            let old_omega = omega;
            omega = tau_end * err / (tau * tol);
            if old_m == Some(m) && tau != old_tau && ireject >= 1 {
                order = ((omega / old_omega).ln() / (tau / old_tau).ln()).max(1.0);
                order_old = false;
            } else if order_old || ireject == 0 {
                order_old = true;
                order = j as f64 / 4.0;
            } else {
                order_old = true;
            }
            match old_m {
                Some(om) if om != m && tau == old_tau && ireject >= 1 => {
                    kest = (omega / old_omega).powf(1.0 / (om as f64 - m as f64)).max(1.1);
                    kest_old = false;
                }
                _ if kest_old || ireject == 0 => {
                    kest_old = true;
                    kest = 2.0;
                }
                _ => kest_old = true,
            }
            if !order.is_finite() {
                order = j as f64 / 4.0;
            }
            if !kest.is_finite() {
                kest = 2.0;
            }
            let remaining = if omega > delta {
                tau_end - tau_now
            } else {
                tau_end - (tau_now + tau)
            };
            let same_tau = remaining.min(tau);
            let tau_opt = tau * (gamma / omega).powf(1.0 / order);
            let tau_opt = remaining.min((tau / 5.0).max((5.0 * tau).min(tau_opt)));
            let m_opt = (j as f64 + (omega / gamma).ln() / kest.ln()).ceil();
            let lo = (0.75 * m as f64).floor();
            let hi = (4.0 / 3.0 * m as f64).ceil();
            let m_opt = lo.max(m_opt.min(hi)).clamp(m_min as f64, m_max as f64) as usize;
            if j == m_max {
                if omega > delta {
                    m_new = j;
                    let t = tau * (gamma_mmax / omega).powf(1.0 / order);
                    tau_new = (tau_end - tau_now).min((tau / 5.0).max(t));
                } else {
                    tau_new = tau_opt;
                    m_new = m;
                }
            } else {
                m_new = m_opt;
                tau_new = same_tau;
            }
        }

        if omega <= delta {
            let next_t = tau_now + tau;
            let v_top = |coef: &[f64]| -> Vec<f64> {
                let mut out = vec![0.0; n];
                for (c, v) in coef.iter().zip(&st.basis) {
                    let c = beta * c;
                    for (o, vi) in out.iter_mut().zip(&v[..n]) {
                        *o += c * vi;
                    }
                }
                out
            };
            while next_out < tau_out.len() && tau_out[next_out] < next_t {
                let hj = st.h.view((0, 0), (j, j)).into_owned();
                let f2 = dense_expm(&(hj * (tau_out[next_out] - tau_now)))?;
                let col: Vec<f64> = f2.column(0).iter().copied().collect();
                outputs[next_out] = Some(v_top(&col));
                next_out += 1;
            }
            let col: Vec<f64> = (0..j).map(|i| f[(i, 0)]).collect();
            w_now = v_top(&col);
            if w_now.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("kiops substep"));
            }
            tau_now = if tau_end - next_t <= 1e-12 * tau_end { tau_end } else { next_t };
            stats.substeps += 1;
            stats.rejections += ireject;
            ireject = 0;
            krylov = None;
        } else {
            ireject += 1;
        }
        old_tau = tau;
        tau = tau_new;
        old_m = Some(m);
        m = m_new;
        stats.final_m = j;
    }
    stats.matvecs = sys.evals() as usize;
    for o in outputs.iter_mut().skip(next_out) {
        *o = Some(w_now.clone());
    }
    Ok((outputs.into_iter().map(|o| o.expect("filled")).collect(), stats))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
