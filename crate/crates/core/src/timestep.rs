//! Adaptive time integration with the accuracy and cost step size
//! controllers.
//!
//! The accuracy controller scales the step by `(tol/e)^(1/(p+1))` where `p`
//! is the order of the integrator. The cost controller looks at how
//! the cost per unit time changed between the last two accepted steps and
//! nudges the step toward cheaper territory. The applied step is the
//! smaller of the two.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::integrators::{Integrator, LinearizedSystem, Scheme, StepOptions, StepResult};
use crate::linalg::{CountedField, JacobianMode, LinearOperator, StateVector};
use crate::problems::{Autonomized, Problem};
use crate::spectrum::{estimate, maybe_refresh, SpectrumEstimate, SpectrumPolicy};

pub const COST_ALPHA: f64 = 0.65241444;
pub const COST_BETA: f64 = 0.26862269;
pub const COST_LAMBDA: f64 = 1.37412002;
pub const COST_DELTA: f64 = 0.64446017;

pub const SAFETY: f64 = 0.9;
pub const MAX_GROWTH: f64 = 5.0;
pub const MAX_SHRINK: f64 = 0.2;

/// `dt · 0.9 · (tol/e)^(1/(p+1))`, limited to `[dt/5, 5·dt]`.
pub fn traditional_dt(dt: f64, e: f64, tol: f64, p: usize) -> f64 {
    let e = e.max(1e-16 * tol);
    let factor = SAFETY * (tol / e).powf(1.0 / (p as f64 + 1.0));
    dt * factor.clamp(MAX_SHRINK, MAX_GROWTH)
}

/// Cost controller step from the last two step sizes and their costs.
///
/// With `Δ = (ln cₙ − ln cₙ₋₁)/(ln Δtₙ − ln Δtₙ₋₁)` and
/// `s = exp(−α·tanh(β·Δ))`, the factor is `λ` for `1 ≤ s < λ`, `δ` for
/// `δ ≤ s < 1`, and `s` otherwise. Equal step sizes are treated as `Δ = 0`.
pub fn cost_dt(dt_n: f64, dt_prev: f64, cost_n: f64, cost_prev: f64) -> f64 {
    let delta = if dt_n == dt_prev {
        0.0
    } else {
        (cost_n.ln() - cost_prev.ln()) / (dt_n.ln() - dt_prev.ln())
    };
    dt_n * cost_factor(delta)
}

pub fn cost_factor(delta: f64) -> f64 {
    let s = (-COST_ALPHA * (COST_BETA * delta).tanh()).exp();
    if (1.0..COST_LAMBDA).contains(&s) {
        COST_LAMBDA
    } else if (COST_DELTA..1.0).contains(&s) {
        COST_DELTA
    } else {
        s
    }
}

/// What the cost controller treats as the cost of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostMeasure {
    /// Evaluations divided by the step size.
    #[default]
    PerUnitTime,
    /// Evaluations of the step.
    PerStep,
}

/// History kept by the cost controller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControllerState {
    pub dt_n: f64,
    pub dt_prev: f64,
    pub cost_n: f64,
    pub cost_prev: f64,
    pub accepted: usize,
}

impl ControllerState {
    pub fn record(&mut self, dt: f64, cost: f64) {
        self.dt_prev = self.dt_n;
        self.cost_prev = self.cost_n;
        self.dt_n = dt;
        self.cost_n = cost;
        self.accepted += 1;
    }

    pub fn have_history(&self) -> bool {
        self.accepted >= 2
    }

    /// Cost controller proposal, once two accepted steps are on record.
    pub fn proposal(&self) -> Option<f64> {
        self.have_history()
            .then(|| cost_dt(self.dt_n, self.dt_prev, self.cost_n, self.cost_prev))
    }
}

#[derive(Debug, Clone)]
pub struct LoopOptions {
    pub tol: f64,
    /// Overrides the problem's final time.
    pub t_final: Option<f64>,
    /// Initial step; defaults to `1e-5 · t_final`.
    pub dt_init: Option<f64>,
    /// Abort once the step falls below this fraction of `t_final`.
    pub dt_min_factor: f64,
    pub max_attempts: usize,
    pub use_cost_controller: bool,
    pub cost_measure: CostMeasure,
    pub jacobian: JacobianMode,
    pub spectrum: SpectrumPolicy,
    pub step: StepOptions,
}

impl LoopOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            t_final: None,
            dt_init: None,
            dt_min_factor: 1e-12,
            max_attempts: 1_000_000,
            use_cost_controller: true,
            cost_measure: CostMeasure::default(),
            jacobian: JacobianMode::default(),
            spectrum: SpectrumPolicy::default(),
            step: StepOptions::new(tol),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Every right-hand-side evaluation and Jacobian action, including
    /// rejected attempts and spectral estimation.
    pub rhs_evals: u64,
    pub leja_iters: usize,
    pub internal_leja_iters: usize,
    pub krylov_matvecs: usize,
    pub substeps: usize,
    pub spectrum_evals: u64,
    /// Attempts abandoned because an engine did not converge.
    pub engine_failures: usize,
    pub wall_time_s: f64,
}

/// One step attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    /// `None` when an engine failed before producing an estimate.
    pub err_est: Option<f64>,
    pub accepted: bool,
    pub rhs_evals: u64,
    /// Accuracy controller proposal after this attempt.
    pub dt_traditional: f64,
    /// Cost controller proposal after this attempt, when consulted.
    pub dt_cost: Option<f64>,
    /// Step size used for the next attempt (before truncation at the end).
    pub dt_next: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub u: StateVector,
    pub t: f64,
    pub stats: RunStats,
    pub trajectory: Vec<StepRecord>,
}

/// Sees every step attempt.
pub trait StepObserver {
    fn attempt(
        &mut self,
        sys: &LinearizedSystem,
        dt: f64,
        spectrum: Option<&SpectrumEstimate>,
        opts: &StepOptions,
        result: &Result<StepResult>,
    );
}

impl StepObserver for () {
    fn attempt(&mut self, _: &LinearizedSystem, _: f64, _: Option<&SpectrumEstimate>, _: &StepOptions, _: &Result<StepResult>) {}
}

pub fn adaptive_loop(
    problem: &dyn Problem,
    integrator: Integrator,
    scheme: Scheme,
    opts: &LoopOptions,
) -> Result<RunOutput> {
    adaptive_loop_observed(problem, integrator, scheme, opts, &mut ())
}

pub fn adaptive_loop_observed(
    problem: &dyn Problem,
    integrator: Integrator,
    scheme: Scheme,
    opts: &LoopOptions,
    observer: &mut dyn StepObserver,
) -> Result<RunOutput> {
    let start = Instant::now();
    if !integrator.supports(scheme) {
        return Err(Error::UnsupportedScheme {
            integrator: integrator.name(),
            scheme: scheme.name(),
        });
    }
    let t_final = opts.t_final.unwrap_or_else(|| problem.t_final());
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time must be positive, got {t_final}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut step_opts = opts.step.clone();
    step_opts.tol = opts.tol;

    let wrapped = Autonomized::new(problem);
    let field = CountedField::new(&wrapped);
    let mut u = wrapped.extend(&problem.initial_condition(), 0.0);
    let mut t = 0.0;
    let mut dt = opts.dt_init.unwrap_or(1e-5 * t_final);
    let dt_min = opts.dt_min_factor * t_final;
    let p = integrator.order();

    let mut stats = RunStats::default();
    let mut trajectory = Vec::new();
    let mut controller = ControllerState::default();
    let mut spectrum: Option<SpectrumEstimate> = None;
    let mut consecutive_rejections = 0usize;
    let mut sys: Option<LinearizedSystem> = None;

    while t < t_final {
        if trajectory.len() >= opts.max_attempts {
            return Err(Error::NonConvergence {
                engine: "timestep",
                iterations: trajectory.len(),
                detail: format!("attempt limit reached at t = {t}"),
            });
        }
        if dt < dt_min {
            return Err(Error::StepTooSmall { t, dt, dt_min });
        }
        let remaining = t_final - t;
        let last = dt >= remaining;
        let dt_try = if last { remaining } else { dt };

        let fresh = sys.is_none();
        let lin = match sys.take() {
            Some(s) => s,
            None => LinearizedSystem::new(&field, u.clone(), opts.jacobian)?,
        };
        let before = if fresh { 0 } else { lin.evals() };
        if scheme.uses_leja() {
            let est_before = lin.evals();
            spectrum = Some(match (&spectrum, fresh) {
                (None, _) => estimate(&lin, &opts.spectrum),
                (Some(est), true) => maybe_refresh(est, &lin, &opts.spectrum, 0),
                (Some(est), false) if consecutive_rejections == opts.spectrum.refresh_after_rejections => {
                    estimate(&lin, &opts.spectrum)
                }
                (Some(est), false) => *est,
            });
            stats.spectrum_evals += lin.evals() - est_before;
        }

        let result = integrator.step(scheme, &lin, dt_try, spectrum.as_ref(), &step_opts);
        observer.attempt(&lin, dt_try, spectrum.as_ref(), &step_opts, &result);
        let attempt_evals = lin.evals() - before;
        stats.rhs_evals += attempt_evals;

        match result {
            Err(Error::NonConvergence { .. }) => {
                stats.steps_rejected += 1;
                stats.engine_failures += 1;
                consecutive_rejections += 1;
                let next = 0.5 * dt_try;
                trajectory.push(StepRecord {
                    t,
                    dt: dt_try,
                    err_est: None,
                    accepted: false,
                    rhs_evals: attempt_evals,
                    dt_traditional: next,
                    dt_cost: None,
                    dt_next: next,
                });
                dt = next;
                sys = Some(lin);
            }
            Err(e) => return Err(e),
            Ok(res) => {
                stats.leja_iters += res.stats.leja_iterations();
                stats.internal_leja_iters += res.stats.internal_leja_iterations();
                stats.krylov_matvecs += res.stats.krylov_matvecs();
                stats.substeps += res.stats.substeps();
                let e = res.err_est;
                let dt_trad = traditional_dt(dt_try, e, opts.tol, p);
                if e <= opts.tol {
                    stats.steps_accepted += 1;
                    consecutive_rejections = 0;
                    t = if last { t_final } else { t + dt_try };
                    u = res.u_high;
                    let cost = match opts.cost_measure {
                        CostMeasure::PerUnitTime => attempt_evals as f64 / dt_try,
                        CostMeasure::PerStep => attempt_evals as f64,
                    };
                    controller.record(dt_try, cost);
                    let dt_cost = if opts.use_cost_controller { controller.proposal() } else { None };
                    let next = dt_cost.map_or(dt_trad, |c| c.min(dt_trad));
                    trajectory.push(StepRecord {
                        t,
                        dt: dt_try,
                        err_est: Some(e),
                        accepted: true,
                        rhs_evals: attempt_evals,
                        dt_traditional: dt_trad,
                        dt_cost,
                        dt_next: next,
                    });
                    dt = next;
                    sys = None;
                } else {
                    stats.steps_rejected += 1;
                    consecutive_rejections += 1;
                    trajectory.push(StepRecord {
                        t,
                        dt: dt_try,
                        err_est: Some(e),
                        accepted: false,
                        rhs_evals: attempt_evals,
                        dt_traditional: dt_trad,
                        dt_cost: None,
                        dt_next: dt_trad,
                    });
                    dt = dt_trad;
                    sys = Some(lin);
                }
            }
        }
    }

    debug_assert_eq!(stats.rhs_evals, field.evals());
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok(RunOutput {
        u: wrapped.physical(&u).to_vec(),
        t,
        stats,
        trajectory,
    })
}

/// Result of a constant-step integration.
#[derive(Debug, Clone)]
pub struct FixedStepOutput {
    pub u: StateVector,
    pub err_estimates: Vec<f64>,
    pub stats: RunStats,
}

/// Integrates to `t_final` in `steps` equal steps, ignoring the error
/// estimate.
pub fn fixed_step_run(
    problem: &dyn Problem,
    integrator: Integrator,
    scheme: Scheme,
    steps: usize,
    t_final: f64,
    opts: &LoopOptions,
) -> Result<FixedStepOutput> {
    let start = Instant::now();
    if steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let wrapped = Autonomized::new(problem);
    let field = CountedField::new(&wrapped);
    let mut u = wrapped.extend(&problem.initial_condition(), 0.0);
    let dt = t_final / steps as f64;
    let mut step_opts = opts.step.clone();
    step_opts.tol = opts.tol;
    let mut stats = RunStats::default();
    let mut err_estimates = Vec::with_capacity(steps);
    let mut spectrum: Option<SpectrumEstimate> = None;
    for _ in 0..steps {
        let lin = LinearizedSystem::new(&field, u, opts.jacobian)?;
        if scheme.uses_leja() {
            spectrum = Some(match &spectrum {
                None => estimate(&lin, &opts.spectrum),
                Some(est) => maybe_refresh(est, &lin, &opts.spectrum, 0),
            });
        }
        let res = integrator.step(scheme, &lin, dt, spectrum.as_ref(), &step_opts)?;
        stats.steps_accepted += 1;
        stats.leja_iters += res.stats.leja_iterations();
        stats.krylov_matvecs += res.stats.krylov_matvecs();
        stats.substeps += res.stats.substeps();
        stats.rhs_evals += lin.evals();
        err_estimates.push(res.err_est);
        u = res.u_high;
    }
    debug_assert_eq!(stats.rhs_evals, field.evals());
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok(FixedStepOutput {
        u: wrapped.physical(&u).to_vec(),
        err_estimates,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Semilinear, SemilinearForcing};

    #[test]
    fn traditional_examples() {
        let d = traditional_dt(0.1, 1e-4, 1e-6, 4);
        assert!((d - 0.1 * 0.9 * 0.01f64.powf(0.2)).abs() < 1e-15);
        assert!((d - 0.03583).abs() < 1e-5);
        assert!((traditional_dt(0.1, 1e-6, 1e-6, 3) - 0.09).abs() < 1e-15);
        assert_eq!(traditional_dt(0.1, 0.0, 1e-6, 3), 0.5);
        assert_eq!(traditional_dt(0.1, 1.0, 1e-12, 3), 0.1 * MAX_SHRINK);
    }

    #[test]
    fn cost_controller_cases() {
        assert!((cost_factor(0.0) - COST_LAMBDA).abs() < 1e-12);
        assert!((cost_dt(0.2, 0.2, 10.0, 30.0) - 0.2 * COST_LAMBDA).abs() < 1e-12);
        assert!((cost_factor(1e6) - (-COST_ALPHA).exp()).abs() < 1e-9);
        assert!(((-COST_ALPHA).exp() - 0.5207868489701596).abs() < 1e-15);
        // tanh(βΔ) = −ln(0.8)/α gives s = 0.8
        let delta = ((-(0.8f64).ln()) / COST_ALPHA).atanh() / COST_BETA;
        assert!((cost_factor(delta) - COST_DELTA).abs() < 1e-12);
        // negative Δ with s above λ passes s through
        let s = cost_factor(-50.0);
        assert!(s > COST_LAMBDA && (s - COST_ALPHA.exp()).abs() < 1e-6);
    }

    #[test]
    fn controller_history() {
        let mut c = ControllerState::default();
        assert_eq!(c.proposal(), None);
        c.record(0.1, 100.0);
        assert_eq!(c.proposal(), None);
        c.record(0.2, 100.0);
        let p = c.proposal().unwrap();
        assert!((p - 0.2 * COST_LAMBDA).abs() < 1e-12);
    }

    #[test]
    fn semilinear_run_is_accurate_and_consistent() {
        let p = Semilinear::new(32, SemilinearForcing::Discrete).unwrap();
        let opts = LoopOptions::new(1e-6);
        let out = adaptive_loop(&p, Integrator::Exprb43, Scheme::Kiops, &opts).unwrap();
        assert_eq!(out.t, 1.0);
        let exact = p.exact_solution(1.0).unwrap();
        let err = crate::linalg::dist_l2(&out.u, &exact).unwrap() / crate::linalg::norm_l2(&exact);
        assert!(err < 1e-5, "{err}");
        let mut t = 0.0;
        for r in out.trajectory.iter().filter(|r| r.accepted) {
            assert!(r.err_est.unwrap() <= 1e-6);
            t += r.dt;
            if let Some(c) = r.dt_cost {
                assert_eq!(r.dt_next, c.min(r.dt_traditional));
            }
        }
        assert!((t - 1.0).abs() < 1e-12);
        let attempts: u64 = out.trajectory.iter().map(|r| r.rhs_evals).sum();
        assert_eq!(attempts, out.stats.rhs_evals);
        for w in out.trajectory.windows(2) {
            if !w[0].accepted {
                assert!(w[1].dt < w[0].dt);
            }
        }
    }
}
