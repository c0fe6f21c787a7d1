//! Real-spectrum bounds of the Jacobian for Leja interpolation.
//!
//! The spectrum is assumed to lie in `[alpha, 0]` on the negative real axis.
//! Its magnitude is estimated by power iteration and inflated by a safety
//! factor; the interpolation interval is then mapped onto `[-2, 2]` through
//! the midpoint `c` and the quarter-width `gamma`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{norm_l2, LinearOperator};

/// Floor on `gamma` so nearly vanishing operators still give a valid scaling.
pub const GAMMA_MIN: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEstimate {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub gamma: f64,
    pub safety: f64,
    pub age_steps: usize,
    /// Set when the power iteration that produced this estimate ran out of
    /// iterations.
    pub stale: bool,
}

/// Settings for power iteration and the refresh schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPolicy {
    pub safety: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub refresh_every: usize,
    pub refresh_after_rejections: usize,
    pub seed: u64,
    /// Extra inflation applied on top of `safety` when power iteration did
    /// not converge.
    pub stale_inflation: f64,
}

impl Default for SpectrumPolicy {
    fn default() -> Self {
        Self {
            safety: 1.1,
            tol: 1e-2,
            max_iter: 1000,
            refresh_every: 50,
            refresh_after_rejections: 2,
            seed: 0x5eed,
            stale_inflation: 1.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// Estimate of the largest eigenvalue magnitude.
    pub magnitude: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration for the dominant eigenvalue magnitude.
///
/// Uses the norm ratio `‖J y‖/‖y‖`, which also settles for a dominant
/// complex-conjugate pair. The start vector is a fixed pseudo-random vector
/// drawn from `seed`, so results are reproducible.
pub fn power_iterate(op: &dyn LinearOperator, tol: f64, max_iter: usize, seed: u64) -> PowerIteration {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ny = norm_l2(&y);
    y.iter_mut().for_each(|v| *v /= ny);
    let mut z = vec![0.0; n];
    let mut previous = 0.0;
    for it in 1..=max_iter.max(1) {
        op.apply(&y, &mut z);
        let nz = norm_l2(&z);
        if nz == 0.0 || !nz.is_finite() {
            return PowerIteration {
                magnitude: 0.0,
                iterations: it,
                converged: nz == 0.0,
            };
        }
        if it > 1 && (nz - previous).abs() <= tol * nz {
            return PowerIteration {
                magnitude: nz,
                iterations: it,
                converged: true,
            };
        }
        previous = nz;
        for (yi, zi) in y.iter_mut().zip(&z) {
            *yi = zi / nz;
        }
    }
    PowerIteration {
        magnitude: previous,
        iterations: max_iter,
        converged: false,
    }
}

/// Builds the interpolation interval `[−safety·|λ|, 0]`.
pub fn make_estimate(lambda: f64, safety: f64) -> SpectrumEstimate {
    let alpha = -safety * lambda.abs();
    let beta = 0.0;
    SpectrumEstimate {
        alpha,
        beta,
        c: 0.5 * (alpha + beta),
        gamma: ((beta - alpha).abs() / 4.0).max(GAMMA_MIN),
        safety,
        age_steps: 0,
        stale: false,
    }
}

/// Estimates the spectrum from scratch.
pub fn estimate(op: &dyn LinearOperator, policy: &SpectrumPolicy) -> SpectrumEstimate {
    let pi = power_iterate(op, policy.tol, policy.max_iter, policy.seed);
    let safety = if pi.converged {
        policy.safety
    } else {
        policy.safety * policy.stale_inflation
    };
    let mut est = make_estimate(pi.magnitude, safety);
    est.stale = !pi.converged;
    est
}

/// Refreshes the estimate when it has aged out or when the caller reports
/// repeated step rejections; otherwise only ages it by one step.
pub fn maybe_refresh(
    est: &SpectrumEstimate,
    op: &dyn LinearOperator,
    policy: &SpectrumPolicy,
    consecutive_rejections: usize,
) -> SpectrumEstimate {
    let forced = policy.refresh_after_rejections > 0
        && consecutive_rejections >= policy.refresh_after_rejections;
    if est.age_steps >= policy.refresh_every || forced {
        estimate(op, policy)
    } else {
        SpectrumEstimate {
            age_steps: est.age_steps + 1,
            ..*est
        }
    }
}
