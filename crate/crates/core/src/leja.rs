//! Polynomial interpolation of `φ_l(h·J)b` at real Leja points.
//!
//! The Jacobian's spectrum is mapped from `[alpha, 0]` onto `[-2, 2]`
//! through `z = c + γξ`. The Newton basis vectors obey
//! `y_{m+1} = (J·y_m)/γ − (c/γ + ξ_m)·y_m`, and each interpolant adds
//! `d_m·y_m` until `|d_m|·‖y_m‖` falls below the requested tolerance.
//!
//! In vertical mode several coefficient-scaled functions `φ_l(c_i·h·J)b`
//! share the same basis sequence; each keeps its own divided differences
//! and freezes independently.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{dense_phi_combination, norm_l2, DenseMatrix, LinearOperator};
use crate::spectrum::SpectrumEstimate;

pub const DEFAULT_POINTS: usize = 400;
/// Candidates per unit length of `[-2, 2]`; 25 000 gives a 100 001-point grid.
pub const DEFAULT_GRID_DENSITY: usize = 25_000;

/// Initial number of divided differences; grown by doubling on demand.
const INITIAL_COEFFS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct LejaSequence {
    points: Vec<f64>,
}

impl LejaSequence {
    /// Greedy Leja sequence on a uniform candidate grid of `[-2, 2]`,
    /// starting at `2`.
    ///
    /// Each new point maximizes `Π_j |ξ − ξ_j|` over the grid; ties go to
    /// the smaller candidate. Log-products are kept per candidate so the
    /// cost is `O(count · grid)`.
    pub fn generate(count: usize, grid_density: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("need at least one Leja point".into()));
        }
        let grid_len = 4 * grid_density.max(1) + 1;
        let step = 4.0 / (grid_len - 1) as f64;
        let grid: Vec<f64> = (0..grid_len).map(|i| -2.0 + step * i as f64).collect();
        let mut log_prod = vec![0.0f64; grid_len];
        let mut points = Vec::with_capacity(count);
        let mut next = 2.0;
        loop {
            points.push(next);
            if points.len() == count {
                break;
            }
            let mut best = f64::NEG_INFINITY;
            let mut best_idx = 0;
            for (i, (lp, x)) in log_prod.iter_mut().zip(&grid).enumerate() {
                *lp += (x - next).abs().ln();
                if *lp > best {
                    best = *lp;
                    best_idx = i;
                }
            }
            next = grid[best_idx];
        }
        Ok(Self { points })
    }

    /// Process-wide default sequence (400 points on the 100 001-point grid).
    pub fn shared() -> &'static LejaSequence {
        static SEQ: OnceLock<LejaSequence> = OnceLock::new();
        SEQ.get_or_init(|| {
            LejaSequence::generate(DEFAULT_POINTS, DEFAULT_GRID_DENSITY).expect("valid defaults")
        })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|x| !(-2.0..=2.0).contains(x)) {
            return Err(Error::InvalidArgument(
                "Leja points must be non-empty and lie in [-2, 2]".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes one point per line with 17 significant digits.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path)?;
        for x in &self.points {
            writeln!(out, "{x:.16e}")?;
        }
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut points = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let x: f64 = line
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("bad Leja point {line:?}: {e}")))?;
            points.push(x);
        }
        Self::from_points(points)
    }

    /// Reads the cache file if present, otherwise generates the default
    /// sequence and writes it.
    pub fn load_or_generate(path: &Path) -> Result<Self> {
        if path.exists() {
            return Self::read_from(path);
        }
        let seq = Self::generate(DEFAULT_POINTS, DEFAULT_GRID_DENSITY)?;
        seq.write_to(path)?;
        Ok(seq)
    }
}

/// Newton coefficients of `z ↦ φ_l(h·(c + γz))` at the Leja points.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedDifferences {
    pub coeffs: Vec<f64>,
    pub order: usize,
    pub h: f64,
    pub c: f64,
    pub gamma: f64,
}

/// Lower bidiagonal matrix with diagonal `h(c + γξ_j)` and subdiagonal `hγ`.
///
/// Any analytic `g` applied to it has the divided differences of
/// `z ↦ g(h(c + γz))` at `ξ` in its first column.
pub fn leja_bidiagonal(points: &[f64], h: f64, c: f64, gamma: f64) -> DenseMatrix {
    let m = points.len();
    let mut mat = DenseMatrix::zeros(m, m);
    for (j, xi) in points.iter().enumerate() {
        mat[(j, j)] = h * (c + gamma * xi);
        if j + 1 < m {
            mat[(j + 1, j)] = h * gamma;
        }
    }
    mat
}

/// First column of `f(B)` for the Leja bidiagonal matrix `B`.
///
/// Exposed so arbitrary matrix functions can be checked against the same
/// construction.
pub fn newton_coefficients_with<F>(points: &[f64], h: f64, c: f64, gamma: f64, f: F) -> Result<Vec<f64>>
where
    F: FnOnce(&DenseMatrix) -> Result<DenseMatrix>,
{
    let b = leja_bidiagonal(points, h, c, gamma);
    let fb = f(&b)?;
    Ok(fb.column(0).iter().copied().collect())
}

fn phi_first_column(order: usize, points: &[f64], h: f64, c: f64, gamma: f64) -> Result<Vec<f64>> {
    let b = leja_bidiagonal(points, h, c, gamma);
    let m = points.len();
    let mut e1 = vec![0.0; m];
    e1[0] = 1.0;
    let zero = vec![0.0; m];
    let mut vs: Vec<&[f64]> = vec![&zero; order + 1];
    vs[order] = &e1;
    let coeffs = dense_phi_combination(&b, &vs)?;
    if coeffs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Leja divided differences"));
    }
    Ok(coeffs)
}

pub fn divided_differences(
    order: usize,
    h: f64,
    est: &SpectrumEstimate,
    seq: &LejaSequence,
    count: usize,
) -> Result<DividedDifferences> {
    if h < 0.0 || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("scale h must be >= 0, got {h}")));
    }
    let count = count.clamp(1, seq.len());
    let coeffs = phi_first_column(order, &seq.points[..count], h, est.c, est.gamma)
        .map_err(|_| Error::NonFinite("Leja divided differences (spectral estimate invalid?)"))?;
    Ok(DividedDifferences {
        coeffs,
        order,
        h,
        c: est.c,
        gamma: est.gamma,
    })
}

/// Divided differences computed lazily in doubling chunks.
///
/// The bidiagonal matrix is lower triangular, so a leading block yields
/// exactly the leading coefficients.
struct LazyCoefficients<'a> {
    order: usize,
    h: f64,
    est: &'a SpectrumEstimate,
    seq: &'a LejaSequence,
    coeffs: Vec<f64>,
}

impl<'a> LazyCoefficients<'a> {
    fn new(order: usize, h: f64, est: &'a SpectrumEstimate, seq: &'a LejaSequence) -> Self {
        Self {
            order,
            h,
            est,
            seq,
            coeffs: Vec::new(),
        }
    }

    fn get(&mut self, m: usize) -> Result<f64> {
        if m >= self.coeffs.len() {
            let want = (self.coeffs.len() * 2).max(INITIAL_COEFFS).max(m + 1).min(self.seq.len());
            self.coeffs = divided_differences(self.order, self.h, self.est, self.seq, want)?.coeffs;
        }
        Ok(self.coeffs[m])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LejaOutput {
    /// One interpolant per requested coefficient, in request order.
    pub values: Vec<Vec<f64>>,
    /// Polynomial terms used by the slowest accumulator.
    pub iterations: usize,
    /// Terms used by each accumulator when it froze.
    pub freeze_iterations: Vec<usize>,
    /// Operator applications charged by this call.
    pub matvecs: usize,
}

/// `φ_l(h·J)b` for a single scale.
pub fn leja_interpolate(
    op: &dyn LinearOperator,
    b: &[f64],
    order: usize,
    h: f64,
    est: &SpectrumEstimate,
    tol: f64,
    seq: &LejaSequence,
) -> Result<(Vec<f64>, usize)> {
    let mut out = leja_interpolate_vertical(op, b, order, &[1.0], h, est, tol, seq)?;
    Ok((out.values.pop().expect("one output"), out.iterations))
}

/// `φ_l(c_i·h·J)b` for every `c_i` in `coeffs`, sharing one basis sequence.
#[allow(clippy::too_many_arguments)]
pub fn leja_interpolate_vertical(
    op: &dyn LinearOperator,
    b: &[f64],
    order: usize,
    coeffs: &[f64],
    h: f64,
    est: &SpectrumEstimate,
    tol: f64,
    seq: &LejaSequence,
) -> Result<LejaOutput> {
    crate::linalg::check_len(op.dim(), b.len())?;
    if coeffs.is_empty() {
        return Err(Error::InvalidArgument("vertical Leja needs at least one coefficient".into()));
    }
    if let Some(bad) = coeffs.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
        return Err(Error::InvalidArgument(format!("coefficient {bad} outside (0, 1]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = b.len();
    let k = coeffs.len();
    let mut sources: Vec<LazyCoefficients> = coeffs
        .iter()
        .map(|ci| LazyCoefficients::new(order, ci * h, est, seq))
        .collect();
    let mut values = vec![vec![0.0; n]; k];
    let mut frozen: Vec<Option<usize>> = vec![None; k];
    let mut y = b.to_vec();
    let mut jy = vec![0.0; n];
    let inv_gamma = 1.0 / est.gamma;
    let shift = est.c / est.gamma;
    let mut matvecs = 0;
    let points = seq.points();

    for m in 0..points.len() {
        if m > 0 {
            op.apply(&y, &mut jy);
            matvecs += 1;
            let s = shift + points[m - 1];
            for (yi, ji) in y.iter_mut().zip(&jy) {
                *yi = ji * inv_gamma - s * *yi;
            }
        }
        let y_norm = norm_l2(&y);
        if !y_norm.is_finite() {
            return Err(Error::NonFinite("Leja basis vector"));
        }
        for i in 0..k {
            if frozen[i].is_some() {
                continue;
            }
            let d = sources[i].get(m)?;
            if d != 0.0 {
                for (p, yi) in values[i].iter_mut().zip(&y) {
                    *p += d * yi;
                }
            }
            if d.abs() * y_norm < tol {
                frozen[i] = Some(m + 1);
            }
        }
        if frozen.iter().all(Option::is_some) {
            let freeze_iterations: Vec<usize> = frozen.into_iter().map(|f| f.unwrap_or(0)).collect();
            return Ok(LejaOutput {
                values,
                iterations: m + 1,
                freeze_iterations,
                matvecs,
            });
        }
    }
    let stalled = frozen.iter().position(Option::is_none).unwrap_or(0);
    Err(Error::NonConvergence {
        engine: "leja",
        iterations: points.len(),
        detail: format!("coefficient {} (index {stalled}) did not converge", coeffs[stalled]),
    })
}
