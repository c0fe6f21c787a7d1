//! Uniform grids and second-order centered stencils.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Boundary points are unknowns; the outside neighbour mirrors the
    /// inside one.
    Neumann,
    Periodic,
    /// Interior unknowns only, zero outside.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dims: usize,
    /// Unknowns per dimension.
    pub n: usize,
    pub h: f64,
    /// Coordinates along each axis (identical for both axes in 2-D).
    pub coords: Vec<f64>,
    pub bc: Boundary,
}

impl Grid {
    /// Grid on `[lo, hi]^dims` with `n` unknowns per dimension.
    pub fn new(dims: usize, n: usize, lo: f64, hi: f64, bc: Boundary) -> Result<Self> {
        if !(dims == 1 || dims == 2) {
            return Err(Error::InvalidArgument(format!("unsupported dimension {dims}")));
        }
        let min_n = if bc == Boundary::Neumann { 3 } else { 2 };
        if n < min_n {
            return Err(Error::InvalidArgument(format!("need at least {min_n} grid points, got {n}")));
        }
        let len = hi - lo;
        let (h, coords) = match bc {
            Boundary::Periodic => {
                let h = len / n as f64;
                (h, (0..n).map(|i| lo + i as f64 * h).collect())
            }
            Boundary::Dirichlet => {
                let h = len / (n + 1) as f64;
                (h, (1..=n).map(|i| lo + i as f64 * h).collect())
            }
            Boundary::Neumann => {
                let h = len / (n - 1) as f64;
                (h, (0..n).map(|i| lo + i as f64 * h).collect())
            }
        };
        Ok(Self { dims, n, h, coords, bc })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Evaluates `f(x, y)` at every point, `x` varying fastest.
    pub fn sample_2d(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for y in &self.coords {
            for x in &self.coords {
                out.push(f(*x, *y));
            }
        }
        out
    }

    pub fn sample_1d(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.coords.iter().map(|x| f(*x)).collect()
    }

    /// Left and right neighbour indices; `None` is a zero Dirichlet value.
    #[inline]
    fn neighbours(&self, i: usize) -> (Option<usize>, Option<usize>) {
        let n = self.n;
        match self.bc {
            Boundary::Periodic => (Some((i + n - 1) % n), Some((i + 1) % n)),
            Boundary::Neumann => (
                Some(if i == 0 { 1 } else { i - 1 }),
                Some(if i == n - 1 { n - 2 } else { i + 1 }),
            ),
            Boundary::Dirichlet => ((i > 0).then(|| i - 1), (i + 1 < n).then_some(i + 1)),
        }
    }

    /// `out += coef · ∇²u`
    pub fn add_laplacian(&self, coef: f64, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let s = coef / (self.h * self.h);
        let at = |idx: Option<usize>, row: &[f64]| idx.map_or(0.0, |k| row[k]);
        if self.dims == 1 {
            for i in 0..n {
                let (l, r) = self.neighbours(i);
                out[i] += s * (at(l, u) + at(r, u) - 2.0 * u[i]);
            }
            return;
        }
        for j in 0..n {
            let (dn, up) = self.neighbours(j);
            let row = &u[j * n..(j + 1) * n];
            for i in 0..n {
                let (l, r) = self.neighbours(i);
                let below = dn.map_or(0.0, |jj| u[jj * n + i]);
                let above = up.map_or(0.0, |jj| u[jj * n + i]);
                out[j * n + i] += s * (at(l, row) + at(r, row) + below + above - 4.0 * row[i]);
            }
        }
    }

    /// `out += coef · (∂ₓu + ∂ᵧu)` with centered differences.
    pub fn add_gradient_sum(&self, coef: f64, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let s = coef / (2.0 * self.h);
        let at = |idx: Option<usize>, row: &[f64]| idx.map_or(0.0, |k| row[k]);
        if self.dims == 1 {
            for i in 0..n {
                let (l, r) = self.neighbours(i);
                out[i] += s * (at(r, u) - at(l, u));
            }
            return;
        }
        for j in 0..n {
            let (dn, up) = self.neighbours(j);
            let row = &u[j * n..(j + 1) * n];
            for i in 0..n {
                let (l, r) = self.neighbours(i);
                let below = dn.map_or(0.0, |jj| u[jj * n + i]);
                let above = up.map_or(0.0, |jj| u[jj * n + i]);
                out[j * n + i] += s * (at(r, row) - at(l, row) + above - below);
            }
        }
    }

    /// Quadrature weights under which the Neumann Laplacian is conservative
    /// (half weight on boundary points); all ones otherwise.
    pub fn weights_1d(&self) -> Vec<f64> {
        let mut w = vec![1.0; self.n];
        if self.bc == Boundary::Neumann {
            w[0] = 0.5;
            w[self.n - 1] = 0.5;
        }
        w
    }
}
