//! Dense matrix exponential and φ-functions for small matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm bounds below which the [m/m] approximant is accurate to unit roundoff.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152e0;

fn norm1(m: &DenseMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_square(m: &DenseMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

fn pade_solve(u: DenseMatrix, v: DenseMatrix) -> Result<DenseMatrix> {
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or(Error::NonFinite("Padé denominator solve"))
}

fn pade_low(a: &DenseMatrix, coeffs: &[f64]) -> Result<DenseMatrix> {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = DenseMatrix::identity(n, n);
    let mut u_even = DenseMatrix::zeros(n, n);
    let mut v = DenseMatrix::zeros(n, n);
    for k in (0..coeffs.len()).step_by(2) {
        v += &power * coeffs[k];
        u_even += &power * coeffs[k + 1];
        power = &power * &a2;
    }
    pade_solve(a * u_even, v)
}

fn pade13(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    let b = &PADE13;
    let ident = DenseMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    pade_solve(u, v)
}

/// `exp(M)` by Padé approximation with scaling and squaring.
///
/// Degrees 3 through 9 are used below their backward-error thresholds;
/// otherwise the degree-13 approximant is applied to `M/2^s`.
pub fn dense_expm(m: &DenseMatrix) -> Result<DenseMatrix> {
    check_square(m)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("dense_expm input"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let norm = norm1(m);
    for (deg, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match deg {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(m, coeffs);
        }
    }
    let s = ((norm / THETA13).log2().ceil()).max(0.0) as i32;
    let scaled = m * 2f64.powi(-s);
    let mut x = pade13(&scaled)?;
    for _ in 0..s {
        x = &x * &x;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dense_expm result"));
    }
    Ok(x)
}

fn inv_factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc / i as f64)
}

/// Scalar `φ_l(z)`, with `φ_0 = exp` and `φ_{l+1}(z) = (φ_l(z) − 1/l!)/z`.
pub fn phi_scalar(l: usize, z: f64) -> f64 {
    if z.abs() < 1.0 {
        // Taylor series Σ z^k/(k+l)!; the recurrence cancels badly near 0.
        let mut term = inv_factorial(l);
        let mut sum = term;
        for k in 1..60 {
            term *= z / (k + l) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let mut phi = z.exp();
    for j in 0..l {
        phi = (phi - inv_factorial(j)) / z;
    }
    phi
}

fn taylor_phi(l: usize, m: &DenseMatrix) -> DenseMatrix {
    let n = m.nrows();
    let mut term = DenseMatrix::identity(n, n) * inv_factorial(l);
    let mut sum = term.clone();
    for k in 1..=4 {
        term = (&term * m) / (k + l) as f64;
        sum += &term;
    }
    sum
}

/// `φ_0(M), …, φ_l(M)` from a single exponential of the block matrix
/// `[[M, I, 0, …], [0, 0, I, …], …, [0, …, 0]]`.
pub fn dense_phi_all(l: usize, m: &DenseMatrix) -> Result<Vec<DenseMatrix>> {
    check_square(m)?;
    let n = m.nrows();
    if norm1(m) < 1e-8 {
        return Ok((0..=l).map(|j| taylor_phi(j, m)).collect());
    }
    let size = n * (l + 1);
    let mut big = DenseMatrix::zeros(size, size);
    big.view_mut((0, 0), (n, n)).copy_from(m);
    for j in 0..l {
        for i in 0..n {
            big[(j * n + i, (j + 1) * n + i)] = 1.0;
        }
    }
    let e = dense_expm(&big)?;
    Ok((0..=l)
        .map(|j| e.view((0, j * n), (n, n)).into_owned())
        .collect())
}

/// `φ_l(M)`.
pub fn dense_phi(l: usize, m: &DenseMatrix) -> Result<DenseMatrix> {
    if l == 0 {
        check_square(m)?;
        return dense_expm(m);
    }
    Ok(dense_phi_all(l, m)?.pop().expect("l + 1 blocks"))
}

/// `Σ_j φ_j(M) v_j` via the exponential of the `(n + p)`-augmented matrix
/// `[[M, B], [0, K]]` with `B = [v_p, …, v_1]` and `K` the upshift.
///
/// `vs[0]` is the `φ_0` vector; `vs.len() − 1` orders are augmented.
pub fn dense_phi_combination(m: &DenseMatrix, vs: &[&[f64]]) -> Result<Vec<f64>> {
    check_square(m)?;
    let n = m.nrows();
    if vs.is_empty() {
        return Err(Error::InvalidArgument("at least one vector required".into()));
    }
    for v in vs {
        super::check_len(n, v.len())?;
    }
    let p = vs.len() - 1;
    let mut aug = DenseMatrix::zeros(n + p, n + p);
    aug.view_mut((0, 0), (n, n)).copy_from(m);
    for (col, j) in (1..=p).rev().enumerate() {
        for i in 0..n {
            aug[(i, n + col)] = vs[j][i];
        }
    }
    for k in 0..p.saturating_sub(1) {
        aug[(n + k, n + k + 1)] = 1.0;
    }
    let e = dense_expm(&aug)?;
    let mut start = vec![0.0; n + p];
    start[..n].copy_from_slice(vs[0]);
    if p > 0 {
        start[n + p - 1] = 1.0;
    }
    Ok((0..n)
        .map(|i| (0..n + p).map(|k| e[(i, k)] * start[k]).sum())
        .collect())
}
