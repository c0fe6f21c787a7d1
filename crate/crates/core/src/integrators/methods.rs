//! The five embedded integrators.

use super::stage::Stage;
use super::{Engine, LinearizedSystem, Scheme, StepOptions, StepResult, StepStats};
use crate::error::{Error, Result};
use crate::linalg::{dist_l2, lincomb, StateVector};
use crate::spectrum::SpectrumEstimate;

fn finish(u_high: StateVector, u_low: StateVector, stage: Stage) -> Result<StepResult> {
    let err_est = dist_l2(&u_high, &u_low)?;
    if !err_est.is_finite() {
        return Err(Error::NonFinite("embedded error estimate"));
    }
    Ok(StepResult {
        u_high,
        u_low,
        err_est,
        stats: StepStats { groups: stage.groups },
    })
}

fn scaled(c: f64, v: &[f64]) -> StateVector {
    v.iter().map(|x| c * x).collect()
}

/// Shared shape of EPIRK4s3 and EPIRK4s3A.
struct Epirk4 {
    ca: f64,
    cb: f64,
    /// `(Ra, Rb)` weights of the φ₃ term of `u₃`.
    w3: (f64, f64),
    /// `(Ra, Rb)` weights of the φ₄ correction.
    w4: (f64, f64),
}

fn epirk4(
    sys: &LinearizedSystem,
    dt: f64,
    scheme: Scheme,
    spectrum: Option<&SpectrumEstimate>,
    opts: &StepOptions,
    c: &Epirk4,
) -> Result<StepResult> {
    let mut st = Stage::new(sys, dt, spectrum, opts);
    let u = st.u().to_vec();
    let fdt = st.f_dt();

    let (pa, pb, p1) = match scheme {
        Scheme::Leja => {
            let mut out = st.leja_vertical("internal+phi1", 1, &[c.ca, c.cb, 1.0], &fdt, 2)?;
            let p1 = out.pop();
            let pb = out.pop().expect("three outputs");
            (out.pop().expect("three outputs"), pb, p1)
        }
        Scheme::Kiops => {
            let mut out = st.kiops_vertical("internal", 1, &[c.ca, c.cb], &fdt)?;
            let pb = out.pop().expect("two outputs");
            (out.pop().expect("two outputs"), pb, None)
        }
        Scheme::LeKry => {
            let mut out = st.leja_vertical("internal", 1, &[c.ca, c.cb], &fdt, 2)?;
            let pb = out.pop().expect("two outputs");
            (out.pop().expect("two outputs"), pb, None)
        }
    };
    let a = lincomb(&[(1.0, &u), (c.ca, &pa)]);
    let b = lincomb(&[(1.0, &u), (c.cb, &pb)]);
    let ra = st.remainder("R(a)", &a)?;
    let rb = st.remainder("R(b)", &b)?;
    let r3 = lincomb(&[(c.w3.0 * dt, &ra), (c.w3.1 * dt, &rb)]);
    let r4 = lincomb(&[(c.w4.0 * dt, &ra), (c.w4.1 * dt, &rb)]);

    let u3 = match p1 {
        Some(p1) => {
            let q3 = st.leja("phi3", 3, &r3)?;
            lincomb(&[(1.0, &u), (1.0, &p1), (1.0, &q3)])
        }
        None => {
            let zero = vec![0.0; u.len()];
            let w = st.kiops_horizontal("u3", &[&zero, &fdt, &zero, &r3])?;
            lincomb(&[(1.0, &u), (1.0, &w)])
        }
    };
    let use_leja_for_phi4 = match scheme {
        Scheme::Leja => true,
        Scheme::Kiops => false,
        Scheme::LeKry => opts.lekry_error_engine == Engine::Leja,
    };
    let q4 = if use_leja_for_phi4 {
        st.leja("phi4", 4, &r4)?
    } else {
        st.kiops_single("phi4", 4, &r4)?
    };
    let u4 = lincomb(&[(1.0, &u3), (1.0, &q4)]);
    finish(u4, u3, st)
}

/// EPIRK4s3: internal coefficients 1/8 and 1/9.
pub fn step_epirk4s3(
    sys: &LinearizedSystem,
    dt: f64,
    scheme: Scheme,
    spectrum: Option<&SpectrumEstimate>,
    opts: &StepOptions,
) -> Result<StepResult> {
    // 1892 Ra + 1458 (Rb − 2 Ra) and −42336 Ra − 34992 (Rb − 2 Ra)
    let c = Epirk4 {
        ca: 1.0 / 8.0,
        cb: 1.0 / 9.0,
        w3: (1892.0 - 2.0 * 1458.0, 1458.0),
        w4: (-42336.0 + 2.0 * 34992.0, -34992.0),
    };
    epirk4(sys, dt, scheme, spectrum, opts, &c)
}

/// EPIRK4s3A: internal coefficients 1/2 and 2/3.
pub fn step_epirk4s3a(
    sys: &LinearizedSystem,
    dt: f64,
    scheme: Scheme,
    spectrum: Option<&SpectrumEstimate>,
    opts: &StepOptions,
) -> Result<StepResult> {
    let c = Epirk4 {
        ca: 0.5,
        cb: 2.0 / 3.0,
        w3: (32.0, -13.5),
        w4: (-144.0, 81.0),
    };
    epirk4(sys, dt, scheme, spectrum, opts, &c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epirk5p1Coefficients {
    pub a11: f64,
    pub a21: f64,
    pub a22: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub g11: f64,
    pub g21: f64,
    pub g22: f64,
    pub g31: f64,
    pub g32: f64,
    pub g32_hat: f64,
    pub g33: f64,
    pub g33_hat: f64,
}

#[allow(clippy::excessive_precision)]
pub const EPIRK5P1_COEFFS: Epirk5p1Coefficients = Epirk5p1Coefficients {
    a11: 0.35129592695058193092,
    a21: 0.84405472011657126298,
    a22: 1.6905891609568963624,
    b1: 1.0,
    b2: 1.2727127317356892397,
    b3: 2.2714599265422622275,
    g11: 0.35129592695058193092,
    g21: 0.84405472011657126298,
    g22: 0.5,
    g31: 1.0,
    g32: 0.71111095364366870359,
    g32_hat: 0.5,
    g33: 0.62378111953371494809,
    g33_hat: 1.0,
};

/// EPIRK5P1: every φ action runs in one of three vertical groups.
pub fn step_epirk5p1(
    sys: &LinearizedSystem,
    dt: f64,
    scheme: Scheme,
    spectrum: Option<&SpectrumEstimate>,
    opts: &StepOptions,
) -> Result<StepResult> {
    if scheme == Scheme::LeKry {
        return Err(Error::UnsupportedScheme {
            integrator: "epirk5p1",
            scheme: "lekry",
        });
    }
    let c = EPIRK5P1_COEFFS;
    let mut st = Stage::new(sys, dt, spectrum, opts);
    let u = st.u().to_vec();
    let fdt = st.f_dt();
    let vertical = |st: &mut Stage, label: &'static str, order: usize, coeffs: &[f64], b: &[f64], internal: usize| {
        if scheme == Scheme::Leja {
            st.leja_vertical(label, order, coeffs, b, internal)
        } else {
            st.kiops_vertical(label, order, coeffs, b)
        }
    };

    let f_group = vertical(&mut st, "phi1 f", 1, &[c.g11, c.g21, c.g31], &fdt, 2)?;
    let a = lincomb(&[(1.0, &u), (c.a11, &f_group[0])]);
    let ra_dt = scaled(dt, &st.remainder("R(a)", &a)?);
    let ra_group = vertical(&mut st, "phi1 R(a)", 1, &[c.g22, c.g32_hat, c.g32], &ra_dt, 1)?;
    let b = lincomb(&[(1.0, &u), (c.a21, &f_group[1]), (c.a22, &ra_group[0])]);
    let rb_dt = scaled(dt, &st.remainder("R(b)", &b)?);
    let r3 = lincomb(&[(-2.0, &ra_dt), (1.0, &rb_dt)]);
    let phi3_group = vertical(&mut st, "phi3", 3, &[c.g33_hat, c.g33], &r3, 0)?;

    let u4 = lincomb(&[
        (1.0, &u),
        (c.b1, &f_group[2]),
        (c.b2, &ra_group[1]),
        (c.b3, &phi3_group[0]),
    ]);
    let u5 = lincomb(&[
        (1.0, &u),
        (c.b1, &f_group[2]),
        (c.b2, &ra_group[2]),
        (c.b3, &phi3_group[1]),
    ]);
    finish(u5, u4, st)
}

/// EXPRB43: `{1/2, 1}·φ₁` on `f(uⁿ)Δt` in one group, the rest one by one.
pub fn step_exprb43(
    sys: &LinearizedSystem,
    dt: f64,
    scheme: Scheme,
    spectrum: Option<&SpectrumEstimate>,
    opts: &StepOptions,
) -> Result<StepResult> {
    if scheme == Scheme::LeKry {
        return Err(Error::UnsupportedScheme {
            integrator: "exprb43",
            scheme: "lekry",
        });
    }
    let leja = scheme == Scheme::Leja;
    let mut st = Stage::new(sys, dt, spectrum, opts);
    let u = st.u().to_vec();
    let fdt = st.f_dt();
    let single = |st: &mut Stage, label: &'static str, order: usize, b: &[f64]| {
        if leja {
            st.leja(label, order, b)
        } else {
            st.kiops_single(label, order, b)
        }
    };

    let f_group = if leja {
        st.leja_vertical("phi1 f", 1, &[0.5, 1.0], &fdt, 1)?
    } else {
        st.kiops_vertical("phi1 f", 1, &[0.5, 1.0], &fdt)?
    };
    let (p_half, p_one) = (&f_group[0], &f_group[1]);
    let a = lincomb(&[(1.0, &u), (0.5, p_half)]);
    let ra = st.remainder("R(a)", &a)?;
    let q_ra = single(&mut st, "phi1 R(a)", 1, &scaled(dt, &ra))?;
    let b = lincomb(&[(1.0, &u), (1.0, p_one), (1.0, &q_ra)]);
    let rb = st.remainder("R(b)", &b)?;
    let r3 = lincomb(&[(16.0 * dt, &ra), (-2.0 * dt, &rb)]);
    let r4 = lincomb(&[(-48.0 * dt, &ra), (12.0 * dt, &rb)]);
    let q3 = single(&mut st, "phi3", 3, &r3)?;
    let u3 = lincomb(&[(1.0, &u), (1.0, p_one), (1.0, &q3)]);
    let q4 = single(&mut st, "phi4", 4, &r4)?;
    let u4 = lincomb(&[(1.0, &u3), (1.0, &q4)]);
    finish(u4, u3, st)
}

/// EXPRB53s3: fifth-order solution with a third-order embedded one.
pub fn step_exprb53s3(
    sys: &LinearizedSystem,
    dt: f64,
    scheme: Scheme,
    spectrum: Option<&SpectrumEstimate>,
    opts: &StepOptions,
) -> Result<StepResult> {
    let mut st = Stage::new(sys, dt, spectrum, opts);
    let u = st.u().to_vec();
    let fdt = st.f_dt();
    let zero = vec![0.0; u.len()];

    let (pa, pb, p1) = match scheme {
        Scheme::Leja => {
            let mut out = st.leja_vertical("internal+phi1", 1, &[0.5, 0.9, 1.0], &fdt, 2)?;
            let p1 = out.pop();
            let pb = out.pop().expect("three outputs");
            (out.pop().expect("three outputs"), pb, p1)
        }
        Scheme::Kiops => {
            let mut out = st.kiops_vertical("internal phi1", 1, &[0.5, 0.9], &fdt)?;
            let pb = out.pop().expect("two outputs");
            (out.pop().expect("two outputs"), pb, None)
        }
        Scheme::LeKry => {
            let mut out = st.leja_vertical("internal phi1", 1, &[0.5, 0.9], &fdt, 2)?;
            let pb = out.pop().expect("two outputs");
            (out.pop().expect("two outputs"), pb, None)
        }
    };
    let a = lincomb(&[(1.0, &u), (0.5, &pa)]);
    let ra = st.remainder("R(a)", &a)?;
    let ra_dt = scaled(dt, &ra);
    let phi3_pair = match scheme {
        Scheme::Kiops => st.kiops_vertical("internal phi3", 3, &[0.5, 0.9], &ra_dt)?,
        _ => st.leja_vertical("internal phi3", 3, &[0.5, 0.9], &ra_dt, 2)?,
    };
    let b = lincomb(&[
        (1.0, &u),
        (0.9, &pb),
        (27.0 / 25.0, &phi3_pair[0]),
        (729.0 / 125.0, &phi3_pair[1]),
    ]);
    let rb = st.remainder("R(b)", &b)?;
    let r3 = lincomb(&[(2.0 * dt, &ra), (150.0 / 81.0 * dt, &rb)]);
    let r5_3 = lincomb(&[(18.0 * dt, &ra), (-250.0 / 81.0 * dt, &rb)]);
    let r5_4 = lincomb(&[(-60.0 * dt, &ra), (500.0 / 27.0 * dt, &rb)]);

    let (u3, u5) = match p1 {
        Some(p1) => {
            let q3 = st.leja("u3 phi3", 3, &r3)?;
            let q53 = st.leja("u5 phi3", 3, &r5_3)?;
            let q54 = st.leja("u5 phi4", 4, &r5_4)?;
            (
                lincomb(&[(1.0, &u), (1.0, &p1), (1.0, &q3)]),
                lincomb(&[(1.0, &u), (1.0, &p1), (1.0, &q53), (1.0, &q54)]),
            )
        }
        None => {
            let w3 = st.kiops_horizontal("u3", &[&zero, &fdt, &zero, &r3])?;
            let w5 = st.kiops_horizontal("u5", &[&zero, &fdt, &zero, &r5_3, &r5_4])?;
            (lincomb(&[(1.0, &u), (1.0, &w3)]), lincomb(&[(1.0, &u), (1.0, &w5)]))
        }
    };
    finish(u5, u3, st)
}
