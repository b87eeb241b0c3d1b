//! Heat, Fokker–Planck and Ornstein–Uhlenbeck flows by exact-kernel
//! quadrature.
//!
//! `E_t f = (2πt)^{−n/2} (f ∗ γ_t)` solves `∂_t u = ½Δu`; the Fokker–Planck
//! flow `P_t` interpolates between `f` and the standard Gaussian and the two
//! are conjugate through `E_t f(x) = (1+t)^{−n/2} P_{log(1+t)} f((1+t)^{−1/2} x)`.
//! `U_t` acts against the Gaussian probability measure. All three kernels
//! factorize over axes.

use serde::{Deserialize, Serialize};

use crate::axisops::{interp_quadrature_axis, logsumexp_axis, AxisKernel};
use crate::error::{Error, Result};
use crate::gridfn::{Axis, GridFunction, GridSpec};

/// Which flow, with its time parameter; `t = 0` is the identity for all.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupSpec {
    pub kind: SemigroupKind,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SemigroupKind {
    Heat,
    FokkerPlanck,
    OrnsteinUhlenbeck,
}

/// Quadrature window radius for the Ornstein–Uhlenbeck Gaussian variable,
/// in standard deviations.
pub const OU_Z_RADIUS: f64 = 8.0;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("flow time must be nonnegative, got {t}")));
    }
    Ok(())
}

/// Heat flow `E_t f` on the output grid.
pub fn heat(f: &GridFunction, t: f64, out: &GridSpec) -> Result<GridFunction> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    if !f.is_nonzero() {
        return Err(Error::ZeroFunction);
    }
    let mut dims: Vec<usize> = f.spec().axes().iter().map(|a| a.n).collect();
    let mut vals = f.logv().to_vec();
    let norm = -0.5 * (2.0 * std::f64::consts::PI * t).ln();
    for k in 0..f.dim() {
        let src_axis = f.spec().axis(k);
        let points = f.coords(k);
        let offset: Vec<f64> = (0..src_axis.n)
            .map(|j| src_axis.weight_log(j) - points[j] * points[j] / (2.0 * t))
            .collect();
        let out_axis = out.axis(k);
        let ys: Vec<f64> = (0..out_axis.n).map(|i| out_axis.node(i)).collect();
        let base: Vec<f64> = ys.iter().map(|y| -y * y / (2.0 * t) + norm).collect();
        let query: Vec<f64> = ys.iter().map(|y| y / t).collect();
        let kernel = AxisKernel { base, query, points, offset };
        vals = logsumexp_axis(&vals, &mut dims, k, &kernel);
    }
    GridFunction::new(out.clone(), vals)
}

/// Fokker–Planck flow `P_t f` on the output grid.
pub fn fokker_planck(f: &GridFunction, t: f64, out: &GridSpec) -> Result<GridFunction> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    if !f.is_nonzero() {
        return Err(Error::ZeroFunction);
    }
    let s2 = t.exp() - 1.0;
    let eh = (0.5 * t).exp();
    let mut dims: Vec<usize> = f.spec().axes().iter().map(|a| a.n).collect();
    let mut vals = f.logv().to_vec();
    let norm = 0.5 * t - 0.5 * (2.0 * std::f64::consts::PI * s2).ln();
    for k in 0..f.dim() {
        let src_axis = f.spec().axis(k);
        let points = f.coords(k);
        let offset: Vec<f64> = (0..src_axis.n)
            .map(|j| src_axis.weight_log(j) - points[j] * points[j] / (2.0 * s2))
            .collect();
        let out_axis = out.axis(k);
        let xs: Vec<f64> = (0..out_axis.n).map(|i| out_axis.node(i)).collect();
        let base: Vec<f64> = xs.iter().map(|x| -eh * eh * x * x / (2.0 * s2) + norm).collect();
        let query: Vec<f64> = xs.iter().map(|x| eh * x / s2).collect();
        let kernel = AxisKernel { base, query, points, offset };
        vals = logsumexp_axis(&vals, &mut dims, k, &kernel);
    }
    GridFunction::new(out.clone(), vals)
}

/// Ornstein–Uhlenbeck flow `U_t f(x) = ∫ f(e^{−t}x + √(1−e^{−2t}) z) dγ(z)`
/// on the output grid, by Gaussian quadrature over a window of
/// [`OU_Z_RADIUS`] standard deviations and log-linear interpolation of `f`.
pub fn ou(f: &GridFunction, t: f64, out: &GridSpec) -> Result<GridFunction> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    if !f.is_nonzero() {
        return Err(Error::ZeroFunction);
    }
    let a = (-t).exp();
    let b = (1.0 - (-2.0 * t).exp()).sqrt();
    let nz = 1601usize;
    let z_axis = Axis::new(-OU_Z_RADIUS, OU_Z_RADIUS, nz)?;
    let z_nodes: Vec<f64> = (0..nz).map(|m| z_axis.node(m)).collect();
    let z_logw: Vec<f64> = (0..nz)
        .map(|m| {
            let z = z_nodes[m];
            z_axis.weight_log(m) - 0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln()
        })
        .collect();
    let mut dims: Vec<usize> = f.spec().axes().iter().map(|a| a.n).collect();
    let mut vals = f.logv().to_vec();
    for k in 0..f.dim() {
        let src_coords = f.coords(k);
        let out_axis = out.axis(k);
        let out_coords: Vec<f64> = (0..out_axis.n).map(|i| out_axis.node(i)).collect();
        vals = interp_quadrature_axis(
            &vals,
            &mut dims,
            k,
            &src_coords,
            &out_coords,
            a,
            b,
            &z_nodes,
            &z_logw,
        );
    }
    GridFunction::new(out.clone(), vals)
}

/// Dispatch on [`SemigroupSpec`].
pub fn evolve(f: &GridFunction, sg: SemigroupSpec, out: &GridSpec) -> Result<GridFunction> {
    match sg.kind {
        SemigroupKind::Heat => heat(f, sg.t, out),
        SemigroupKind::FokkerPlanck => fokker_planck(f, sg.t, out),
        SemigroupKind::OrnsteinUhlenbeck => ou(f, sg.t, out),
    }
}

/// Output window for a flow started from `f`, grown with `t` so the spread
/// support stays resolved, with spacing close to the source spacing.
pub fn grown_window(f: &GridFunction, kind: SemigroupKind, t: f64) -> Result<GridSpec> {
    let mut axes = Vec::with_capacity(f.dim());
    for k in 0..f.dim() {
        let a = f.spec().axis(k);
        let (lo, hi) = (a.lo + f.shift()[k], a.hi + f.shift()[k]);
        let (lo, hi) = match kind {
            SemigroupKind::Heat => {
                let r = 7.0 * t.sqrt();
                (lo - r, hi + r)
            }
            SemigroupKind::FokkerPlanck => {
                let decay = (-0.5 * t).exp();
                let r = 7.0 * (1.0 - (-t).exp()).sqrt();
                ((lo * decay - r).min(-8.0), (hi * decay + r).max(8.0))
            }
            SemigroupKind::OrnsteinUhlenbeck => (lo.min(-10.0), hi.max(10.0)),
        };
        let h = a.spacing();
        let n = (((hi - lo) / h).ceil() as usize + 1).max(a.n);
        axes.push(Axis::new(lo, hi, n)?);
    }
    GridSpec::new(axes)
}

/// Sup over interior output nodes of the mismatch between the heat flow and
/// the renormalized Fokker–Planck flow,
/// `|log E_t f(x) − log[(1+t)^{−n/2} P_{log(1+t)} f((1+t)^{−1/2} x)]|`.
///
/// The Fokker–Planck side is evaluated on the exactly rescaled grid, so the
/// residual measures kernel-quadrature mismatch only. Returns 0 at `t = 0`.
pub fn convert_heat_fp_check(f: &GridFunction, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let out_e = grown_window(f, SemigroupKind::Heat, t)?;
    let ef = heat(f, t, &out_e)?;
    let scale = (1.0 + t).sqrt();
    let n = f.dim() as f64;
    let axes: Vec<Axis> = out_e
        .axes()
        .iter()
        .map(|a| Axis::new(a.lo / scale, a.hi / scale, a.n).unwrap())
        .collect();
    let out_p = GridSpec::new(axes)?;
    let pf = fokker_planck(f, (1.0 + t).ln(), &out_p)?;
    let offset = -0.5 * n * (1.0 + t).ln();
    let mut worst = 0.0f64;
    for (idx, &ve) in ef.logv().iter().enumerate() {
        let multi = ef.spec().unravel(idx);
        if multi
            .iter()
            .enumerate()
            .any(|(k, &i)| i < 3 || i + 3 >= ef.spec().axis(k).n)
        {
            continue;
        }
        let vp = pf.logv()[idx] + offset;
        if ve == f64::NEG_INFINITY && vp == f64::NEG_INFINITY {
            continue;
        }
        // compare only where both sides carry mass worth resolving
        if ve < ef.max_logv() - 40.0 {
            continue;
        }
        worst = worst.max((ve - vp).abs());
    }
    Ok(worst)
}
