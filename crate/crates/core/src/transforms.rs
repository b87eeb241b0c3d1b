//! The Laplace transform `Lf(y) = ∫ f(x) e^{x·y} dx`, its `p`-power form
//! `(L f^{1/p})^q` with conjugate exponents `p ∈ (0,1)`, `q = p/(p−1) < 0`,
//! the discrete Legendre (essential polar) transform, and dual-grid
//! selection.
//!
//! The Laplace kernel factorizes over axes, so transforms run as a sequence
//! of one-dimensional passes; an n-D transform on N^n source and M^n dual
//! nodes costs O(n · N · M · N^{n-1}) instead of O((NM)^n).

use serde::{Deserialize, Serialize};

use crate::axisops::{logsumexp_axis, maxplus_axis, AxisKernel};
use crate::error::{Error, Result};
use crate::gridfn::{ExponentPair, GridFunction, GridSpec};

/// Minimum node count per dual axis.
pub const MIN_DUAL_NODES: usize = 129;
/// Padding beyond the scaled support, as a fraction of its width per side.
pub const PAD_FACTOR: f64 = 0.25;

/// How a dual grid was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    UserGiven,
    SupportHeuristic,
}

/// A dual grid for the transform variable, together with the support box
/// that the objective's domain is known to sit in.
#[derive(Clone, Debug)]
pub struct DualGridChoice {
    pub spec: GridSpec,
    pub provenance: Provenance,
    /// Per-axis interval (−q)·[min supp f, max supp f].
    pub containment_report: Vec<(f64, f64)>,
}

impl DualGridChoice {
    pub fn user_given(spec: GridSpec) -> Self {
        DualGridChoice { spec, provenance: Provenance::UserGiven, containment_report: Vec::new() }
    }
}

/// `log Lf` on the dual grid. Errors when `f ≡ 0` on its grid; the caller
/// owns the identically-infinite sentinel for the `p`-power transform.
pub fn laplace(f: &GridFunction, dual: &GridSpec) -> Result<GridFunction> {
    if !f.is_nonzero() {
        return Err(Error::TransformOfZero);
    }
    if dual.dim() != f.dim() {
        return Err(Error::Parameter("dual grid dimension mismatch".into()));
    }
    let mut dims: Vec<usize> = f.spec().axes().iter().map(|a| a.n).collect();
    let mut vals = f.logv().to_vec();
    for k in 0..f.dim() {
        let src_axis = f.spec().axis(k);
        let points = f.coords(k);
        let offset: Vec<f64> = (0..src_axis.n).map(|j| src_axis.weight_log(j)).collect();
        let out_axis = dual.axis(k);
        let query: Vec<f64> = (0..out_axis.n).map(|i| out_axis.node(i)).collect();
        let base = vec![0.0; out_axis.n];
        let kernel = AxisKernel { base, query, points, offset };
        vals = logsumexp_axis(&vals, &mut dims, k, &kernel);
    }
    GridFunction::new(dual.clone(), vals)
}

/// Outcome of the `p`-power Laplace transform: finite log-values when
/// `f ≢ 0`, or the identically-infinite sentinel when `f ≡ 0`.
#[derive(Clone, Debug)]
pub enum PLaplace {
    Finite(GridFunction),
    IdenticallyInfinite,
}

impl PLaplace {
    pub fn finite(self) -> Option<GridFunction> {
        match self {
            PLaplace::Finite(g) => Some(g),
            PLaplace::IdenticallyInfinite => None,
        }
    }
}

/// `log (L f^{1/p})^q = q · log L(f^{1/p})` on the dual grid.
pub fn p_laplace(f: &GridFunction, pq: ExponentPair, dual: &GridSpec) -> Result<PLaplace> {
    if pq.is_polar() {
        return Err(Error::Parameter("p must be positive for the p-power transform".into()));
    }
    if !f.is_nonzero() {
        return Ok(PLaplace::IdenticallyInfinite);
    }
    let root = f.pow(1.0 / pq.p);
    let lf = laplace(&root, dual)?;
    let logv: Vec<f64> = lf.logv().iter().map(|&v| pq.q * v).collect();
    Ok(PLaplace::Finite(GridFunction::new(dual.clone(), logv)?))
}

/// The essential polar `f^□(x) = e^{−ψ*(x)}`, `ψ = −log f`, as the discrete
/// Legendre transform `ψ*(x) = max_y (x·y − ψ(y))` over the grid, computed
/// per dimension by the concave-envelope scan (direct scan below 8 nodes).
pub fn essential_polar(f: &GridFunction, dual: &GridSpec) -> Result<GridFunction> {
    if !f.is_nonzero() {
        return Err(Error::ZeroFunction);
    }
    if dual.dim() != f.dim() {
        return Err(Error::Parameter("dual grid dimension mismatch".into()));
    }
    let mut dims: Vec<usize> = f.spec().axes().iter().map(|a| a.n).collect();
    // u = log f = −ψ; each pass conjugates one axis: max_y (x·y + u)
    let mut vals = f.logv().to_vec();
    for k in 0..f.dim() {
        let points = f.coords(k);
        let out_axis = dual.axis(k);
        let query: Vec<f64> = (0..out_axis.n).map(|i| out_axis.node(i)).collect();
        vals = maxplus_axis(&vals, &mut dims, k, &points, &query);
    }
    // log f^□ = −ψ*
    for v in &mut vals {
        *v = -*v;
    }
    GridFunction::new(dual.clone(), vals)
}

/// Per-axis effective support interval of `f` (coordinates of nodes with
/// finite log-values). `None` when `f ≡ 0`.
pub fn support_box(f: &GridFunction) -> Option<Vec<(f64, f64)>> {
    if !f.is_nonzero() {
        return None;
    }
    let d = f.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (idx, &v) in f.logv().iter().enumerate() {
        if v == f64::NEG_INFINITY {
            continue;
        }
        let multi = f.spec().unravel(idx);
        for k in 0..d {
            let x = f.coord(k, multi[k]);
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
    }
    Some(lo.into_iter().zip(hi).collect())
}

/// Choose a dual grid from the support of `f`: scale the per-axis support
/// interval by (−q) (by 1 at the polar limit), pad by [`PAD_FACTOR`] of the
/// scaled width per side, intersect with `max_window`, and keep at least
/// [`MIN_DUAL_NODES`] nodes per axis.
pub fn dual_grid_heuristic(f: &GridFunction, pq: ExponentPair, max_window: &GridSpec) -> Result<DualGridChoice> {
    if max_window.dim() != f.dim() {
        return Err(Error::Parameter("max window dimension mismatch".into()));
    }
    let supp = support_box(f).ok_or(Error::ZeroFunction)?;
    let s = pq.neg_q();
    let mut axes = Vec::with_capacity(f.dim());
    let mut report = Vec::with_capacity(f.dim());
    for (k, &(a, b)) in supp.iter().enumerate() {
        let (sa, sb) = (s * a, s * b);
        report.push((sa, sb));
        let pad = PAD_FACTOR * (sb - sa);
        let w = max_window.axis(k);
        let lo = (sa - pad).max(w.lo);
        let hi = (sb + pad).min(w.hi);
        if !(hi > lo) {
            return Err(Error::DegenerateDualGrid(format!(
                "axis {k}: padded support [{}, {}] misses the window [{}, {}]",
                sa - pad,
                sb + pad,
                w.lo,
                w.hi
            )));
        }
        let share = ((hi - lo) / (w.hi - w.lo) * w.n as f64).ceil() as usize;
        let n = share.max(MIN_DUAL_NODES);
        axes.push(crate::gridfn::Axis::new(lo, hi, n)?);
    }
    Ok(DualGridChoice {
        spec: GridSpec::new(axes)?,
        provenance: Provenance::SupportHeuristic,
        containment_report: report,
    })
}
