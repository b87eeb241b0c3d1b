//! Volume products and the inequality checks built on the transform,
//! solver and flow layers.
//!
//! For `p ∈ (0, 1)` with conjugate `q = p/(p−1) < 0`, the product is
//!
//! `M_p(f) = p^{−np/q} (∫f) (inf_z L[(Lf^{1/p})^q](qz))^{−p/q}`,
//!
//! maximized exactly by Gaussian functions; at the polar limit `p = 0` it
//! becomes `M(f) = (∫f)·inf_z ∫ (τ_z f)^□ ≤ (2π)^n`. The infimum is attained
//! at a unique translation or vanishes, depending on whether the origin lies
//! in the interior of the support of the transformed function; on a finite
//! window the vanishing case is recognized geometrically (the support test
//! is authoritative, the escaping Newton ray corroborates it).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridfn::{ExponentPair, GridFunction, GridSpec, Weight};
use crate::num::log_sum_exp;
use crate::santalo::{
    self, OutcomeKind, SantaloOutcome, SolverOptions, SupportVerdict,
};
use crate::semigroups::{self, SemigroupKind};
use crate::transforms::{self, PLaplace};

/// Window-edge values within this many log-units of the peak mark the
/// function as truncated by its window on that side.
const EDGE_MASS_BAND: f64 = 20.0;
/// Junk in a truncated transform decays at rate (−q)·|edge|; the dichotomy
/// box radius reaches where that junk has fallen by this many log-units.
const JUNK_DEPTH: f64 = 22.0;

/// Gaussian reference constants in log scale: `log C_p` for the reverse
/// L^p Laplace bound and `log M_p(γ_1)`.
pub fn gaussian_constants(p: f64, n: usize) -> Result<(f64, f64)> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Parameter(format!("p must lie in (0, 1), got {p}")));
    }
    let q = p / (p - 1.0);
    let nn = n as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let log_cp = 0.5 * nn * (p.ln() / p - (-q).ln() / q) + nn / q * two_pi.ln();
    let log_mp = 0.5 * nn * (-p * p.ln() + (1.0 - p) * (1.0 - p).ln()) + nn * (1.0 - p) * two_pi.ln();
    Ok((log_cp, log_mp))
}

/// `log M(γ_1) = n log 2π`, the polar-limit bound.
pub fn polar_bound(n: usize) -> f64 {
    n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Grids and solver knobs for product evaluations.
#[derive(Clone, Debug)]
pub struct ProductOptions {
    /// Window hosting the transformed function (the `p > 0` route).
    pub dual_window: GridSpec,
    /// Window hosting the polar transform (the `p = 0` route).
    pub polar_window: GridSpec,
    pub solver: SolverOptions,
    /// Absolute threshold of the support dichotomy.
    pub dichotomy_tol: f64,
}

impl ProductOptions {
    /// Desk-scale defaults per dimension.
    pub fn for_dim(n: usize) -> Result<Self> {
        let (dual_window, polar_window) = match n {
            1 => (GridSpec::line(-100.0, 100.0, 4097)?, GridSpec::line(-40.0, 40.0, 4097)?),
            2 => (GridSpec::square(-32.0, 32.0, 257)?, GridSpec::square(-16.0, 16.0, 257)?),
            _ => {
                return Err(Error::Parameter(format!(
                    "no default windows for dimension {n}"
                )))
            }
        };
        Ok(ProductOptions {
            dual_window,
            polar_window,
            solver: SolverOptions::default(),
            dichotomy_tol: 1e-8,
        })
    }
}

/// Why the product degenerated to `M_p = 0` (log −∞), or didn't.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportKind {
    Attained,
    InfimumZero,
    ZeroFunction,
    NonIntegrable,
}

/// Everything a product evaluation learned.
#[derive(Clone, Debug, Serialize)]
pub struct ProductReport {
    pub p: f64,
    pub kind: ReportKind,
    pub log_integral_f: f64,
    pub santalo: Option<SantaloOutcome>,
    /// log M_p(f) (log M(f) at p = 0); −∞ for the degenerate kinds.
    pub log_mp: f64,
    /// log M_p(γ_1) (log (2π)^n at p = 0).
    pub log_gaussian_bound: f64,
    /// log_mp − log_gaussian_bound.
    pub ratio_log: f64,
    pub tail_flags: Vec<String>,
}

/// lhs/rhs of an inequality check in log scale.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundCheck {
    pub lhs_log: f64,
    pub rhs_log: f64,
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Centering {
    CenterF,
    CenterLp,
}

/// One flow-monotonicity curve. `alpha_log` carries the certified infimum
/// values (the smallest value seen, uncertified, in the vanishing case).
#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityCurve {
    pub times: Vec<f64>,
    pub alpha_log: Vec<f64>,
    pub mp_log: Vec<f64>,
    pub santalo_points: Vec<Vec<f64>>,
    pub kinds: Vec<ReportKind>,
    /// Set when a stage failed; the curve holds the completed prefix.
    pub error: Option<String>,
}

/// Differential-inequality residuals with their declared budget.
#[derive(Clone, Debug, Serialize)]
pub struct HjbReport {
    pub residuals: Vec<f64>,
    pub eps_fd: f64,
}

/// The experimental translation-curve integration.
#[derive(Clone, Debug, Serialize)]
pub struct SantaloCurve {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub objective_log: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PLimitRow {
    pub p: f64,
    /// sup over interior test nodes of the transform-vs-polar log gap.
    pub sup_gap: f64,
    /// |log M_p(f) − log M(f)|.
    pub mp_gap: f64,
}

/// Internal: the route shared by `mp_product` and `volume_product`.
struct SolveOutcome {
    kind: ReportKind,
    santalo: Option<SantaloOutcome>,
    log_inf: f64,
    flags: Vec<String>,
}

fn far_massive_edges(f: &GridFunction) -> Vec<Vec<f64>> {
    // per axis, coordinates of window edges carrying near-peak mass
    let peak = f.max_logv();
    let d = f.dim();
    let mut out = vec![Vec::new(); d];
    for (idx, &v) in f.logv().iter().enumerate() {
        if v < peak - EDGE_MASS_BAND {
            continue;
        }
        let multi = f.spec().unravel(idx);
        for k in 0..d {
            let a = f.spec().axis(k);
            if multi[k] == 0 || multi[k] == a.n - 1 {
                let c = f.coord(k, multi[k]);
                if c.abs() > 2.0 * a.spacing() && !out[k].contains(&c) {
                    out[k].push(c);
                }
            }
        }
    }
    out
}

fn support_lengths(f: &GridFunction) -> Vec<f64> {
    transforms::support_box(f)
        .map(|b| b.iter().map(|(a, c)| c - a).collect())
        .unwrap_or_default()
}

fn escape_radius_for(f: &GridFunction) -> f64 {
    let lens = support_lengths(f);
    let lmin = lens.iter().cloned().fold(f64::INFINITY, f64::min);
    (0.4 * lmin).max(2.0)
}

/// Build the transformed function for exponent `pq` (polar at `p = 0`).
fn transform_for(f: &GridFunction, pq: ExponentPair, opts: &ProductOptions) -> Result<GridFunction> {
    if pq.is_polar() {
        transforms::essential_polar(f, &opts.polar_window)
    } else {
        match transforms::p_laplace(f, pq, &opts.dual_window)? {
            PLaplace::Finite(g) => Ok(g),
            PLaplace::IdenticallyInfinite => Err(Error::TransformOfZero),
        }
    }
}

fn reweight_exponent(pq: ExponentPair) -> f64 {
    if pq.is_polar() {
        -1.0
    } else {
        pq.q
    }
}

fn solve_route(f: &GridFunction, pq: ExponentPair, opts: &ProductOptions) -> Result<SolveOutcome> {
    let mut flags = Vec::new();
    if !f.is_nonzero() {
        return Ok(SolveOutcome {
            kind: ReportKind::ZeroFunction,
            santalo: None,
            log_inf: f64::INFINITY,
            flags,
        });
    }
    let diag = f.integrate_diag();
    if diag.tail_suspect() {
        flags.push("integral-tail".to_string());
    }
    let e = reweight_exponent(pq);
    let massive = far_massive_edges(f);
    let truncated = massive.iter().any(|m| !m.is_empty());

    if truncated {
        // window-truncated data: judge the dichotomy on the as-given
        // transform, with the box radius matched to the truncation junk rate
        let lp = transform_for(f, pq, opts)?;
        let radii: Vec<f64> = (0..f.dim())
            .map(|k| {
                let h3 = 3.0 * lp.spec().axis(k).spacing();
                let far = massive[k].iter().map(|c| c.abs()).fold(0.0f64, f64::max);
                if far > 0.0 {
                    h3.max(JUNK_DEPTH / (e.abs() * far))
                } else {
                    h3
                }
            })
            .collect();
        let verdict = santalo::support_dichotomy_with_radius(&lp, opts.dichotomy_tol, &radii)?;
        if verdict == SupportVerdict::OriginNotInterior {
            let both_sided = massive.iter().any(|m| m.len() >= 2);
            if both_sided {
                flags.push("non-integrable".to_string());
                return Ok(SolveOutcome {
                    kind: ReportKind::NonIntegrable,
                    santalo: None,
                    log_inf: f64::NEG_INFINITY,
                    flags,
                });
            }
            let mut sopts = opts.solver;
            sopts.escape_radius = escape_radius_for(f);
            let sol = santalo::minimize_public(&lp, e, &sopts, &vec![0.0; f.dim()])?;
            if sol.kind != OutcomeKind::InfimumZero {
                return Err(Error::DichotomyMismatch {
                    support_says: "origin not interior",
                    solver_says: "attained",
                });
            }
            let log_inf = sol.log_inf;
            return Ok(SolveOutcome { kind: ReportKind::InfimumZero, santalo: Some(sol), log_inf, flags });
        }
        flags.push("window-edge-mass".to_string());
    }

    // attained route: recenter, transform, solve, cross-check the verdict
    let c = f.barycenter()?;
    let neg_c: Vec<f64> = c.iter().map(|x| -x).collect();
    let fc = f.translate(&neg_c);
    let lp = transform_for(&fc, pq, opts)?;
    if lp.integrate_diag().tail_suspect() {
        flags.push("dual-tail".to_string());
    }
    let verdict = santalo::support_dichotomy(&lp, opts.dichotomy_tol)?;
    let mut sopts = opts.solver;
    sopts.escape_radius = escape_radius_for(&fc);
    let mut sol = santalo::minimize_public(&lp, e, &sopts, &vec![0.0; f.dim()])?;
    match (verdict, sol.kind) {
        (SupportVerdict::OriginInterior, OutcomeKind::Attained) => {}
        (SupportVerdict::OriginNotInterior, OutcomeKind::InfimumZero) => {
            let log_inf = sol.log_inf;
            return Ok(SolveOutcome { kind: ReportKind::InfimumZero, santalo: Some(sol), log_inf, flags });
        }
        (SupportVerdict::OriginInterior, OutcomeKind::InfimumZero) => {
            return Err(Error::DichotomyMismatch {
                support_says: "origin interior",
                solver_says: "infimum zero",
            })
        }
        (SupportVerdict::OriginNotInterior, OutcomeKind::Attained) => {
            return Err(Error::DichotomyMismatch {
                support_says: "origin not interior",
                solver_says: "attained",
            })
        }
    }
    // undo the recentering: s_p(f) = s_p(f_c) − c
    for (s, ck) in sol.point.iter_mut().zip(&c) {
        *s -= ck;
    }
    let log_inf = sol.log_inf;
    Ok(SolveOutcome { kind: ReportKind::Attained, santalo: Some(sol), log_inf, flags })
}

fn assemble_report(
    f: &GridFunction,
    pq: ExponentPair,
    route: SolveOutcome,
) -> Result<ProductReport> {
    let n = f.dim();
    let log_if = f.integrate_log();
    let bound = if pq.is_polar() {
        polar_bound(n)
    } else {
        gaussian_constants(pq.p, n)?.1
    };
    let log_mp = match route.kind {
        ReportKind::Attained => {
            if pq.is_polar() {
                log_if + route.log_inf
            } else {
                let (p, q) = (pq.p, pq.q);
                -(n as f64 * p / q) * p.ln() + log_if - (p / q) * route.log_inf
            }
        }
        _ => f64::NEG_INFINITY,
    };
    Ok(ProductReport {
        p: pq.p,
        kind: route.kind,
        log_integral_f: log_if,
        santalo: route.santalo,
        log_mp,
        log_gaussian_bound: bound,
        ratio_log: log_mp - bound,
        tail_flags: route.flags,
    })
}

/// The L^p volume product `M_p(f)` with its Santaló point and diagnostics.
pub fn mp_product(f: &GridFunction, pq: ExponentPair, opts: &ProductOptions) -> Result<ProductReport> {
    if pq.is_polar() {
        return Err(Error::Parameter("use volume_product at the polar limit".into()));
    }
    let route = solve_route(f, pq, opts)?;
    assemble_report(f, pq, route)
}

/// The polar-limit volume product `M(f) = (∫f)·inf_z ∫(τ_z f)^□ ≤ (2π)^n`.
pub fn volume_product(f: &GridFunction, opts: &ProductOptions) -> Result<ProductReport> {
    let pq = ExponentPair::new(0.0)?;
    let route = solve_route(f, pq, opts)?;
    assemble_report(f, pq, route)
}

/// Product dispatch: `volume_product` at the polar limit, `mp_product` else.
pub fn product(f: &GridFunction, pq: ExponentPair, opts: &ProductOptions) -> Result<ProductReport> {
    if pq.is_polar() {
        volume_product(f, opts)
    } else {
        mp_product(f, pq, opts)
    }
}

/// The product evaluated at `z = 0` after one of the two admissible
/// centerings instead of the full infimum. `CenterF` translates `f` to put
/// its barycenter at the origin; `CenterLp` tilts `f` so the transformed
/// function is centered (through the modulation identity, no retransform).
pub fn mp_centered(
    f: &GridFunction,
    pq: ExponentPair,
    which: Centering,
    opts: &ProductOptions,
) -> Result<ProductReport> {
    if pq.is_polar() {
        return Err(Error::Parameter("centered evaluation needs p > 0".into()));
    }
    if !f.is_nonzero() {
        return Err(Error::ZeroFunction);
    }
    let mut flags = Vec::new();
    let diag = f.integrate_diag();
    if diag.tail_suspect() {
        flags.push("integral-tail".to_string());
    }
    let n = f.dim();
    let (log_if, log_at_zero) = match which {
        Centering::CenterF => {
            let c = f.barycenter()?;
            let neg_c: Vec<f64> = c.iter().map(|x| -x).collect();
            let fc = f.translate(&neg_c);
            let lp = transform_for(&fc, pq, opts)?;
            (fc.integrate_log(), lp.integrate_log())
        }
        Centering::CenterLp => {
            let lp = transform_for(f, pq, opts)?;
            let bar_lp = lp.barycenter()?;
            // tilt f by e^{s·y} with s = p·bar(lp); the transform translates
            // by −s/p, so its integral is unchanged and its barycenter lands
            // at the origin; only ∫ f e^{s·y} must be recomputed
            let tilt: Vec<f64> = bar_lp.iter().map(|b| pq.p * b).collect();
            let fm = f.modulate(&tilt);
            (fm.integrate_log(), lp.integrate_log())
        }
    };
    let (p, q) = (pq.p, pq.q);
    let log_mp = -(n as f64 * p / q) * p.ln() + log_if - (p / q) * log_at_zero;
    let bound = gaussian_constants(p, n)?.1;
    Ok(ProductReport {
        p,
        kind: ReportKind::Attained,
        log_integral_f: log_if,
        santalo: None,
        log_mp,
        log_gaussian_bound: bound,
        ratio_log: log_mp - bound,
        tail_flags: flags,
    })
}

/// The reverse L^p bound for the Laplace transform:
/// `sup_z ‖L(τ_z f)‖_q ≥ C_p ‖f‖_p`, computed through
/// `sup_z ‖L(τ_z f)‖_q = (inf_z L[(L(f^p)^{1/p})^q](qz))^{1/q}` on `f^p`.
pub fn laplace_lp_bound_check(
    f: &GridFunction,
    pq: ExponentPair,
    opts: &ProductOptions,
) -> Result<BoundCheck> {
    if pq.is_polar() {
        return Err(Error::Parameter("the Laplace bound needs p > 0".into()));
    }
    if !f.is_nonzero() {
        return Err(Error::ZeroFunction);
    }
    let g = f.pow(pq.p);
    let route = solve_route(&g, pq, opts)?;
    let lhs_log = match route.kind {
        ReportKind::Attained => route.log_inf / pq.q,
        ReportKind::InfimumZero | ReportKind::NonIntegrable => f64::INFINITY,
        ReportKind::ZeroFunction => return Err(Error::ZeroFunction),
    };
    let (log_cp, _) = gaussian_constants(pq.p, f.dim())?;
    let rhs_log = log_cp + g.integrate_log() / pq.p;
    Ok(BoundCheck { lhs_log, rhs_log, margin: lhs_log - rhs_log })
}

/// Evolve `f` along a flow and trace the product at each time.
pub fn monotonicity_sweep(
    f: &GridFunction,
    pq: ExponentPair,
    kind: SemigroupKind,
    times: &[f64],
    opts: &ProductOptions,
) -> MonotonicityCurve {
    let mut curve = MonotonicityCurve {
        times: Vec::new(),
        alpha_log: Vec::new(),
        mp_log: Vec::new(),
        santalo_points: Vec::new(),
        kinds: Vec::new(),
        error: None,
    };
    for &t in times {
        let step = (|| -> Result<ProductReport> {
            let ft = if t == 0.0 {
                f.clone()
            } else {
                let out = semigroups::grown_window(f, kind, t)?;
                semigroups::evolve(f, crate::semigroups::SemigroupSpec { kind, t }, &out)?
            };
            product(&ft, pq, opts)
        })();
        match step {
            Ok(rep) => {
                curve.times.push(t);
                curve.alpha_log.push(match rep.kind {
                    ReportKind::Attained => rep.santalo.as_ref().map(|s| s.log_inf).unwrap_or(f64::NAN),
                    _ => f64::NEG_INFINITY,
                });
                curve.mp_log.push(rep.log_mp);
                curve.santalo_points.push(
                    rep.santalo
                        .as_ref()
                        .filter(|s| s.kind == OutcomeKind::Attained)
                        .map(|s| s.point.clone())
                        .unwrap_or_else(|| vec![f64::NAN; f.dim()]),
                );
                curve.kinds.push(rep.kind);
            }
            Err(e) => {
                curve.error = Some(format!("t = {t}: {e}"));
                break;
            }
        }
    }
    curve
}

/// Central-difference residuals of the differential inequality
/// `∂_t Q + ½ (p/−q) |∇_z Q|² ≥ 0` for `Q(t, z) = log ∫ (L(E_t f)^{1/p})^q e^{qz·x} dx`,
/// one residual per sample point, plus the declared finite-difference budget
/// from observed third differences.
pub fn hjb_residual(
    f: &GridFunction,
    pq: ExponentPair,
    t: f64,
    z_samples: &[Vec<f64>],
    dt: f64,
    dz: f64,
    opts: &ProductOptions,
) -> Result<HjbReport> {
    if pq.is_polar() {
        return Err(Error::Parameter("the differential inequality needs p > 0".into()));
    }
    if !(t - 2.0 * dt > 0.0) {
        return Err(Error::Parameter("need t − 2dt > 0".into()));
    }
    // one fixed output window for every time sample keeps the differences clean
    let out = semigroups::grown_window(f, SemigroupKind::Heat, t + 2.0 * dt)?;
    let q_at = |u: f64| -> Result<crate::santalo::Objective> {
        let fu = semigroups::heat(f, u, &out)?;
        let lp = transform_for(&fu, pq, opts)?;
        Ok(crate::santalo::Objective::new(&lp, pq.q))
    };
    let obj_m2 = q_at(t - 2.0 * dt)?;
    let obj_m1 = q_at(t - dt)?;
    let obj_0 = q_at(t)?;
    let obj_p1 = q_at(t + dt)?;
    let obj_p2 = q_at(t + 2.0 * dt)?;
    let coef = 0.5 * pq.p / (-pq.q);
    let mut residuals = Vec::with_capacity(z_samples.len());
    let mut eps = 0.0f64;
    for z in z_samples {
        let dt_q = (obj_p1.value(z) - obj_m1.value(z)) / (2.0 * dt);
        let mut grad2 = 0.0;
        let mut zz = z.clone();
        let mut grad_abs = 0.0f64;
        let mut third_z = 0.0f64;
        for k in 0..z.len() {
            let z0 = zz[k];
            zz[k] = z0 + dz;
            let vp = obj_0.value(&zz);
            zz[k] = z0 - dz;
            let vm = obj_0.value(&zz);
            zz[k] = z0 + 2.0 * dz;
            let vp2 = obj_0.value(&zz);
            zz[k] = z0 - 2.0 * dz;
            let vm2 = obj_0.value(&zz);
            zz[k] = z0;
            let g = (vp - vm) / (2.0 * dz);
            grad2 += g * g;
            grad_abs = f64::max(grad_abs, g.abs());
            third_z = third_z.max(((vp2 - 2.0 * vp + 2.0 * vm - vm2) / (2.0 * dz * dz * dz)).abs());
        }
        residuals.push(dt_q + coef * grad2);
        // budget: third-derivative truncation of both stencils
        let q3t = ((obj_p2.value(z) - 2.0 * obj_p1.value(z) + 2.0 * obj_m1.value(z)
            - obj_m2.value(z))
            / (2.0 * dt * dt * dt))
            .abs();
        let e_t = q3t * dt * dt / 6.0;
        let e_z = coef * 2.0 * grad_abs * (third_z * dz * dz / 6.0) * z.len() as f64;
        eps = eps.max(e_t + e_z);
    }
    Ok(HjbReport { residuals, eps_fd: eps + 1e-9 })
}

/// Reverse hypercontractivity along the Ornstein–Uhlenbeck flow:
/// with `s = −½ log(1−p)`, checks `‖U_s f‖_{p2,γ} ≥ ‖f‖_{p1,γ}` for
/// `p2 ≥ q`, `p1 ≤ p`, under the first-moment centering hypothesis
/// (`∫x f^p dγ = 0` or `∫x (U_s f)^q dγ = 0`, verified numerically).
pub fn hypercontract_check(f: &GridFunction, p: f64, p1: f64, p2: f64) -> Result<BoundCheck> {
    let pq = ExponentPair::new(p)?;
    if pq.is_polar() {
        return Err(Error::Parameter("hypercontractivity needs p > 0".into()));
    }
    if p1 > p + 1e-12 {
        return Err(Error::Parameter(format!("p1 = {p1} must be ≤ p = {p}")));
    }
    if p2 < pq.q - 1e-12 {
        return Err(Error::Parameter(format!("p2 = {p2} must be ≥ q = {}", pq.q)));
    }
    let s = -0.5 * (1.0 - p).ln();
    let out = GridSpec::line(-9.0, 9.0, 1801)?;
    let out = if f.dim() == 2 { GridSpec::square(-9.0, 9.0, 301)? } else { out };
    let usf = semigroups::ou(f, s, &out)?;

    let tol = 1e-6;
    let m_f = gaussian_first_moment(&f.pow(p))?;
    let centered = if m_f.abs() <= tol {
        true
    } else {
        match gaussian_first_moment_neg(&usf, pq.q) {
            Ok(m_u) => m_u.abs() <= tol,
            Err(_) => false,
        }
    };
    if !centered {
        return Err(Error::HypothesisViolated { moment: m_f.abs(), tol });
    }
    let lhs = usf.lp_norm_log(p2, Weight::Gaussian);
    let rhs = f.lp_norm_log(p1, Weight::Gaussian);
    let lhs_log = if lhs.divergent { f64::NEG_INFINITY } else { lhs.value };
    let rhs_log = if rhs.divergent { f64::NEG_INFINITY } else { rhs.value };
    Ok(BoundCheck { lhs_log, rhs_log, margin: lhs_log - rhs_log })
}

/// Normalized first moment `∫x g dγ / ∫g dγ` along the first axis.
fn gaussian_first_moment(g: &GridFunction) -> Result<f64> {
    weighted_moment(g, 1.0)
}

fn gaussian_first_moment_neg(g: &GridFunction, r: f64) -> Result<f64> {
    weighted_moment(g, r)
}

fn weighted_moment(g: &GridFunction, r: f64) -> Result<f64> {
    let d = g.dim() as f64;
    let norm = -0.5 * d * (2.0 * std::f64::consts::PI).ln();
    let mut mass = Vec::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (idx, &v) in g.logv().iter().enumerate() {
        if v == f64::NEG_INFINITY {
            if r < 0.0 {
                return Err(Error::Parameter("negative power of a vanishing value".into()));
            }
            continue;
        }
        let multi = g.spec().unravel(idx);
        let mut r2 = 0.0;
        for k in 0..g.dim() {
            let x = g.coord(k, multi[k]);
            r2 += x * x;
        }
        let t = r * v - 0.5 * r2 + norm + g.weight_log(idx);
        mass.push(t);
        let x0 = g.coord(0, multi[0]);
        if x0 > 0.0 {
            pos.push(t + x0.ln());
        } else if x0 < 0.0 {
            neg.push(t + (-x0).ln());
        }
    }
    let lm = log_sum_exp(&mass);
    let lp = log_sum_exp(&pos);
    let ln = log_sum_exp(&neg);
    let sp = if lp == f64::NEG_INFINITY { 0.0 } else { (lp - lm).exp() };
    let sn = if ln == f64::NEG_INFINITY { 0.0 } else { (ln - lm).exp() };
    Ok(sp - sn)
}

/// Integrate the experimental translation-curve equation
/// `s'(t) = (p/2)·bar(μ_{t,s})`, `μ_{t,s} ∝ (L(f_t)^{1/p})^q e^{qs·x}`, by the
/// explicit midpoint rule, reporting the objective along the way. Requires an
/// attained start point `s(0)`.
pub fn santalo_curve(
    f: &GridFunction,
    pq: ExponentPair,
    kind: SemigroupKind,
    times: &[f64],
    ode_step: f64,
    opts: &ProductOptions,
) -> Result<SantaloCurve> {
    if pq.is_polar() {
        return Err(Error::Parameter("the curve integrator needs p > 0".into()));
    }
    let rep0 = mp_product(f, pq, opts)?;
    if rep0.kind != ReportKind::Attained {
        return Err(Error::CurvePreconditionFailed);
    }
    let t_end = times.iter().cloned().fold(0.0f64, f64::max);
    let out = semigroups::grown_window(f, kind, t_end)?;

    struct FlowCache {
        t: f64,
        obj: crate::santalo::Objective,
    }
    let make_obj = |t: f64| -> Result<crate::santalo::Objective> {
        let ft = if t == 0.0 {
            f.clone()
        } else {
            semigroups::evolve(f, crate::semigroups::SemigroupSpec { kind, t }, &out)?
        };
        let lp = transform_for(&ft, pq, opts)?;
        Ok(crate::santalo::Objective::new(&lp, pq.q))
    };
    let drift = |obj: &crate::santalo::Objective, s: &[f64]| -> Vec<f64> {
        let (_, grad, _) = obj.value_grad_hess(s);
        grad.iter().map(|g| 0.5 * pq.p * g / pq.q).collect()
    };

    let mut cache = FlowCache { t: 0.0, obj: make_obj(0.0)? };
    let mut s = rep0.santalo.as_ref().unwrap().point.clone();
    let mut t = 0.0f64;
    let mut curve = SantaloCurve { times: Vec::new(), points: Vec::new(), objective_log: Vec::new() };
    let radius: f64 = opts
        .dual_window
        .axes()
        .iter()
        .map(|a| a.hi.abs().max(a.lo.abs()))
        .fold(f64::INFINITY, f64::min);
    let mut targets = times.to_vec();
    targets.sort_by(|a, b| a.total_cmp(b));
    let mut next = 0usize;
    if !targets.is_empty() && targets[0] == 0.0 {
        curve.times.push(0.0);
        curve.points.push(s.clone());
        curve.objective_log.push(cache.obj.value(&s));
        next = 1;
    }
    while next < targets.len() {
        let h = ode_step.min(targets[next] - t).max(1e-12);
        if cache.t != t {
            cache = FlowCache { t, obj: make_obj(t)? };
        }
        let k1 = drift(&cache.obj, &s);
        let mid: Vec<f64> = s.iter().zip(&k1).map(|(si, ki)| si + 0.5 * h * ki).collect();
        cache = FlowCache { t: t + 0.5 * h, obj: make_obj(t + 0.5 * h)? };
        let k2 = drift(&cache.obj, &mid);
        for (si, ki) in s.iter_mut().zip(&k2) {
            *si += h * ki;
        }
        t += h;
        if crate::num::norm(&s) > radius {
            return Err(Error::CurveLeftWindow { t });
        }
        if (t - targets[next]).abs() <= 1e-9 {
            cache = FlowCache { t, obj: make_obj(t)? };
            curve.times.push(targets[next]);
            curve.points.push(s.clone());
            curve.objective_log.push(cache.obj.value(&s));
            next += 1;
        }
    }
    Ok(curve)
}

/// `mp_product` with the dual window widened until its integrand tail is
/// quiet; small `p` spreads the transform over a 1/p-growing scale.
pub fn mp_product_adaptive(f: &GridFunction, pq: ExponentPair, opts: &ProductOptions) -> Result<ProductReport> {
    let mut local = opts.clone();
    for _ in 0..6 {
        let rep = mp_product(f, pq, &local)?;
        if !rep.tail_flags.iter().any(|t| t == "dual-tail") {
            return Ok(rep);
        }
        let axes: Vec<crate::gridfn::Axis> = local
            .dual_window
            .axes()
            .iter()
            .map(|a| crate::gridfn::Axis::new(a.lo * 2.0, a.hi * 2.0, a.n).unwrap())
            .collect();
        local.dual_window = GridSpec::new(axes)?;
    }
    mp_product(f, pq, &local)
}

/// The approach to the polar limit: for each `p`, the sup over interior test
/// nodes of `|log (Lf^{1/p})^q(x/p) − log f^□(x)|` and the product gap
/// `|log M_p(f) − log M(f)|`.
pub fn p_limit_sweep(f: &GridFunction, ps: &[f64], opts: &ProductOptions) -> Result<Vec<PLimitRow>> {
    if !f.is_nonzero() {
        return Err(Error::ZeroFunction);
    }
    let fsq = transforms::essential_polar(f, &opts.polar_window)?;
    // interior test nodes: within two log-units of the peak, then three
    // nodes away from that region's boundary
    let peak = fsq.max_logv();
    let n_nodes = fsq.logv().len();
    let in_band: Vec<bool> = fsq.logv().iter().map(|&v| v >= peak - 2.0).collect();
    let mut test_nodes = Vec::new();
    if f.dim() == 1 {
        for i in 3..n_nodes.saturating_sub(3) {
            if (i.saturating_sub(3)..=i + 3).all(|j| in_band[j]) {
                test_nodes.push(i);
            }
        }
    } else {
        for idx in 0..n_nodes {
            if in_band[idx] {
                test_nodes.push(idx);
            }
        }
    }
    if test_nodes.is_empty() {
        return Err(Error::Parameter("no interior test nodes for the polar limit".into()));
    }
    let vol = volume_product(f, opts)?;
    let mut rows = Vec::with_capacity(ps.len());
    for &p in ps {
        let pq = ExponentPair::new(p)?;
        let root = f.pow(1.0 / p);
        let mut sup_gap = 0.0f64;
        for &idx in &test_nodes {
            let multi = fsq.spec().unravel(idx);
            let x: Vec<f64> = (0..f.dim()).map(|k| fsq.coord(k, multi[k])).collect();
            // pointwise transform value at x/p
            let mut terms = Vec::new();
            for (jdx, &v) in root.logv().iter().enumerate() {
                if v == f64::NEG_INFINITY {
                    continue;
                }
                let jm = root.spec().unravel(jdx);
                let mut dot = 0.0;
                for k in 0..f.dim() {
                    dot += root.coord(k, jm[k]) * x[k] / p;
                }
                terms.push(v + dot + root.weight_log(jdx));
            }
            let lp_val = pq.q * log_sum_exp(&terms);
            sup_gap = sup_gap.max((lp_val - fsq.logv()[idx]).abs());
        }
        let rep = mp_product_adaptive(f, pq, opts)?;
        rows.push(PLimitRow { p, sup_gap, mp_gap: (rep.log_mp - vol.log_mp).abs() });
    }
    Ok(rows)
}
