//! Log-domain representation of nonnegative functions on rectangular grids.
//!
//! A [`GridFunction`] stores `log f` at the nodes of a uniform product grid
//! (−∞ encodes `f = 0`), plus an origin shift so that translation is exact
//! coordinate arithmetic and never resamples. Quadrature is the trapezoidal
//! product rule applied in the log domain through shifted-exponent sums.
//! Every integral can report a boundary-mass diagnostic so that window
//! truncation is observable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::log_sum_exp;

/// Relative boundary mass above which an integral is flagged tail-suspect.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// One axis of a uniform grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::Parameter(format!(
                "axis bounds must be finite with hi > lo, got [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(Error::Parameter(format!("axis needs at least 2 nodes, got {n}")));
        }
        let h = (hi - lo) / (n - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::Parameter("axis spacing must be positive".into()));
        }
        Ok(Axis { lo, hi, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    /// Node coordinate before the origin shift.
    pub fn node(&self, i: usize) -> f64 {
        self.lo + self.spacing() * i as f64
    }

    /// Trapezoid log-weight of node `i` on this axis.
    pub fn weight_log(&self, i: usize) -> f64 {
        let w = self.spacing().ln();
        if i == 0 || i == self.n - 1 {
            w + 0.5f64.ln()
        } else {
            w
        }
    }
}

/// A rectangular grid: a product of uniform axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Parameter("grid needs at least one axis".into()));
        }
        Ok(GridSpec { axes })
    }

    /// 1D grid on `[lo, hi]` with `n` nodes.
    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Ok(GridSpec { axes: vec![Axis::new(lo, hi, n)?] })
    }

    /// Square 2D grid on `[lo, hi]^2` with `n` nodes per axis.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let a = Axis::new(lo, hi, n)?;
        Ok(GridSpec { axes: vec![a, a] })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides, axis 0 slowest.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].n;
        }
        s
    }

    /// Decompose a flat index into per-axis indices.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut out = Vec::with_capacity(self.dim());
        for s in strides {
            out.push(idx / s);
            idx %= s;
        }
        out
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.axes)
            .all(|(&xi, a)| xi >= a.lo - 1e-12 && xi <= a.hi + 1e-12)
    }
}

/// Measure against which `lp_norm_log` integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    Lebesgue,
    /// Standard Gaussian probability measure on R^n.
    Gaussian,
}

/// Value of an L^r norm in log scale, with divergence and tail diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct LpNorm {
    /// (1/r) log ∫ f^r dμ; −∞ when the integral diverges with r < 0.
    pub value: f64,
    /// The integrand was judged non-integrable over the window.
    pub divergent: bool,
    pub tail_suspect: bool,
}

/// An integral value in log scale with its boundary-mass diagnostic.
#[derive(Clone, Copy, Debug)]
pub struct IntegralDiag {
    pub log_value: f64,
    /// logsumexp of boundary-layer contributions.
    pub log_boundary: f64,
}

impl IntegralDiag {
    pub fn tail_suspect(&self) -> bool {
        self.log_boundary - self.log_value > TAIL_TOLERANCE.ln()
    }
}

/// Conjugate exponent pair (p, q) with q = p/(p−1), p ∈ [0, 1).
///
/// p = 0 is the distinguished polar limit; its q is the limiting value 0
/// and [`ExponentPair::is_polar`] discriminates it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
}

impl ExponentPair {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Parameter(format!("p must lie in [0, 1), got {p}")));
        }
        let q = if p == 0.0 { 0.0 } else { p / (p - 1.0) };
        Ok(ExponentPair { p, q })
    }

    pub fn is_polar(self) -> bool {
        self.p == 0.0
    }

    /// −q, the support scale factor; 1 at the polar limit.
    pub fn neg_q(self) -> f64 {
        if self.is_polar() {
            1.0
        } else {
            -self.q
        }
    }
}

/// A nonnegative function sampled on a grid, stored as log-values.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    logv: Vec<f64>,
    shift: Vec<f64>,
}

impl GridFunction {
    /// Wrap log-values; entries must be finite or −∞.
    pub fn new(spec: GridSpec, logv: Vec<f64>) -> Result<Self> {
        if logv.len() != spec.len() {
            return Err(Error::Parameter(format!(
                "expected {} log-values, got {}",
                spec.len(),
                logv.len()
            )));
        }
        for &v in &logv {
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::Parameter("log-values must be finite or -inf".into()));
            }
        }
        let d = spec.dim();
        Ok(GridFunction { spec, logv, shift: vec![0.0; d] })
    }

    /// Sample `log f` at every node coordinate.
    pub fn from_log_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut logv = Vec::with_capacity(spec.len());
        let mut x = vec![0.0f64; spec.dim()];
        for idx in 0..spec.len() {
            let multi = spec.unravel(idx);
            for (k, &i) in multi.iter().enumerate() {
                x[k] = spec.axis(k).node(i);
            }
            logv.push(f(&x));
        }
        GridFunction::new(spec, logv)
    }

    /// The Gaussian `amplitude · e^{−|x−center|²/(2σ)}`, sampled exactly.
    pub fn gaussian(spec: GridSpec, sigma: f64, center: &[f64], amplitude: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
        }
        if !(amplitude > 0.0) {
            return Err(Error::Parameter(format!("amplitude must be positive, got {amplitude}")));
        }
        if center.len() != spec.dim() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("center must be finite with matching dimension".into()));
        }
        let la = amplitude.ln();
        let center = center.to_vec();
        GridFunction::from_log_fn(spec, move |x| {
            let r2: f64 = x.iter().zip(&center).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
            la - r2 / (2.0 * sigma)
        })
    }

    /// Indicator of the box `[lo, hi]`: 1 strictly inside, 0 outside, and the
    /// Darboux value ½ per jump at window-interior boundary nodes so that the
    /// trapezoid rule integrates the indicator exactly. A boundary node that
    /// coincides with the window edge keeps the value 1 (the edge quadrature
    /// weight already halves it).
    pub fn indicator_box(spec: GridSpec, lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != spec.dim() || hi.len() != spec.dim() {
            return Err(Error::Parameter("box bounds must match the grid dimension".into()));
        }
        let axes: Vec<Axis> = spec.axes().to_vec();
        let (lo, hi) = (lo.to_vec(), hi.to_vec());
        GridFunction::from_log_fn(spec, move |x| {
            let mut log_val = 0.0f64;
            for k in 0..x.len() {
                let (xi, l, h) = (x[k], lo[k], hi[k]);
                let tol = 1e-9 * axes[k].spacing();
                if xi < l - tol || xi > h + tol {
                    return f64::NEG_INFINITY;
                }
                let at_edge = (xi - l).abs() <= tol || (xi - h).abs() <= tol;
                let at_window = (xi - axes[k].lo).abs() <= tol || (xi - axes[k].hi).abs() <= tol;
                if at_edge && !at_window {
                    log_val += 0.5f64.ln();
                }
            }
            log_val
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn logv(&self) -> &[f64] {
        &self.logv
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Coordinate of node `i` on axis `k`, including the origin shift.
    pub fn coord(&self, k: usize, i: usize) -> f64 {
        self.spec.axis(k).node(i) + self.shift[k]
    }

    /// All coordinates along axis `k`.
    pub fn coords(&self, k: usize) -> Vec<f64> {
        (0..self.spec.axis(k).n).map(|i| self.coord(k, i)).collect()
    }

    /// `f ≢ 0` on the grid: at least one finite log-value.
    pub fn is_nonzero(&self) -> bool {
        self.logv.iter().any(|&v| v != f64::NEG_INFINITY)
    }

    pub fn max_logv(&self) -> f64 {
        self.logv.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoid log-weight of the flat node index.
    pub fn weight_log(&self, idx: usize) -> f64 {
        let multi = self.spec.unravel(idx);
        multi
            .iter()
            .enumerate()
            .map(|(k, &i)| self.spec.axis(k).weight_log(i))
            .sum()
    }

    fn is_boundary(&self, idx: usize) -> bool {
        let multi = self.spec.unravel(idx);
        multi
            .iter()
            .enumerate()
            .any(|(k, &i)| i == 0 || i == self.spec.axis(k).n - 1)
    }

    /// Returns a copy translated by `z`: coordinates shift, log-values do not.
    pub fn translate(&self, z: &[f64]) -> GridFunction {
        assert_eq!(z.len(), self.dim(), "translation dimension mismatch");
        let mut out = self.clone();
        for (s, &zi) in out.shift.iter_mut().zip(z) {
            *s += zi;
        }
        out
    }

    /// Pointwise power `f^a` in log scale (−∞ stays −∞). `a` must be positive.
    pub fn pow(&self, a: f64) -> GridFunction {
        assert!(a > 0.0, "pow exponent must be positive");
        let mut out = self.clone();
        for v in &mut out.logv {
            if *v != f64::NEG_INFINITY {
                *v *= a;
            }
        }
        out
    }

    /// Pointwise exponential tilt `f(y)·e^{z·y}` in log scale.
    pub fn modulate(&self, z: &[f64]) -> GridFunction {
        assert_eq!(z.len(), self.dim());
        let mut out = self.clone();
        for idx in 0..out.logv.len() {
            if out.logv[idx] == f64::NEG_INFINITY {
                continue;
            }
            let multi = out.spec.unravel(idx);
            let dot: f64 = multi
                .iter()
                .enumerate()
                .map(|(k, &i)| out.coord(k, i) * z[k])
                .sum();
            out.logv[idx] += dot;
        }
        out
    }

    /// log ∫ f by the trapezoid product rule; −∞ iff f ≡ 0 on the grid.
    pub fn integrate_log(&self) -> f64 {
        self.integrate_diag().log_value
    }

    /// Same as [`integrate_log`](Self::integrate_log) plus the boundary-mass
    /// diagnostic.
    pub fn integrate_diag(&self) -> IntegralDiag {
        let mut terms = Vec::with_capacity(self.logv.len());
        let mut boundary = Vec::new();
        for (idx, &v) in self.logv.iter().enumerate() {
            if v == f64::NEG_INFINITY {
                continue;
            }
            let t = v + self.weight_log(idx);
            terms.push(t);
            if self.is_boundary(idx) {
                boundary.push(t);
            }
        }
        IntegralDiag {
            log_value: log_sum_exp(&terms),
            log_boundary: log_sum_exp(&boundary),
        }
    }

    /// bar(f) = ∫ x f / ∫ f, computed with sign-split stable summation.
    pub fn barycenter(&self) -> Result<Vec<f64>> {
        if !self.is_nonzero() {
            return Err(Error::ZeroFunction);
        }
        let log_mass = self.integrate_log();
        let d = self.dim();
        let mut bar = vec![0.0f64; d];
        for k in 0..d {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (idx, &v) in self.logv.iter().enumerate() {
                if v == f64::NEG_INFINITY {
                    continue;
                }
                let multi = self.spec.unravel(idx);
                let xk = self.coord(k, multi[k]);
                if xk == 0.0 {
                    continue;
                }
                let t = v + self.weight_log(idx) + xk.abs().ln();
                if xk > 0.0 {
                    pos.push(t);
                } else {
                    neg.push(t);
                }
            }
            let lp = log_sum_exp(&pos);
            let ln = log_sum_exp(&neg);
            let sp = if lp == f64::NEG_INFINITY { 0.0 } else { (lp - log_mass).exp() };
            let sn = if ln == f64::NEG_INFINITY { 0.0 } else { (ln - log_mass).exp() };
            bar[k] = sp - sn;
        }
        Ok(bar)
    }

    /// (1/r) log ∫ f^r dμ for nonzero `r`, Lebesgue or standard Gaussian μ.
    ///
    /// For r < 0 a zero of f inside the effective support of μ makes the
    /// integrand +∞; this and a tail-suspect window both report divergence,
    /// in which case the norm is −∞ (the ∫f^r = +∞ convention).
    pub fn lp_norm_log(&self, r: f64, weight: Weight) -> LpNorm {
        assert!(r != 0.0, "norm exponent must be nonzero");
        let d = self.dim() as f64;
        let gauss_norm = -0.5 * d * (2.0 * std::f64::consts::PI).ln();
        let mut terms = Vec::with_capacity(self.logv.len());
        let mut boundary = Vec::new();
        let mut hit_zero = false;
        for (idx, &v) in self.logv.iter().enumerate() {
            let multi = self.spec.unravel(idx);
            let w = match weight {
                Weight::Lebesgue => 0.0,
                Weight::Gaussian => {
                    let r2: f64 = multi
                        .iter()
                        .enumerate()
                        .map(|(k, &i)| {
                            let x = self.coord(k, i);
                            x * x
                        })
                        .sum();
                    -0.5 * r2 + gauss_norm
                }
            };
            if v == f64::NEG_INFINITY {
                if r < 0.0 {
                    // zero of f with weight materially inside the window
                    if w > -80.0 + gauss_norm.min(0.0) {
                        hit_zero = true;
                    }
                }
                continue;
            }
            let t = r * v + w + self.weight_log(idx);
            terms.push(t);
            if self.is_boundary(idx) {
                boundary.push(t);
            }
        }
        let log_int = log_sum_exp(&terms);
        let log_bnd = log_sum_exp(&boundary);
        let tail = log_bnd - log_int > TAIL_TOLERANCE.ln();
        if r < 0.0 && (hit_zero || tail) {
            return LpNorm { value: f64::NEG_INFINITY, divergent: true, tail_suspect: tail };
        }
        LpNorm { value: log_int / r, divergent: false, tail_suspect: tail }
    }

    /// Samples of `λ f(Ax)`. Diagonal `A` is resampled exactly onto a rescaled
    /// grid; a general matrix goes through multilinear interpolation of the
    /// log-values.
    pub fn affine_image(&self, lambda: f64, a: &[Vec<f64>]) -> Result<GridFunction> {
        if !(lambda > 0.0) {
            return Err(Error::Parameter("lambda must be positive".into()));
        }
        let d = self.dim();
        if a.len() != d || a.iter().any(|row| row.len() != d) {
            return Err(Error::Parameter("matrix dimension mismatch".into()));
        }
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || a[i][j] == 0.0));
        if diagonal {
            if a.iter().enumerate().any(|(i, row)| row[i] == 0.0) {
                return Err(Error::Parameter("matrix must be invertible".into()));
            }
            return Ok(self.affine_diagonal(lambda, &(0..d).map(|i| a[i][i]).collect::<Vec<_>>()));
        }
        let ainv = invert(a).ok_or_else(|| Error::Parameter("matrix must be invertible".into()))?;
        // target box = A^{-1} (source box), bounding box, same node counts
        let corners = self.box_corners();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for c in corners {
            let y = mat_vec(&ainv, &c);
            for k in 0..d {
                lo[k] = lo[k].min(y[k]);
                hi[k] = hi[k].max(y[k]);
            }
        }
        let axes = (0..d)
            .map(|k| Axis::new(lo[k], hi[k], self.spec.axis(k).n))
            .collect::<Result<Vec<_>>>()?;
        let spec = GridSpec::new(axes)?;
        let llam = lambda.ln();
        let mut logv = Vec::with_capacity(spec.len());
        let mut x = vec![0.0f64; d];
        for idx in 0..spec.len() {
            let multi = spec.unravel(idx);
            for (k, &i) in multi.iter().enumerate() {
                x[k] = spec.axis(k).node(i);
            }
            let ax = mat_vec_rows(a, &x);
            let v = self.sample_log(&ax);
            logv.push(if v == f64::NEG_INFINITY { v } else { v + llam });
        }
        GridFunction::new(spec, logv)
    }

    fn affine_diagonal(&self, lambda: f64, diag: &[f64]) -> GridFunction {
        // g(x) = λ f(Dx) sampled on nodes x = (node + shift)/d_k, exactly.
        let d = self.dim();
        let mut axes = Vec::with_capacity(d);
        let mut reversed = vec![false; d];
        for k in 0..d {
            let a = self.spec.axis(k);
            let lo = (a.lo + self.shift[k]) / diag[k];
            let hi = (a.hi + self.shift[k]) / diag[k];
            let (lo, hi) = if lo <= hi {
                (lo, hi)
            } else {
                reversed[k] = true;
                (hi, lo)
            };
            axes.push(Axis { lo, hi, n: a.n });
        }
        let spec = GridSpec::new(axes).expect("rescaled axes stay valid");
        let llam = lambda.ln();
        let strides_in = self.spec.strides();
        let mut logv = vec![0.0f64; spec.len()];
        for idx in 0..spec.len() {
            let multi = spec.unravel(idx);
            let mut src = 0usize;
            for k in 0..d {
                let i = if reversed[k] { self.spec.axis(k).n - 1 - multi[k] } else { multi[k] };
                src += i * strides_in[k];
            }
            let v = self.logv[src];
            logv[idx] = if v == f64::NEG_INFINITY { v } else { v + llam };
        }
        GridFunction { spec, logv, shift: vec![0.0; d] }
    }

    fn box_corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for mask in 0..(1usize << d) {
            let mut c = Vec::with_capacity(d);
            for k in 0..d {
                let a = self.spec.axis(k);
                c.push(if mask >> k & 1 == 1 { a.hi } else { a.lo } + self.shift[k]);
            }
            out.push(c);
        }
        out
    }

    /// Multilinear interpolation of the log-values at an arbitrary point
    /// (coordinates include the origin shift). Outside the window: −∞.
    pub fn sample_log(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let d = self.dim();
        let mut base = Vec::with_capacity(d);
        let mut frac = Vec::with_capacity(d);
        for k in 0..d {
            let a = self.spec.axis(k);
            let t = (x[k] - self.shift[k] - a.lo) / a.spacing();
            if t < -1e-9 || t > (a.n - 1) as f64 + 1e-9 {
                return f64::NEG_INFINITY;
            }
            let t = t.clamp(0.0, (a.n - 1) as f64);
            let i = (t.floor() as usize).min(a.n - 2);
            base.push(i);
            frac.push(t - i as f64);
        }
        let strides = self.spec.strides();
        let mut acc = 0.0f64;
        for mask in 0..(1usize << d) {
            let mut w = 1.0f64;
            let mut idx = 0usize;
            for k in 0..d {
                let up = mask >> k & 1 == 1;
                w *= if up { frac[k] } else { 1.0 - frac[k] };
                idx += (base[k] + up as usize) * strides[k];
            }
            if w == 0.0 {
                continue;
            }
            let v = self.logv[idx];
            if v == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            acc += w * v;
        }
        acc
    }

    /// Deterministic text serialization (format `gridfn v1`).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("gridfn v1 dim={}\n", self.dim()));
        for a in self.spec.axes() {
            s.push_str(&format!("axis lo={} hi={} n={}\n", a.lo, a.hi, a.n));
        }
        s.push_str("shift");
        for v in &self.shift {
            s.push_str(&format!(" {v}"));
        }
        s.push('\n');
        for &v in &self.logv {
            if v == f64::NEG_INFINITY {
                s.push_str("-inf\n");
            } else {
                s.push_str(&format!("{v}\n"));
            }
        }
        s
    }

    /// Parse the `gridfn v1` text format.
    pub fn from_text(text: &str) -> Result<GridFunction> {
        let mut lines = text.lines().enumerate();
        let bad = |ln: usize, msg: &str| Error::Format(format!("line {}: {msg}", ln + 1));
        let (ln, header) = lines.next().ok_or_else(|| Error::Format("empty input".into()))?;
        let dim: usize = header
            .strip_prefix("gridfn v1 dim=")
            .ok_or_else(|| bad(ln, "expected `gridfn v1 dim=<d>` header"))?
            .trim()
            .parse()
            .map_err(|_| bad(ln, "bad dimension"))?;
        let mut axes = Vec::with_capacity(dim);
        for _ in 0..dim {
            let (ln, line) = lines.next().ok_or_else(|| Error::Format("missing axis line".into()))?;
            let rest = line.strip_prefix("axis ").ok_or_else(|| bad(ln, "expected axis line"))?;
            let mut lo = None;
            let mut hi = None;
            let mut n = None;
            for tok in rest.split_whitespace() {
                if let Some(v) = tok.strip_prefix("lo=") {
                    lo = v.parse::<f64>().ok();
                } else if let Some(v) = tok.strip_prefix("hi=") {
                    hi = v.parse::<f64>().ok();
                } else if let Some(v) = tok.strip_prefix("n=") {
                    n = v.parse::<usize>().ok();
                } else {
                    return Err(bad(ln, "unknown axis field"));
                }
            }
            match (lo, hi, n) {
                (Some(lo), Some(hi), Some(n)) => axes.push(Axis::new(lo, hi, n)?),
                _ => return Err(bad(ln, "axis needs lo=, hi=, n=")),
            }
        }
        let spec = GridSpec::new(axes)?;
        let (ln, line) = lines.next().ok_or_else(|| Error::Format("missing shift line".into()))?;
        let rest = line.strip_prefix("shift").ok_or_else(|| bad(ln, "expected shift line"))?;
        let shift: Vec<f64> = rest
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(ln, "bad shift value")))
            .collect::<Result<_>>()?;
        if shift.len() != dim {
            return Err(bad(ln, "shift dimension mismatch"));
        }
        let mut logv = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            let (ln, line) = lines.next().ok_or_else(|| Error::Format("missing log-values".into()))?;
            let t = line.trim();
            let v = if t == "-inf" {
                f64::NEG_INFINITY
            } else {
                t.parse::<f64>().map_err(|_| bad(ln, "bad log-value"))?
            };
            logv.push(v);
        }
        if lines.next().is_some() {
            return Err(Error::Format("trailing data after log-values".into()));
        }
        let mut g = GridFunction::new(spec, logv)?;
        g.shift = shift;
        Ok(g)
    }
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().map(|r| {
        let mut row = r.clone();
        row.resize(2 * n, 0.0);
        row
    }).collect();
    for i in 0..n {
        m[i][n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let d = m[col][col];
        for v in &mut m[col] {
            *v /= d;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..2 * n {
                        m[i][j] -= f * m[col][j];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

fn mat_vec_rows(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    mat_vec(a, x)
}
