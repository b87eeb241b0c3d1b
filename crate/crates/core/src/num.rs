//! Stable scalar kernels shared by every module: fixed-order pairwise
//! summation, log-sum-exp, the monotone max-plus envelope, and a tiny
//! SPD solve for Newton steps.
//!
//! All reductions here use a fixed evaluation order, so results do not
//! depend on thread count or scheduling.

/// Pairwise (cascade) summation with a fixed recursion order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 16;
    if xs.len() <= BASE {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// log(Σ exp(t_i)) over a slice of extended reals (−∞ allowed, +∞ is not).
///
/// Returns −∞ iff every term is −∞.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &t in terms {
        if t > m {
            m = t;
        }
    }
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut scratch = Vec::with_capacity(terms.len());
    for &t in terms {
        scratch.push((t - m).exp());
    }
    m + pairwise_sum(&scratch).ln()
}

/// log(e^a + e^b) for two extended reals.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// For each ascending query `x`, the discrete support-function value
/// `max_j (x * y[j] + v[j])`, skipping −∞ entries of `v`.
///
/// `y` must be strictly increasing. Small inputs fall back to the direct
/// scan; larger ones go through the upper concave envelope of the points
/// `(y_j, v_j)` and a two-pointer sweep, which is linear in points plus
/// queries. The maximum over a point set equals the maximum over its
/// upper envelope vertices, so the envelope route returns the same values
/// as the direct scan up to round-off in the shared expression `x*y + v`.
///
/// Writes −∞ when no finite point exists.
pub fn max_plus_envelope(y: &[f64], v: &[f64], queries: &[f64], out: &mut [f64]) {
    debug_assert_eq!(y.len(), v.len());
    debug_assert_eq!(queries.len(), out.len());
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(y.len());
    for j in 0..y.len() {
        if v[j] != f64::NEG_INFINITY {
            pts.push((y[j], v[j]));
        }
    }
    if pts.is_empty() {
        out.fill(f64::NEG_INFINITY);
        return;
    }
    if pts.len() < 8 {
        for (i, &x) in queries.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for &(yy, vv) in &pts {
                let t = x * yy + vv;
                if t > best {
                    best = t;
                }
            }
            out[i] = best;
        }
        return;
    }
    // Upper concave envelope, monotone chain over points already sorted in y.
    // Collinear points are kept; extra vertices cost nothing and keep the
    // evaluated expression identical to the direct scan.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // pop b when it is strictly below chord a-p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
            if cross > 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    // Argmax index is nondecreasing along ascending queries.
    let mut k = 0usize;
    for (i, &x) in queries.iter().enumerate() {
        while k + 1 < hull.len() {
            let cur = x * hull[k].0 + hull[k].1;
            let nxt = x * hull[k + 1].0 + hull[k + 1].1;
            if nxt >= cur {
                k += 1;
            } else {
                break;
            }
        }
        out[i] = x * hull[k].0 + hull[k].1;
    }
}

/// Solve `H d = -g` for a symmetric positive definite `H` (row-major, n x n)
/// via unpivoted Cholesky. Returns `None` when a pivot collapses relative to
/// the largest diagonal entry (condition estimate beyond `cond_limit`).
pub fn solve_spd_neg(h: &[f64], g: &[f64], n: usize, cond_limit: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; n * n];
    let mut max_diag = 0.0f64;
    for i in 0..n {
        max_diag = max_diag.max(h[i * n + i].abs());
    }
    if max_diag == 0.0 {
        return None;
    }
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= max_diag / cond_limit {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward then backward substitution on -g
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = -g[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut d = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * d[k];
        }
        d[i] = s / l[i * n + i];
    }
    Some(d)
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
