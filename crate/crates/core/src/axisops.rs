//! Per-axis application of separable kernels in the log domain.
//!
//! Every transform and flow kernel in this crate factorizes over axes as
//! `k(i, j) = base(i) + query(i)·x(j) + offset(j)`, so an n-dimensional
//! transform is a sequence of one-dimensional passes. Each output element is
//! reduced in a fixed order, which keeps results bit-identical regardless of
//! how the passes are scheduled across threads.

use rayon::prelude::*;

use crate::num::{max_plus_envelope, pairwise_sum};

/// One separable kernel factor along a single axis.
///
/// `query` must be ascending in the output index (true for every kernel in
/// this crate since output nodes are ascending grid nodes).
pub(crate) struct AxisKernel {
    pub base: Vec<f64>,
    pub query: Vec<f64>,
    pub points: Vec<f64>,
    pub offset: Vec<f64>,
}

impl AxisKernel {
    fn m(&self) -> usize {
        self.base.len()
    }
}

struct SliceView {
    outer: usize,
    inner: usize,
    n: usize,
}

fn slice_view(dims: &[usize], axis: usize) -> SliceView {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    SliceView { outer, inner, n: dims[axis] }
}

/// log-sum-exp pass: `out[o,i,r] = lse_j(base_i + query_i·x_j + offset_j + src[o,j,r])`.
///
/// Updates `dims[axis]` to the kernel's output size and returns the new data.
pub(crate) fn logsumexp_axis(src: &[f64], dims: &mut Vec<usize>, axis: usize, k: &AxisKernel) -> Vec<f64> {
    let v = slice_view(dims, axis);
    let m = k.m();
    debug_assert_eq!(k.points.len(), v.n);
    debug_assert_eq!(k.offset.len(), v.n);
    let out_len = v.outer * m * v.inner;
    let mut out = vec![0.0f64; out_len];

    let process_slice = |slice: &[f64], out_col: &mut [f64], scratch: &mut Scratch| {
        scratch.fill_points(slice, &k.points, &k.offset);
        if scratch.xs.is_empty() {
            out_col.fill(f64::NEG_INFINITY);
            return;
        }
        // shift pass via the envelope (any finite shift works for stability)
        scratch.shift.resize(m, 0.0);
        max_plus_envelope(&scratch.xs, &scratch.vs, &k.query, &mut scratch.shift);
        for i in 0..m {
            let mi = scratch.shift[i];
            let q = k.query[i];
            scratch.terms.clear();
            for (&x, &v) in scratch.xs.iter().zip(&scratch.vs) {
                scratch.terms.push((v + q * x - mi).exp());
            }
            out_col[i] = k.base[i] + mi + pairwise_sum(&scratch.terms).ln();
        }
    };

    if v.outer > 1 {
        out.par_chunks_mut(m * v.inner)
            .enumerate()
            .for_each_init(Scratch::new, |scratch, (o, chunk)| {
                let src_block = &src[o * v.n * v.inner..(o + 1) * v.n * v.inner];
                let mut slice = vec![0.0f64; v.n];
                let mut col = vec![0.0f64; m];
                for r in 0..v.inner {
                    for j in 0..v.n {
                        slice[j] = src_block[j * v.inner + r];
                    }
                    process_slice(&slice, &mut col, scratch);
                    for i in 0..m {
                        chunk[i * v.inner + r] = col[i];
                    }
                }
            });
    } else if v.inner > 1 {
        let cols: Vec<Vec<f64>> = (0..v.inner)
            .into_par_iter()
            .map_init(Scratch::new, |scratch, r| {
                let mut slice = vec![0.0f64; v.n];
                for j in 0..v.n {
                    slice[j] = src[j * v.inner + r];
                }
                let mut col = vec![0.0f64; m];
                process_slice(&slice, &mut col, scratch);
                col
            })
            .collect();
        for (r, col) in cols.iter().enumerate() {
            for i in 0..m {
                out[i * v.inner + r] = col[i];
            }
        }
    } else {
        // one slice; parallelize over output nodes
        let mut scratch = Scratch::new();
        scratch.fill_points(src, &k.points, &k.offset);
        if scratch.xs.is_empty() {
            out.fill(f64::NEG_INFINITY);
        } else {
            let mut shift = vec![0.0f64; m];
            max_plus_envelope(&scratch.xs, &scratch.vs, &k.query, &mut shift);
            let xs = &scratch.xs;
            let vs = &scratch.vs;
            out.par_chunks_mut(256).enumerate().for_each(|(c, chunk)| {
                let mut terms = Vec::with_capacity(xs.len());
                for (t, o) in chunk.iter_mut().enumerate() {
                    let i = c * 256 + t;
                    let mi = shift[i];
                    let q = k.query[i];
                    terms.clear();
                    for (&x, &v) in xs.iter().zip(vs) {
                        terms.push((v + q * x - mi).exp());
                    }
                    *o = k.base[i] + mi + pairwise_sum(&terms).ln();
                }
            });
        }
    }

    dims[axis] = m;
    out
}

/// max-plus pass: `out[o,i,r] = max_j(query_i·x_j + src[o,j,r])`.
pub(crate) fn maxplus_axis(src: &[f64], dims: &mut Vec<usize>, axis: usize, points: &[f64], query: &[f64]) -> Vec<f64> {
    let v = slice_view(dims, axis);
    let m = query.len();
    let out_len = v.outer * m * v.inner;
    let mut out = vec![0.0f64; out_len];
    let slices: Vec<(usize, usize)> = (0..v.outer)
        .flat_map(|o| (0..v.inner).map(move |r| (o, r)))
        .collect();
    let cols: Vec<Vec<f64>> = slices
        .par_iter()
        .map(|&(o, r)| {
            let mut slice = vec![0.0f64; v.n];
            for j in 0..v.n {
                slice[j] = src[o * v.n * v.inner + j * v.inner + r];
            }
            let mut col = vec![0.0f64; m];
            max_plus_envelope(points, &slice, query, &mut col);
            col
        })
        .collect();
    for (s, &(o, r)) in slices.iter().enumerate() {
        for i in 0..m {
            out[o * m * v.inner + i * v.inner + r] = cols[s][i];
        }
    }
    dims[axis] = m;
    out
}

/// Interpolating pass used by the Ornstein–Uhlenbeck flow:
/// `out[o,i,r] = lse_m(interp_src(a·x_i + b·z_m) + w_m)` where the
/// interpolation is linear in the log values along the axis.
pub(crate) fn interp_quadrature_axis(
    src: &[f64],
    dims: &mut Vec<usize>,
    axis: usize,
    src_coords: &[f64],
    out_coords: &[f64],
    a: f64,
    b: f64,
    z_nodes: &[f64],
    z_logw: &[f64],
) -> Vec<f64> {
    let v = slice_view(dims, axis);
    let m = out_coords.len();
    let out_len = v.outer * m * v.inner;
    let mut out = vec![0.0f64; out_len];
    let lo = src_coords[0];
    let h = src_coords[1] - src_coords[0];
    let n = src_coords.len();

    let interp = |slice: &[f64], u: f64| -> f64 {
        let t = (u - lo) / h;
        if t < 0.0 || t > (n - 1) as f64 {
            return f64::NEG_INFINITY;
        }
        let i = (t.floor() as usize).min(n - 2);
        let w = t - i as f64;
        let (v0, v1) = (slice[i], slice[i + 1]);
        if w == 0.0 {
            return v0;
        }
        if v0 == f64::NEG_INFINITY || v1 == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        (1.0 - w) * v0 + w * v1
    };

    let slices: Vec<(usize, usize)> = (0..v.outer)
        .flat_map(|o| (0..v.inner).map(move |r| (o, r)))
        .collect();
    let cols: Vec<Vec<f64>> = slices
        .par_iter()
        .map(|&(o, r)| {
            let mut slice = vec![0.0f64; v.n];
            for j in 0..v.n {
                slice[j] = src[o * v.n * v.inner + j * v.inner + r];
            }
            let mut col = vec![0.0f64; m];
            let mut terms = Vec::with_capacity(z_nodes.len());
            for (i, &x) in out_coords.iter().enumerate() {
                terms.clear();
                let mut mx = f64::NEG_INFINITY;
                for (&z, &w) in z_nodes.iter().zip(z_logw) {
                    let t = interp(&slice, a * x + b * z) + w;
                    terms.push(t);
                    if t > mx {
                        mx = t;
                    }
                }
                col[i] = if mx == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    let mut es = Vec::with_capacity(terms.len());
                    for &t in &terms {
                        es.push((t - mx).exp());
                    }
                    mx + pairwise_sum(&es).ln()
                };
            }
            col
        })
        .collect();
    for (s, &(o, r)) in slices.iter().enumerate() {
        for i in 0..m {
            out[o * m * v.inner + i * v.inner + r] = cols[s][i];
        }
    }
    dims[axis] = m;
    out
}

struct Scratch {
    xs: Vec<f64>,
    vs: Vec<f64>,
    shift: Vec<f64>,
    terms: Vec<f64>,
}

impl Scratch {
    fn new() -> Self {
        Scratch { xs: Vec::new(), vs: Vec::new(), shift: Vec::new(), terms: Vec::new() }
    }

    fn fill_points(&mut self, slice: &[f64], points: &[f64], offset: &[f64]) {
        self.xs.clear();
        self.vs.clear();
        for j in 0..slice.len() {
            let v = slice[j];
            if v != f64::NEG_INFINITY {
                self.xs.push(points[j]);
                self.vs.push(v + offset[j]);
            }
        }
    }
}
