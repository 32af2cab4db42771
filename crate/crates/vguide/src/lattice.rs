//! Lattice kernel of the Fourier multiplier `|ξ|^{2s}`.
//!
//! On a uniform grid of spacing `h` the form `∫_B |ξ|^{2s}|û(ξ)|² dξ`, with `û`
//! the lattice Fourier transform and `B = [−π/h, π/h]ⁿ` the Brillouin zone, is
//! the quadratic form of the Toeplitz matrix
//!
//! ```text
//!   M_ij = hⁿ · h^{−2s} · c(i − j),   c(m) = (2π)^{−n} ∫_{[−π,π]ⁿ} |θ|^{2s} e^{iθ·m} dθ .
//! ```
//!
//! `c` depends only on `(n, s)`; it is computed once per requested extent with
//! a separable DCT-I of `|θ|^{2s}` sampled on a fine frequency grid of `N_f`
//! points per axis.  Sampling replaces `c(m)` by `Σ_p c(m + p N_f)`; the images
//! sit at least three extents away and decay like `|m|^{−n−2s}`, so the fine
//! grid is chosen large enough (see [`fine_size`]) to push them below 1e−9 of
//! the nearest-neighbour coupling.
//!
//! Kernels are memoized by the exact triple `(n, s, extent)`, so a result never
//! depends on which other kernels were requested earlier.

use crate::fft::FftNd;
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// `c(m)` for `0 ≤ m_a < extent_a`; the kernel is even in every coordinate.
#[derive(Debug, Clone)]
pub struct LatticeKernel {
    dim: usize,
    s: f64,
    extent: Vec<usize>,
    values: Vec<f64>,
}

impl LatticeKernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    /// Kernel value at a signed lattice offset; panics outside the extent.
    pub fn at(&self, offset: &[i64]) -> f64 {
        let mut flat = 0usize;
        for (a, &o) in offset.iter().enumerate() {
            let m = o.unsigned_abs() as usize;
            assert!(m < self.extent[a], "offset {offset:?} outside kernel extent {:?}", self.extent);
            flat = flat * self.extent[a] + m;
        }
        self.values[flat]
    }

    /// Raw row-major values over the non-negative octant.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Fine frequency-grid size used for an axis of the given extent.
pub fn fine_size(dim: usize, extent: usize) -> usize {
    let floor = match dim {
        1 => 1 << 16,
        2 => 1 << 12,
        _ => 1 << 8,
    };
    (4 * extent).next_power_of_two().max(floor)
}

type KernelKey = (usize, u64, Vec<usize>);

fn cache() -> &'static Mutex<HashMap<KernelKey, Arc<LatticeKernel>>> {
    static CACHE: OnceLock<Mutex<HashMap<KernelKey, Arc<LatticeKernel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The lattice kernel for order `s` in dimension `extent.len()`, memoized.
pub fn lattice_kernel(s: f64, extent: &[usize]) -> Arc<LatticeKernel> {
    let key = (extent.len(), s.to_bits(), extent.to_vec());
    if let Some(k) = cache().lock().expect("kernel cache poisoned").get(&key) {
        return Arc::clone(k);
    }
    let kernel = Arc::new(compute_kernel(s, extent));
    cache()
        .lock()
        .expect("kernel cache poisoned")
        .entry(key)
        .or_insert(kernel)
        .clone()
}

/// DCT-I of `x₀..x_M` truncated to its first `keep` outputs:
/// `y_m = Σ_k w_k x_k cos(π k m / M)`, `w = 1` at the ends and 2 inside.
fn dct1_truncated(x: &[f64], keep: usize, plan: &FftNd, buf: &mut Vec<Complex64>, out: &mut [f64]) {
    let m = x.len() - 1;
    buf.clear();
    buf.extend(x.iter().map(|&v| Complex64::new(v, 0.0)));
    buf.extend(x[1..m].iter().rev().map(|&v| Complex64::new(v, 0.0)));
    plan.forward(buf);
    for (o, b) in out.iter_mut().zip(buf.iter()).take(keep) {
        *o = b.re;
    }
}

fn compute_kernel(s: f64, extent: &[usize]) -> LatticeKernel {
    let n = extent.len();
    assert!((1..=3).contains(&n), "lattice kernels exist for n = 1, 2, 3");
    assert!(extent.iter().all(|&e| e >= 1));
    let nf: Vec<usize> = extent.iter().map(|&e| fine_size(n, e)).collect();
    let half: Vec<usize> = nf.iter().map(|&f| f / 2).collect();
    let plans: Vec<FftNd> = nf.iter().map(|&f| FftNd::new(&[f])).collect();
    let mut buf = Vec::new();

    // Pass over the last axis: generate each line of |θ|^{2s} on the fly.
    let last = n - 1;
    let outer_shape: Vec<usize> = half[..last].iter().map(|&m| m + 1).collect();
    let outer_count: usize = outer_shape.iter().product();
    let mut shape: Vec<usize> = outer_shape.clone();
    shape.push(extent[last]);
    let mut data = vec![0.0; outer_count * extent[last]];
    let mut line = vec![0.0; half[last] + 1];
    let mut idx = vec![0usize; last];
    for o in 0..outer_count {
        let mut rem = o;
        for a in (0..last).rev() {
            idx[a] = rem % outer_shape[a];
            rem /= outer_shape[a];
        }
        let base: f64 = idx
            .iter()
            .enumerate()
            .map(|(a, &k)| {
                let th = std::f64::consts::PI * k as f64 / half[a] as f64;
                th * th
            })
            .sum();
        for (k, v) in line.iter_mut().enumerate() {
            let th = std::f64::consts::PI * k as f64 / half[last] as f64;
            *v = (base + th * th).powf(s);
        }
        let out = &mut data[o * extent[last]..(o + 1) * extent[last]];
        dct1_truncated(&line, extent[last], &plans[last], &mut buf, out);
    }

    // Remaining axes, innermost first, truncating as we go.
    for axis in (0..last).rev() {
        let len_in = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let len_out = extent[axis];
        let mut next = vec![0.0; outer * len_out * stride];
        let mut col = vec![0.0; len_in];
        let mut res = vec![0.0; len_out];
        for o in 0..outer {
            for j in 0..stride {
                for k in 0..len_in {
                    col[k] = data[(o * len_in + k) * stride + j];
                }
                dct1_truncated(&col, len_out, &plans[axis], &mut buf, &mut res);
                for (m, &r) in res.iter().enumerate() {
                    next[(o * len_out + m) * stride + j] = r;
                }
            }
        }
        data = next;
        shape[axis] = len_out;
    }

    let norm: f64 = nf.iter().map(|&f| f as f64).product();
    for v in data.iter_mut() {
        *v /= norm;
    }
    LatticeKernel { dim: n, s, extent: extent.to_vec(), values: data }
}
