//! Separable multi-dimensional complex FFT on row-major buffers.
//!
//! `rustfft` only ships one-dimensional plans; an n-d transform is the
//! composition of 1-d transforms along each axis.  The last axis is
//! contiguous and transformed in place; other axes are gathered into a
//! contiguous scratch block, transformed, and scattered back.  Transforms are
//! unnormalized in both directions.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct FftNd {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("dims", &self.dims).finish()
    }
}

impl FftNd {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let forward = dims.iter().map(|&d| planner.plan_fft_forward(d)).collect();
        let inverse = dims.iter().map(|&d| planner.plan_fft_inverse(d)).collect();
        FftNd { dims: dims.to_vec(), forward, inverse }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse; divide by [`FftNd::len`] to undo [`FftNd::forward`].
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len(), "buffer does not match transform shape");
        let nd = self.dims.len();
        let mut scratch = Vec::new();
        for axis in (0..nd).rev() {
            let len = self.dims[axis];
            if len == 1 {
                continue;
            }
            let plan = &plans[axis];
            let stride: usize = self.dims[axis + 1..].iter().product();
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let block = len * stride;
            scratch.resize(block, Complex64::new(0.0, 0.0));
            for chunk in data.chunks_mut(block) {
                for k in 0..len {
                    let row = &chunk[k * stride..(k + 1) * stride];
                    for (j, v) in row.iter().enumerate() {
                        scratch[j * len + k] = *v;
                    }
                }
                plan.process(&mut scratch);
                for k in 0..len {
                    let row = &mut chunk[k * stride..(k + 1) * stride];
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = scratch[j * len + k];
                    }
                }
            }
        }
    }
}

/// Smallest integer `≥ n` whose only prime factors are 2, 3 and 5.
pub fn good_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Signed integer frequency of DFT index `k` on a cell of length `n`,
/// in `(−n/2, n/2]`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if 2 * k > n {
        k as i64 - n as i64
    } else {
        k as i64
    }
}
