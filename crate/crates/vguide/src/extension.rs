//! Caffarelli–Silvestre extension, weighted Dirichlet energy and the
//! Dirichlet-to-Neumann trace.
//!
//! The extension of `u` into the upper half-space solves
//! `−div(t^{1−2s}∇U) = 0`, `U(·,0) = u`, and is the convolution of `u` with
//! the generalized Poisson kernel
//!
//! ```text
//!   P_s(x,t) = Γ((n+2s)/2)/(π^{n/2}Γ(s)) · t^{2s}/(|x|²+t²)^{n/2+s}.
//! ```
//!
//! Its Fourier transform is `ψ_s(|ξ|t)` (see [`crate::special`]).  On a grid
//! the convolution is carried out with the band-limited sampled kernel: each
//! slice is `F⁻¹[ψ_s(|ξ_k| t) û_k]` on a zero-padded periodic cell.  This keeps
//! unit mass exactly (ψ_s(0) = 1) and has no pointwise under-resolution at
//! `t < h`; the kernel's peak is integrated exactly over the Brillouin zone.
//!
//! The energy identity `a_s[u] = C_s E_s(U)` with
//! `C_s = 4^s Γ(s+1)/(2s Γ(1−s))` links this module to [`crate::fracform`].

use crate::error::{Error, Result};
use crate::fft::{good_size, signed_index, FftNd};
use crate::fracform::{FracOrder, GridFunction};
use crate::geometry::{Grid, Mask};
use crate::special::{cs_constant, gamma, PsiProfile};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// `C_s = 4^s Γ(s+1)/(2s Γ(1−s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsConstant {
    pub s: f64,
    pub value: f64,
}

impl CsConstant {
    pub fn new(s: FracOrder) -> Self {
        CsConstant { s: s.value(), value: cs_constant(s.value()) }
    }
}

/// Generalized Poisson kernel `P_s(x, t)` in dimension `n = x.len()`.
pub fn poisson_kernel(x: &[f64], t: f64, s: FracOrder) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("Poisson kernel needs t > 0, got {t}")));
    }
    let n = x.len() as f64;
    let s = s.value();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let c = gamma((n + 2.0 * s) / 2.0) / (std::f64::consts::PI.powf(n / 2.0) * gamma(s));
    Ok(c * t.powf(2.0 * s) / (r2 + t * t).powf(n / 2.0 + s))
}

/// Geometric t-grid policy: `t₀ = 0`, `t₁ = first_over_h·h`, ratio `ratio`, up to `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub first_over_h: f64,
    pub ratio: f64,
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid { first_over_h: 0.25, ratio: 1.25 }
    }
}

impl TGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.first_over_h > 0.0 && self.first_over_h <= 1.0) {
            return Err(Error::Config(format!("first t-slice must be in (0, h], got {}·h", self.first_over_h)));
        }
        if !(self.ratio > 1.0 && self.ratio <= 2.0) {
            return Err(Error::Config(format!("t-grid ratio must be in (1, 2], got {}", self.ratio)));
        }
        Ok(())
    }

    /// Levels `0, t₁, t₁q, …` with the last level the first one `≥ t_max`.
    pub fn levels(&self, h: f64, t_max: f64) -> Vec<f64> {
        let mut t = vec![0.0, self.first_over_h * h];
        while *t.last().expect("non-empty") < t_max {
            let next = t.last().expect("non-empty") * self.ratio;
            t.push(next);
        }
        t
    }
}

/// Samples of an extension field on a grid × t-slices.
///
/// Fields produced by [`cs_extend`] live on a periodic `cell` that shares
/// origin and spacing with `base` and extends it by the padding factor; slice 0
/// is the input trace embedded in the cell.  Fields assembled from samples with
/// [`ExtensionField::from_slices`] live on a plain (non-periodic) window.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    base: Grid,
    cell: Grid,
    t: Vec<f64>,
    values: Vec<Vec<f64>>,
    periodic: bool,
}

impl ExtensionField {
    /// Field on a non-periodic window from explicit slices (`t[0] = 0`).
    pub fn from_slices(grid: Grid, t: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_levels(&t)?;
        if values.len() != t.len() || values.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::Argument("slice count or slice size does not match the levels and grid".into()));
        }
        Ok(ExtensionField { base: grid.clone(), cell: grid, t, values, periodic: false })
    }

    /// Whether differences wrap around the window.
    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn base(&self) -> &Grid {
        &self.base
    }

    pub fn cell(&self) -> &Grid {
        &self.cell
    }

    pub fn t_slices(&self) -> &[f64] {
        &self.t
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// Value at a base-grid node on slice `k`.
    pub fn at_base(&self, k: usize, base_flat: usize) -> f64 {
        let idx = self.base.unflatten(base_flat);
        self.values[k][self.cell.flatten(&idx)]
    }

    /// Multiply every slice by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for sl in out.values.iter_mut() {
            for v in sl.iter_mut() {
                *v *= c;
            }
        }
        out
    }

    /// Add `f(x, t)` to every sample; slice 0 is left untouched when `keep_trace`.
    pub fn perturbed(&self, f: impl Fn(&[f64], f64) -> f64, keep_trace: bool) -> Self {
        let mut out = self.clone();
        for (k, sl) in out.values.iter_mut().enumerate() {
            if keep_trace && k == 0 {
                continue;
            }
            let t = self.t[k];
            for (i, v) in sl.iter_mut().enumerate() {
                *v += f(&self.cell.position(i), t);
            }
        }
        out
    }
}

fn cell_for(base: &Grid, padding: f64) -> Result<Grid> {
    if !(padding >= 2.0) {
        return Err(Error::Config(format!("padding factor {padding} < 2")));
    }
    let dims: Vec<usize> = base.dims().iter().map(|&d| good_size((padding * d as f64).ceil() as usize)).collect();
    Grid::new(base.h(), base.origin().to_vec(), dims)
}

fn check_levels(t_slices: &[f64]) -> Result<()> {
    if t_slices.is_empty() || t_slices[0] != 0.0 {
        return Err(Error::Argument("t-slices must start with the trace level t = 0".into()));
    }
    if t_slices.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("t-slices must be strictly increasing".into()));
    }
    Ok(())
}

/// Extension of `u` on the t-levels `t_slices` (first level must be 0).
pub fn cs_extend(u: &GridFunction, s: FracOrder, t_slices: &[f64], padding: f64) -> Result<ExtensionField> {
    let mut values = Vec::with_capacity(t_slices.len());
    let cell = for_each_slice(u, s, t_slices, padding, |_, _, _, slice| values.push(slice.to_vec()))?;
    Ok(ExtensionField { base: u.grid().clone(), cell, t: t_slices.to_vec(), values, periodic: true })
}

/// Stream the extension slices of `u` on the padded periodic cell without
/// keeping them: `visit(k, t_k, cell, slice_k)`.  Returns the cell grid.
pub fn for_each_slice(
    u: &GridFunction,
    s: FracOrder,
    t_slices: &[f64],
    padding: f64,
    mut visit: impl FnMut(usize, f64, &Grid, &[f64]),
) -> Result<Grid> {
    check_levels(t_slices)?;
    let base = u.grid().clone();
    let cell = cell_for(&base, padding)?;
    let dims = cell.dims().to_vec();
    let fft = FftNd::new(&dims);
    let n = cell.len();
    let h = cell.h();

    let mut trace = vec![0.0; n];
    for f in 0..base.len() {
        let v = u.values()[f];
        if v != 0.0 {
            trace[cell.flatten(&base.unflatten(f))] = v;
        }
    }
    let mut spec: Vec<Complex64> = trace.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut spec);

    let xi: Vec<f64> = (0..n)
        .map(|f| {
            let idx = cell.unflatten(f);
            let mut q = 0.0;
            for (a, &i) in idx.iter().enumerate() {
                let th = 2.0 * std::f64::consts::PI * signed_index(i, dims[a]) as f64 / dims[a] as f64;
                q += th * th;
            }
            q.sqrt() / h
        })
        .collect();
    let psi = PsiProfile::new(s.value());

    visit(0, 0.0, &cell, &trace);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut slice = vec![0.0; n];
    for (k, &t) in t_slices.iter().enumerate().skip(1) {
        for ((b, &sp), &x) in buf.iter_mut().zip(&spec).zip(&xi) {
            *b = sp * (psi.psi(x * t) / n as f64);
        }
        fft.inverse(&mut buf);
        for (o, c) in slice.iter_mut().zip(&buf) {
            *o = c.re;
        }
        visit(k, t, &cell, &slice);
    }
    Ok(cell)
}

/// Breakdown of a weighted-energy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Quadrature over the sampled slices.
    pub sampled: f64,
    /// Geometric extrapolation of the part beyond the top slice.
    pub tail: f64,
    /// Share of the last slice interval in the sampled part.
    pub top_fraction: f64,
}

impl EnergyReport {
    pub fn total(&self) -> f64 {
        self.sampled + self.tail
    }
}

/// Exact moments of `t^{1−2s}` on `[t0, t1]` against the linear hat weights:
/// `(∫ t^{1−2s}, weight of the left node, weight of the right node)`.
pub fn slice_weights(t0: f64, t1: f64, s: f64) -> (f64, f64, f64) {
    let a = 2.0 - 2.0 * s;
    let dt = t1 - t0;
    let m0 = (t1.powf(a) - t0.powf(a)) / a;
    let m1 = (t1.powf(a + 1.0) - t0.powf(a + 1.0)) / (a + 1.0);
    let w_right = (m1 - t0 * m0) / dt;
    (m0, m0 - w_right, w_right)
}

/// `∫ t^{1−2s}(∂_t U)² dt` over `[t0, t1]` per unit squared jump of `U`, with
/// `U` interpolated linearly in `τ = t^{2s}`: `2s/(t1^{2s} − t0^{2s})`.
///
/// Near the trace the extension behaves like `u + c·t^{2s}`, which this
/// interpolation reproduces exactly; a secant linear in `t` would carry a
/// scale-invariant bias on every interval of the geometric grid (it does not
/// shrink under refinement in `h`).  At `s = ½` both coincide.
pub fn t_weight(t0: f64, t1: f64, s: f64) -> f64 {
    2.0 * s / (t1.powf(2.0 * s) - t0.powf(2.0 * s))
}

/// Central difference of `v` along axis `a` at `f`; one-sided at the window
/// edges unless `periodic`.
pub(crate) fn axis_difference(dims: &[usize], strides: &[usize], h: f64, v: &[f64], f: usize, a: usize, periodic: bool) -> f64 {
    let i = (f / strides[a]) % dims[a];
    let n = dims[a];
    if n < 2 {
        return 0.0;
    }
    if periodic {
        let up = if i + 1 == n { f + strides[a] - n * strides[a] } else { f + strides[a] };
        let dn = if i == 0 { f + (n - 1) * strides[a] } else { f - strides[a] };
        (v[up] - v[dn]) / (2.0 * h)
    } else if i == 0 {
        (v[f + strides[a]] - v[f]) / h
    } else if i + 1 == n {
        (v[f] - v[f - strides[a]]) / h
    } else {
        (v[f + strides[a]] - v[f - strides[a]]) / (2.0 * h)
    }
}

pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    (0..dims.len()).map(|a| dims[a + 1..].iter().product()).collect()
}

fn gradient_sq(grid: &Grid, v: &[f64], periodic: bool) -> f64 {
    let dims = grid.dims();
    let nd = dims.len();
    let h = grid.h();
    let strides = strides_of(dims);
    let mut total = 0.0;
    for f in 0..v.len() {
        let mut g2 = 0.0;
        for a in 0..nd {
            let d = axis_difference(dims, &strides, h, v, f, a, periodic);
            g2 += d * d;
        }
        total += g2;
    }
    total * h.powi(nd as i32)
}

/// `∫₀^∞∫ t^{1−2s}|∇U|² dx dt` with its quadrature diagnostics.
pub fn weighted_energy_report(field: &ExtensionField, s: FracOrder) -> Result<EnergyReport> {
    let t = &field.t;
    if t.len() < 9 {
        return Err(Error::Argument(format!("{} positive t-slices given, at least 8 needed", t.len() - 1)));
    }
    let s = s.value();
    let grid = &field.cell;
    let hn = grid.h().powi(grid.dim() as i32);
    let grads: Vec<f64> = field.values.iter().map(|v| gradient_sq(grid, v, field.periodic)).collect();
    let mut per_interval = Vec::with_capacity(t.len() - 1);
    for k in 0..t.len() - 1 {
        let (t0, t1) = (t[k], t[k + 1]);
        let (_, w_left, w_right) = slice_weights(t0, t1, s);
        let jump: f64 = field.values[k + 1].iter().zip(&field.values[k]).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() * hn;
        per_interval.push(jump * t_weight(t0, t1, s) + grads[k] * w_left + grads[k + 1] * w_right);
    }
    let sampled: f64 = per_interval.iter().sum();
    if sampled == 0.0 {
        return Ok(EnergyReport { sampled: 0.0, tail: 0.0, top_fraction: 0.0 });
    }
    let last = per_interval[per_interval.len() - 1];
    let prev = per_interval[per_interval.len() - 2];
    let q = last / prev;
    let tail = if q < 1.0 { last * q / (1.0 - q) } else { f64::INFINITY };
    let report = EnergyReport { sampled, tail, top_fraction: last / sampled };
    if !(tail <= 0.05 * sampled) {
        return Err(Error::Truncation(format!(
            "tail estimate {tail:.3e} exceeds 5% of the sampled energy {sampled:.3e}; raise t_max"
        )));
    }
    Ok(report)
}

/// Weighted Dirichlet energy `E_s(U)` including the extrapolated tail.
pub fn weighted_energy(field: &ExtensionField, s: FracOrder) -> Result<f64> {
    Ok(weighted_energy_report(field, s)?.total())
}

/// Default t-levels for a field on `base`: up to the cell length.
pub fn default_levels(base: &Grid, padding: f64, policy: TGrid) -> Vec<f64> {
    let longest = base.dims().iter().map(|&d| (padding * d as f64).ceil()).fold(0.0, f64::max) * base.h();
    policy.levels(base.h(), longest)
}

/// Dirichlet-to-Neumann trace `−C_s lim t^{1−2s}∂_tU` from a fit
/// `U(x,t) ≈ U(x,0) + c(x) t^{2s} + d(x) t²` on the first three positive slices.
pub fn dtn_trace(field: &ExtensionField, s: FracOrder) -> Result<GridFunction> {
    let t = &field.t;
    if t.len() < 4 {
        return Err(Error::Argument("dtn fit needs three positive slices".into()));
    }
    if t[1] > field.base.h() * (1.0 + 1e-12) {
        return Err(Error::BoundaryLayer(format!("first slice t₁ = {} exceeds h = {}", t[1], field.base.h())));
    }
    let sv = s.value();
    let cs = cs_constant(sv);
    // Normal equations of the 3×2 least-squares problem, identical for every node.
    let basis: Vec<[f64; 2]> = (1..4).map(|k| [t[k].powf(2.0 * sv), t[k] * t[k]]).collect();
    let (mut g00, mut g01, mut g11) = (0.0, 0.0, 0.0);
    for b in &basis {
        g00 += b[0] * b[0];
        g01 += b[0] * b[1];
        g11 += b[1] * b[1];
    }
    let det = g00 * g11 - g01 * g01;
    let base = &field.base;
    let mut out = vec![0.0; base.len()];
    let (mut res2, mut dat2) = (0.0, 0.0);
    for (f, o) in out.iter_mut().enumerate() {
        let cf = field.cell.flatten(&base.unflatten(f));
        let u0 = field.values[0][cf];
        let y: Vec<f64> = (1..4).map(|k| field.values[k][cf] - u0).collect();
        let r0: f64 = basis.iter().zip(&y).map(|(b, v)| b[0] * v).sum();
        let r1: f64 = basis.iter().zip(&y).map(|(b, v)| b[1] * v).sum();
        let c = (g11 * r0 - g01 * r1) / det;
        let d = (g00 * r1 - g01 * r0) / det;
        for (b, v) in basis.iter().zip(&y) {
            let r = v - c * b[0] - d * b[1];
            res2 += r * r;
            dat2 += v * v;
        }
        *o = -cs * 2.0 * sv * c;
    }
    if dat2 > 0.0 && (res2 / dat2).sqrt() > 0.1 {
        return Err(Error::BoundaryLayer(format!(
            "boundary-layer fit residual {:.1}% exceeds 10%",
            100.0 * (res2 / dat2).sqrt()
        )));
    }
    GridFunction::new(base.clone(), Arc::new(Mask::full(base)), out)
}

/// `∫₀^T t^{1−2s} ‖U(·,t)‖² dt` by the product trapezoid rule on the slices below `T`.
pub fn weighted_l2_up_to(field: &ExtensionField, s: FracOrder, t_upper: f64) -> f64 {
    let a = 2.0 - 2.0 * s.value();
    let hn = field.cell.h().powi(field.cell.dim() as i32);
    let norms: Vec<f64> = field.values.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>() * hn).collect();
    let mut total = 0.0;
    for k in 0..field.t.len() - 1 {
        let (t0, t1) = (field.t[k], field.t[k + 1]);
        if t1 > t_upper {
            break;
        }
        let m0 = (t1.powf(a) - t0.powf(a)) / a;
        total += 0.5 * (norms[k] + norms[k + 1]) * m0;
    }
    total
}

/// `‖U(·,t_k)‖²` for every slice.
pub fn slice_norms(field: &ExtensionField) -> Vec<f64> {
    let hn = field.cell.h().powi(field.cell.dim() as i32);
    field.values.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>() * hn).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracform::form_energy;
    use std::f64::consts::PI;

    fn bump_1d(h: f64, n: usize) -> GridFunction {
        let g = Grid::new(h, vec![0.0], vec![n]).unwrap();
        let m = Arc::new(Mask::full(&g));
        let c = 0.5 * (n - 1) as f64 * h;
        GridFunction::sample(g, m, |p| {
            let r = (p[0] - c) / 0.3;
            if r.abs() < 1.0 { (1.0 - r * r).powi(3) } else { 0.0 }
        })
        .unwrap()
    }

    #[test]
    fn half_order_line_kernel_is_cauchy() {
        let s = FracOrder::new(0.5).unwrap();
        assert!((poisson_kernel(&[0.0], 1.0, s).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(poisson_kernel(&[0.0], 0.0, s).is_err());
    }

    #[test]
    fn kernel_is_homogeneous() {
        let s = FracOrder::new(0.3).unwrap();
        let a = poisson_kernel(&[0.4, -0.2], 0.7, s).unwrap();
        let b = poisson_kernel(&[0.8, -0.4], 1.4, s).unwrap();
        assert!((b - a / 4.0).abs() < 1e-15 * a);
    }

    #[test]
    fn cs_constant_has_reference_value() {
        let c = CsConstant::new(FracOrder::new(0.5).unwrap());
        assert!((c.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_trace_extends_to_zero() {
        let g = Grid::new(0.1, vec![0.0], vec![16]).unwrap();
        let m = Arc::new(Mask::full(&g));
        let u = GridFunction::zeros(g, m);
        let s = FracOrder::new(0.4).unwrap();
        let f = cs_extend(&u, s, &TGrid::default().levels(0.1, 3.0), 4.0).unwrap();
        assert!(f.values.iter().all(|sl| sl.iter().all(|&v| v == 0.0)));
        assert_eq!(weighted_energy(&f, s).unwrap(), 0.0);
    }

    #[test]
    fn trace_slice_is_exact_and_slices_are_bounded() {
        let u = bump_1d(1.0 / 32.0, 48);
        let s = FracOrder::new(0.5).unwrap();
        let f = cs_extend(&u, s, &TGrid::default().levels(1.0 / 32.0, 4.0), 4.0).unwrap();
        for i in 0..48 {
            assert_eq!(f.at_base(0, i), u.values()[i]);
        }
        let umax = u.values().iter().cloned().fold(0.0, f64::max);
        for k in 1..f.t.len() {
            assert!(f.values[k].iter().all(|&v| v <= umax + 1e-12));
        }
    }

    #[test]
    fn slices_must_increase() {
        let u = bump_1d(0.1, 16);
        let s = FracOrder::new(0.5).unwrap();
        assert!(matches!(cs_extend(&u, s, &[0.0, 0.2, 0.1], 4.0), Err(Error::Argument(_))));
    }

    #[test]
    fn energy_identity_in_one_dimension() {
        for &sv in &[0.3, 0.5, 0.7] {
            let s = FracOrder::new(sv).unwrap();
            let u = bump_1d(1.0 / 64.0, 96);
            let levels = default_levels(u.grid(), 4.0, TGrid::default());
            let f = cs_extend(&u, s, &levels, 4.0).unwrap();
            let e = cs_constant(sv) * weighted_energy(&f, s).unwrap();
            let a = form_energy(&u, s).unwrap();
            assert!((e / a - 1.0).abs() < 0.02, "s={sv}: {e} vs {a}");
        }
    }

    #[test]
    fn energy_is_quadratic_in_amplitude() {
        let s = FracOrder::new(0.5).unwrap();
        let u = bump_1d(1.0 / 32.0, 48);
        let f = cs_extend(&u, s, &default_levels(u.grid(), 4.0, TGrid::default()), 4.0).unwrap();
        let e1 = weighted_energy(&f, s).unwrap();
        let e2 = weighted_energy(&f.scaled(2.0), s).unwrap();
        assert!((e2 - 4.0 * e1).abs() < 1e-10 * e1);
    }

    #[test]
    fn dtn_is_linear() {
        let s = FracOrder::new(0.5).unwrap();
        let u = bump_1d(1.0 / 32.0, 48);
        let v = u.scaled(-0.5).add(&bump_1d(1.0 / 32.0, 48).scaled(0.25)).unwrap();
        let levels = TGrid::default().levels(1.0 / 32.0, 2.0);
        let du = dtn_trace(&cs_extend(&u, s, &levels, 4.0).unwrap(), s).unwrap();
        let dv = dtn_trace(&cs_extend(&v, s, &levels, 4.0).unwrap(), s).unwrap();
        let w = u.add(&v).unwrap();
        let dw = dtn_trace(&cs_extend(&w, s, &levels, 4.0).unwrap(), s).unwrap();
        for i in 0..48 {
            assert!((dw.values()[i] - du.values()[i] - dv.values()[i]).abs() < 1e-8);
        }
    }
}
