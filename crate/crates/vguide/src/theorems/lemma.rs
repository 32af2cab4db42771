//! Change of the opening angle: the measure-preserving pushforward
//! `Ω_β → Ω_α` and the splitting of the form energy into a straight-tube
//! energy plus `cos β` times an indefinite remainder.

use crate::error::{Error, Result};
use crate::extension::{
    axis_difference, for_each_slice, slice_weights, strides_of, weighted_energy_report, CsConstant, ExtensionField, TGrid,
};
use crate::fracform::{form_energy, FracOrder, GridFunction};
use crate::geometry::{jacobian_between, map_between, map_from_tube, membership_mask, Grid, Waveguide};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Multilinear interpolation of `values` on `grid` at `p` (zero outside, or
/// wrapped when `periodic`).
fn interpolate(grid: &Grid, values: &[f64], p: &[f64], periodic: bool) -> f64 {
    let u = grid.locate(p);
    let dims = grid.dims();
    let n = dims.len();
    let base: Vec<i64> = u.iter().map(|x| x.floor() as i64).collect();
    let frac: Vec<f64> = u.iter().zip(&base).map(|(x, b)| x - *b as f64).collect();
    let mut acc = 0.0;
    'corner: for c in 0..(1usize << n) {
        let mut w = 1.0;
        let mut idx = Vec::with_capacity(n);
        for a in 0..n {
            let bit = (c >> a) & 1;
            let mut i = base[a] + bit as i64;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            if periodic {
                i = i.rem_euclid(dims[a] as i64);
            } else if i < 0 || i >= dims[a] as i64 {
                continue 'corner;
            }
            idx.push(i as usize);
        }
        if w != 0.0 {
            acc += w * values[grid.flatten(&idx)];
        }
    }
    acc
}

/// `v = √(sinα/sinβ)·u∘T_{α,β}` on `target = Ω_α` (`α ≤ β`), sampled on
/// `target_grid`; `‖v‖ = ‖u‖` up to interpolation.
pub fn pushforward(u: &GridFunction, source: &Waveguide, target: &Waveguide, target_grid: &Grid) -> Result<GridFunction> {
    let (alpha, beta) = (target.beta(), source.beta());
    if source.cross_section() != target.cross_section() {
        return Err(Error::Argument("pushforward needs a common cross-section".into()));
    }
    if alpha > beta {
        return Err(Error::Argument(format!("pushforward goes to smaller angles: α = {alpha} > β = {beta}")));
    }
    // The preimage of the support must fit the target window.
    let g = u.grid();
    let n = g.dim();
    let (lo, hi) = (target_grid.origin().to_vec(), target_grid.upper());
    for f in 0..g.len() {
        if u.values()[f] == 0.0 {
            continue;
        }
        let p = g.position(f);
        let mut q = p.clone();
        let z = p[n - 1];
        q[0] = (p[0] * beta.sin() - z.abs() * beta.cos() + z.abs() * alpha.cos()) / alpha.sin();
        let inside = z.abs() <= target.truncation() * (1.0 + 1e-12) && (0..n).all(|a| q[a] >= lo[a] && q[a] <= hi[a]);
        if !inside {
            return Err(Error::Geometry(format!(
                "support point {p:?} of u pulls back to {q:?}, outside the target window"
            )));
        }
    }
    let mask = Arc::new(membership_mask(target, target_grid)?);
    let scale = jacobian_between(alpha, beta).sqrt();
    let mut active = Vec::with_capacity(mask.count());
    for &f in mask.nodes() {
        let q = target_grid.position(f);
        let p = map_between(alpha, beta, &q)?;
        active.push(scale * interpolate(g, u.values(), &p, false));
    }
    GridFunction::from_active(target_grid.clone(), mask, &active)
}

/// Straight-tube window `ω ± margin` × `|z| ≤ L + margin` aligned with the
/// cell-centred cross-section nodes and the symmetric z-nodes.
fn tube_grid(w: &Waveguide, h: f64, margin: f64) -> Result<Grid> {
    let omega = w.cross_section();
    let n = w.dim();
    let mut origin = Vec::with_capacity(n);
    let mut dims = Vec::with_capacity(n);
    for a in 0..n - 1 {
        let pad = (margin / h).ceil();
        let cells = ((omega.widths()[a]) / h - 1e-9).ceil();
        origin.push(omega.lower()[a] + 0.5 * h - pad * h);
        dims.push((cells + 2.0 * pad) as usize);
    }
    let j = ((w.truncation() + margin) / h).floor();
    origin.push(-j * h);
    dims.push(2 * j as usize + 1);
    Grid::new(h, origin, dims)
}

/// The extension `U` of `u ∈ Ω_β` seen in straight-tube coordinates:
/// `V(x', y, z, t) = U(T_β(x', y, z), t)/√sinβ` on a window around the tube.
pub fn transplant_to_tube(
    u: &GridFunction,
    w: &Waveguide,
    s: FracOrder,
    levels: &[f64],
    padding: f64,
    margin: f64,
) -> Result<ExtensionField> {
    if !(margin >= 0.0) {
        return Err(Error::Config(format!("tube margin must be non-negative, got {margin}")));
    }
    let beta = w.beta();
    let tube = tube_grid(w, u.grid().h(), margin)?;
    let points: Vec<Vec<f64>> = (0..tube.len()).map(|f| map_from_tube(beta, &tube.position(f))).collect::<Result<_>>()?;
    let scale = 1.0 / beta.sin().sqrt();
    // The periodic cell must hold the preimage of the window plus one copy of
    // the support, so that no periodic image leaks into the window.
    let base = u.grid();
    let mut padding = padding;
    for a in 0..base.dim() {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[a]), h.max(p[a])));
        let extent = base.dims()[a] as f64 * base.h();
        padding = padding.max((hi - lo + extent) / extent);
    }
    let mut slices = Vec::with_capacity(levels.len());
    for_each_slice(u, s, levels, padding, |_, _, cell, slice| {
        slices.push(points.iter().map(|p| scale * interpolate(cell, slice, p, true)).collect::<Vec<f64>>());
    })?;
    ExtensionField::from_slices(tube, levels.to_vec(), slices)
}

/// `𝔯(V) = −2C_s ∫ t^{1−2s} sgn(z) ∂_{x'}V ∂_zV` over the tube window.
pub fn remainder_term(field: &ExtensionField, s: FracOrder) -> Result<f64> {
    let grid = field.cell();
    let dims = grid.dims().to_vec();
    let n = dims.len();
    let h = grid.h();
    let strides = strides_of(&dims);
    let hn = h.powi(n as i32);
    let t = field.t_slices();
    if t.len() < 3 {
        return Err(Error::Argument("the remainder needs at least two positive t-slices".into()));
    }
    let periodic = field.is_periodic();
    let per_slice: Vec<f64> = (0..t.len())
        .map(|k| {
            let v = field.slice(k);
            let mut acc = 0.0;
            for f in 0..v.len() {
                let z = grid.position(f)[n - 1];
                if z == 0.0 {
                    continue;
                }
                let dx = axis_difference(&dims, &strides, h, v, f, 0, periodic);
                let dz = axis_difference(&dims, &strides, h, v, f, n - 1, periodic);
                acc += z.signum() * dx * dz;
            }
            acc * hn
        })
        .collect();
    let mut intervals = Vec::with_capacity(t.len() - 1);
    for k in 0..t.len() - 1 {
        let (_, wl, wr) = slice_weights(t[k], t[k + 1], s.value());
        intervals.push(per_slice[k] * wl + per_slice[k + 1] * wr);
    }
    let sampled: f64 = intervals.iter().sum();
    let (last, prev) = (intervals[intervals.len() - 1], intervals[intervals.len() - 2]);
    let q = last / prev;
    let tail = if q > 0.0 && q < 1.0 { last * q / (1.0 - q) } else { 0.0 };
    Ok(-2.0 * CsConstant::new(s).value * (sampled + tail))
}

/// Controls of the energy-splitting audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaOptions {
    /// Extra width of the tube window around `ω` and beyond `L`.
    pub margin: f64,
    /// Highest t-level of the extension.
    pub t_max: f64,
    pub padding: f64,
    pub tgrid: TGrid,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        LemmaOptions { margin: 3.0, t_max: 8.0, padding: 2.0, tgrid: TGrid::default() }
    }
}

/// `a_β[u]` against `C_s E(V) + cos β·𝔯(V)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaAudit {
    pub form_energy: f64,
    /// `C_s E(V)` in straight-tube coordinates.
    pub tube_energy: f64,
    pub remainder: f64,
    pub cos_beta: f64,
    /// `|a_β[u] − (C_s E(V) + cos β 𝔯)| / a_β[u]`.
    pub mismatch: f64,
    /// `|𝔯| ≤ C_s E(V)` (the pointwise AM–GM bound).
    pub remainder_bounded: bool,
}

pub fn lemma_audit(u: &GridFunction, w: &Waveguide, s: FracOrder, opts: &LemmaOptions) -> Result<LemmaAudit> {
    opts.tgrid.validate()?;
    let a = form_energy(u, s)?;
    let levels = opts.tgrid.levels(u.grid().h(), opts.t_max);
    let field = transplant_to_tube(u, w, s, &levels, opts.padding, opts.margin)?;
    let tube_energy = CsConstant::new(s).value * weighted_energy_report(&field, s)?.total();
    let remainder = remainder_term(&field, s)?;
    let cos_beta = w.beta().cos();
    let predicted = tube_energy + cos_beta * remainder;
    Ok(LemmaAudit {
        form_energy: a,
        tube_energy,
        remainder,
        cos_beta,
        mismatch: (a - predicted).abs() / a.abs().max(f64::MIN_POSITIVE),
        remainder_bounded: remainder.abs() <= tube_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracform::mass_norm;
    use crate::geometry::CrossSection;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    fn bump_on(w: &Waveguide, grid: &Grid) -> GridFunction {
        let mask = Arc::new(membership_mask(w, grid).unwrap());
        let (sb, cb) = (w.beta().sin(), w.beta().cos());
        GridFunction::sample(grid.clone(), mask, |p| {
            let xp = p[0] * sb - p[1].abs() * cb;
            let r = p[1] / 2.0;
            (std::f64::consts::PI * xp).sin().max(0.0) * (1.0 - r * r).max(0.0).powi(2)
        })
        .unwrap()
    }

    #[test]
    fn pushforward_is_identity_at_equal_angles() {
        let om = CrossSection::interval(0.0, 1.0).unwrap();
        let w = Waveguide::new(FRAC_PI_3, om, 3.0).unwrap();
        let g = Grid::for_waveguides(std::slice::from_ref(&w), 1.0 / 16.0).unwrap();
        let u = bump_on(&w, &g);
        let v = pushforward(&u, &w, &w, &g).unwrap();
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pushforward_preserves_the_norm() {
        let om = CrossSection::interval(0.0, 1.0).unwrap();
        let src = Waveguide::new(FRAC_PI_3, om.clone(), 3.0).unwrap();
        let dst = Waveguide::new(FRAC_PI_4, om, 3.0).unwrap();
        let gs = Grid::for_waveguides(std::slice::from_ref(&src), 1.0 / 32.0).unwrap();
        let gt = Grid::for_waveguides(std::slice::from_ref(&dst), 1.0 / 32.0).unwrap();
        let u = bump_on(&src, &gs);
        let v = pushforward(&u, &src, &dst, &gt).unwrap();
        let (nu, nv) = (mass_norm(&u), mass_norm(&v));
        assert!((nu - nv).abs() < 0.02 * nu, "{nu} {nv}");
        // Going to a larger angle is refused.
        assert!(matches!(pushforward(&v, &dst, &src, &gs), Err(Error::Argument(_))));
    }

    #[test]
    fn pushforward_rejects_short_targets() {
        let om = CrossSection::interval(0.0, 1.0).unwrap();
        let src = Waveguide::new(FRAC_PI_3, om.clone(), 3.0).unwrap();
        let dst = Waveguide::new(FRAC_PI_4, om, 2.0).unwrap();
        let gs = Grid::for_waveguides(std::slice::from_ref(&src), 1.0 / 16.0).unwrap();
        let gt = Grid::for_waveguides(std::slice::from_ref(&dst), 1.0 / 16.0).unwrap();
        let mask = Arc::new(membership_mask(&src, &gs).unwrap());
        let u = GridFunction::sample(gs, mask, |_| 1.0).unwrap();
        assert!(matches!(pushforward(&u, &src, &dst, &gt), Err(Error::Geometry(_))));
    }

    #[test]
    fn energy_splits_into_tube_energy_and_remainder() {
        let om = CrossSection::interval(0.0, 1.0).unwrap();
        let s = FracOrder::new(0.5).unwrap();
        for &beta in &[FRAC_PI_3, FRAC_PI_2] {
            let w = Waveguide::new(beta, om.clone(), 3.0).unwrap();
            let g = Grid::for_waveguides(std::slice::from_ref(&w), 1.0 / 16.0).unwrap();
            let u = bump_on(&w, &g);
            let audit = lemma_audit(&u, &w, s, &LemmaOptions::default()).unwrap();
            assert!(audit.mismatch < 0.05, "{audit:?}");
            assert!(audit.remainder_bounded);
            if beta == FRAC_PI_2 {
                assert!(audit.cos_beta.abs() < 1e-15);
            }
        }
    }
}
