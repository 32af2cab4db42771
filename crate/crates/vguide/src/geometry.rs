//! V-shaped waveguides, their straight-tube charts, and computational grids.
//!
//! Points are stored as `(x, y₁, …, y_{n−2}, z)`: the first coordinate is the
//! one that gets sheared, the last is the axis of symmetry `z ↦ −z`, and the
//! middle ones (present only for `n = 3`) run along the second axis of the
//! cross-section.  The waveguide of half-opening `β` is
//!
//! ```text
//!   Ω_β = { (x, y, z) : (x sinβ − |z| cosβ, y) ∈ ω },
//! ```
//!
//! and `T_β(x', y, z) = (x' cscβ + |z| cotβ, y, z)` maps the straight tube
//! `ω × ℝ` onto it.
//!
//! Grids are cell-centred across the cross-section: along `x` the nodes sit at
//! `a + (i + ½)h` where `a` is the lower end of `ω`, and the `z` nodes at `jh`
//! include the junction plane `z = 0`.  With this convention a straight tube
//! and a tilted arm both see an effective cross-section of exactly the true
//! width, and the discrete threshold converges monotonically from below.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Axis-aligned box cross-section `ω ⊂ ℝ^{n−1}`; an interval when `n = 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl CrossSection {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Argument(format!(
                "cross-section bounds must be non-empty and of equal length, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.len() > 2 {
            return Err(Error::Domain("cross-sections of dimension > 2 are not supported".into()));
        }
        for (a, b) in lower.iter().zip(&upper) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Domain(format!("empty or unbounded cross-section side ({a}, {b})")));
            }
        }
        Ok(CrossSection { lower, upper })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a], vec![b])
    }

    /// Dimension `n − 1` of the cross-section.
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Open-box membership of a cross-section point.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (a, b))| a < x && x < b)
    }

    /// The box dilated by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        CrossSection {
            lower: self.lower.iter().map(|a| a * factor).collect(),
            upper: self.upper.iter().map(|b| b * factor).collect(),
        }
    }
}

/// The truncated waveguide `Ω_β ∩ {|z| ≤ L}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveguide {
    beta: f64,
    cross_section: CrossSection,
    truncation_l: f64,
}

impl Waveguide {
    pub fn new(beta: f64, cross_section: CrossSection, truncation_l: f64) -> Result<Self> {
        check_angle(beta)?;
        let diam = cross_section.diameter();
        if !(truncation_l >= 2.0 * diam) {
            return Err(Error::Domain(format!(
                "truncation length {truncation_l} must be at least twice the cross-section diameter {diam}"
            )));
        }
        Ok(Waveguide { beta, cross_section, truncation_l })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cross_section(&self) -> &CrossSection {
        &self.cross_section
    }

    pub fn truncation(&self) -> f64 {
        self.truncation_l
    }

    /// Space dimension `n`.
    pub fn dim(&self) -> usize {
        self.cross_section.dim() + 1
    }

    pub fn with_truncation(&self, truncation_l: f64) -> Result<Self> {
        Waveguide::new(self.beta, self.cross_section.clone(), truncation_l)
    }

    pub fn with_angle(&self, beta: f64) -> Result<Self> {
        Waveguide::new(beta, self.cross_section.clone(), self.truncation_l)
    }

    /// Membership of a physical point in the truncated waveguide.
    pub fn contains(&self, p: &[f64]) -> bool {
        let n = self.dim();
        let z = p[n - 1];
        if z.abs() > self.truncation_l * (1.0 + 1e-12) {
            return false;
        }
        let xp = p[0] * self.beta.sin() - z.abs() * self.beta.cos();
        let mut q = Vec::with_capacity(n - 1);
        q.push(xp);
        q.extend_from_slice(&p[1..n - 1]);
        self.cross_section.contains(&q)
    }

    /// Bounding box `[lo, hi]` per axis of the truncated domain.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (sb, cb) = (self.beta.sin(), self.beta.cos());
        let a = self.cross_section.lower[0];
        let b = self.cross_section.upper[0];
        let l = self.truncation_l;
        let xs = [a / sb, b / sb, (a + l * cb) / sb, (b + l * cb) / sb];
        let mut lo = vec![xs.iter().cloned().fold(f64::INFINITY, f64::min)];
        let mut hi = vec![xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)];
        for k in 1..self.cross_section.dim() {
            lo.push(self.cross_section.lower[k]);
            hi.push(self.cross_section.upper[k]);
        }
        lo.push(-l);
        hi.push(l);
        (lo, hi)
    }
}

fn check_angle(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= FRAC_PI_2 * (1.0 + 1e-15)) {
        return Err(Error::Domain(format!("angle {beta} rad outside (0, π/2]")));
    }
    Ok(())
}

/// `T_β`: straight-tube point `(x', y, z)` ↦ point of `Ω_β`.
pub fn map_from_tube(beta: f64, p: &[f64]) -> Result<Vec<f64>> {
    check_angle(beta)?;
    let z = p[p.len() - 1];
    let mut q = p.to_vec();
    q[0] = p[0] / beta.sin() + z.abs() * beta.cos() / beta.sin();
    Ok(q)
}

/// `T_β⁻¹`: point of `Ω_β` ↦ straight-tube point.
pub fn map_to_tube(beta: f64, p: &[f64]) -> Result<Vec<f64>> {
    check_angle(beta)?;
    let z = p[p.len() - 1];
    let mut q = p.to_vec();
    q[0] = p[0] * beta.sin() - z.abs() * beta.cos();
    Ok(q)
}

/// `T_{α,β} = T_β ∘ T_α⁻¹ : Ω_α → Ω_β` for `0 < α ≤ β ≤ π/2` (identity at `α = β`).
pub fn map_between(alpha: f64, beta: f64, p: &[f64]) -> Result<Vec<f64>> {
    check_angle(alpha)?;
    check_angle(beta)?;
    if alpha > beta {
        return Err(Error::Argument(format!("map_between needs alpha ≤ beta, got {alpha} > {beta}")));
    }
    map_from_tube(beta, &map_to_tube(alpha, p)?)
}

/// Constant Jacobian determinant `sinα / sinβ` of `T_{α,β}`.
pub fn jacobian_between(alpha: f64, beta: f64) -> f64 {
    alpha.sin() / beta.sin()
}

/// Uniform grid: node `i` sits at `origin + i·h` along every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    h: f64,
    origin: Vec<f64>,
    dims: Vec<usize>,
}

impl Grid {
    pub fn new(h: f64, origin: Vec<f64>, dims: Vec<usize>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("grid spacing must be positive, got {h}")));
        }
        if origin.len() != dims.len() || dims.is_empty() || dims.contains(&0) {
            return Err(Error::Argument("grid origin and dims must be non-empty and agree".into()));
        }
        Ok(Grid { h, origin, dims })
    }

    /// Cell-centred grid on `ω` plus one padding layer on each side.
    pub fn for_cross_section(omega: &CrossSection, h: f64) -> Result<Self> {
        let mut origin = Vec::new();
        let mut dims = Vec::new();
        for (a, b) in omega.lower.iter().zip(&omega.upper) {
            let cells = ((b - a) / h - 1e-9).ceil() as usize;
            origin.push(a + 0.5 * h - h);
            dims.push(cells + 2);
        }
        Grid::new(h, origin, dims)
    }

    /// Common grid covering every truncated waveguide in `guides` (same ω),
    /// aligned with the cell-centred cross-section nodes, with one padding layer.
    pub fn for_waveguides(guides: &[Waveguide], h: f64) -> Result<Self> {
        let first = guides.first().ok_or_else(|| Error::Argument("no waveguides given".into()))?;
        let omega = first.cross_section();
        if guides.iter().any(|w| w.cross_section() != omega) {
            return Err(Error::Argument("waveguides on a common grid must share the cross-section".into()));
        }
        let n = first.dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for w in guides {
            let (l, u) = w.bounding_box();
            for k in 0..n {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(u[k]);
            }
        }
        let mut origin = Vec::with_capacity(n);
        let mut dims = Vec::with_capacity(n);
        for k in 0..n - 1 {
            // Nodes at a_k + (i + ½)h, i from i_lo to i_hi inclusive.
            let a = omega.lower[k];
            let i_lo = ((lo[k] - a) / h - 0.5).floor() as i64 - 1;
            let i_hi = ((hi[k] - a) / h - 0.5).ceil() as i64 + 1;
            origin.push(a + (i_lo as f64 + 0.5) * h);
            dims.push((i_hi - i_lo + 1) as usize);
        }
        let jmax = (hi[n - 1] / h + 1e-9).floor() as i64 + 1;
        origin.push(-(jmax as f64) * h);
        dims.push((2 * jmax + 1) as usize);
        Grid::new(h, origin, dims)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat row-major index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Physical position of a flat node index.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * self.h)
            .collect()
    }

    /// Upper corner of the box.
    pub fn upper(&self) -> Vec<f64> {
        self.origin.iter().zip(&self.dims).map(|(&o, &d)| o + (d - 1) as f64 * self.h).collect()
    }

    /// Fractional grid coordinates of a physical point.
    pub fn locate(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.origin).map(|(&x, &o)| (x - o) / self.h).collect()
    }

    /// Node index that mirrors `flat` under `z ↦ −z`, if it lies on the grid.
    pub fn mirror_z(&self, flat: usize) -> Option<usize> {
        let n = self.dims.len();
        let mut idx = self.unflatten(flat);
        let z = self.origin[n - 1] + idx[n - 1] as f64 * self.h;
        let j = ((-z - self.origin[n - 1]) / self.h).round();
        if j < 0.0 || j >= self.dims[n - 1] as f64 {
            return None;
        }
        idx[n - 1] = j as usize;
        Some(self.flatten(&idx))
    }
}

/// Active-node set of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    dims: Vec<usize>,
    active: Vec<bool>,
    nodes: Vec<usize>,
}

impl Mask {
    pub fn from_predicate(grid: &Grid, pred: impl Fn(&[f64]) -> bool) -> Self {
        let active: Vec<bool> = (0..grid.len()).map(|f| pred(&grid.position(f))).collect();
        Self::from_active(grid, active)
    }

    pub fn from_active(grid: &Grid, active: Vec<bool>) -> Self {
        assert_eq!(active.len(), grid.len());
        let nodes = active.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect();
        Mask { dims: grid.dims().to_vec(), active, nodes }
    }

    /// Every node of the grid active.
    pub fn full(grid: &Grid) -> Self {
        Self::from_active(grid, vec![true; grid.len()])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_active(&self, flat: usize) -> bool {
        self.active[flat]
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Flat indices of the active nodes, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }
}

fn check_resolution(omega: &CrossSection, h: f64) -> Result<()> {
    for w in omega.widths() {
        let across = (w / h + 1e-9).floor() as usize;
        if across < 8 {
            return Err(Error::Resolution(format!(
                "only {across} nodes across a cross-section side of width {w} at h = {h}; at least 8 are needed"
            )));
        }
    }
    Ok(())
}

/// Active nodes of the truncated waveguide on `grid`.
pub fn membership_mask(w: &Waveguide, grid: &Grid) -> Result<Mask> {
    if grid.dim() != w.dim() {
        return Err(Error::Argument(format!("grid dimension {} ≠ waveguide dimension {}", grid.dim(), w.dim())));
    }
    check_resolution(w.cross_section(), grid.h())?;
    let (lo, hi) = w.bounding_box();
    let up = grid.upper();
    for k in 0..grid.dim() {
        if !(grid.origin()[k] < lo[k] && up[k] > hi[k]) {
            return Err(Error::Geometry(format!(
                "grid axis {k} [{}, {}] does not strictly contain the domain extent [{}, {}]",
                grid.origin()[k],
                up[k],
                lo[k],
                hi[k]
            )));
        }
    }
    let mask = Mask::from_predicate(grid, |p| w.contains(p));
    if mask.count() == 0 {
        return Err(Error::Resolution("no grid node inside the waveguide".into()));
    }
    Ok(mask)
}

/// Active nodes of the cross-section on a cross-section grid.
pub fn cross_section_mask(omega: &CrossSection, grid: &Grid) -> Result<Mask> {
    if grid.dim() != omega.dim() {
        return Err(Error::Argument("grid and cross-section dimensions differ".into()));
    }
    check_resolution(omega, grid.h())?;
    Ok(Mask::from_predicate(grid, |p| omega.contains(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn unit() -> CrossSection {
        CrossSection::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn straight_tube_contains_its_axis() {
        let w = Waveguide::new(FRAC_PI_2, unit(), 4.0).unwrap();
        assert!(w.contains(&[0.5, 0.0]));
    }

    #[test]
    fn far_point_is_outside_the_wedge() {
        let w = Waveguide::new(FRAC_PI_4, unit(), 4.0).unwrap();
        assert!(!w.contains(&[-3.0, 0.0]));
    }

    #[test]
    fn mask_is_symmetric_in_z() {
        let w = Waveguide::new(FRAC_PI_3, unit(), 3.0).unwrap();
        let g = Grid::for_waveguides(std::slice::from_ref(&w), 1.0 / 16.0).unwrap();
        let m = membership_mask(&w, &g).unwrap();
        for &f in m.nodes() {
            let r = g.mirror_z(f).unwrap();
            assert!(m.is_active(r));
        }
    }

    #[test]
    fn straight_mask_is_a_product() {
        let w = Waveguide::new(FRAC_PI_2, unit(), 2.0).unwrap();
        let h = 1.0 / 16.0;
        let g = Grid::for_waveguides(std::slice::from_ref(&w), h).unwrap();
        let m = membership_mask(&w, &g).unwrap();
        assert_eq!(m.count(), 16 * (2 * 32 + 1));
        for f in 0..g.len() {
            let p = g.position(f);
            let inside = p[0] > 0.0 && p[0] < 1.0 && p[1].abs() <= 2.0 + 1e-12;
            assert_eq!(m.is_active(f), inside);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let w = Waveguide::new(FRAC_PI_2, unit(), 2.0).unwrap();
        let g = Grid::for_waveguides(std::slice::from_ref(&w), 0.2).unwrap();
        assert!(matches!(membership_mask(&w, &g), Err(Error::Resolution(_))));
    }

    #[test]
    fn tube_maps_reference_values() {
        assert_eq!(map_from_tube(FRAC_PI_2, &[1.0, 0.3]).unwrap(), vec![1.0, 0.3]);
        let q = map_from_tube(FRAC_PI_4, &[0.0, 2.0]).unwrap();
        assert!((q[0] - 2.0).abs() < 1e-12 && q[1] == 2.0);
        let r = map_to_tube(FRAC_PI_4, &[2.0, 2.0]).unwrap();
        assert!(r[0].abs() < 1e-12);
        assert!(matches!(map_from_tube(0.0, &[1.0, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn reflected_points_share_the_tube_coordinate() {
        let a = map_to_tube(1.1, &[0.7, 1.3]).unwrap();
        let b = map_to_tube(1.1, &[0.7, -1.3]).unwrap();
        assert_eq!(a[0], b[0]);
    }

    #[test]
    fn jacobian_of_sixth_to_half_turn() {
        assert!((jacobian_between(FRAC_PI_6, FRAC_PI_2) - 0.5).abs() < 1e-15);
        assert!(map_between(1.0, 0.5, &[0.0, 0.0]).is_err());
        assert_eq!(map_between(0.8, 0.8, &[0.3, -0.2]).unwrap()[1], -0.2);
    }

    #[test]
    fn cross_section_grid_is_cell_centred() {
        let g = Grid::for_cross_section(&unit(), 0.125).unwrap();
        assert_eq!(g.dims(), &[10]);
        assert!((g.position(1)[0] - 0.0625).abs() < 1e-15);
        let m = cross_section_mask(&unit(), &g).unwrap();
        assert_eq!(m.count(), 8);
    }

    #[test]
    fn common_grid_covers_every_angle() {
        let ws: Vec<Waveguide> = [0.5, 1.0, 1.5]
            .iter()
            .map(|&b| Waveguide::new(b, unit(), 3.0).unwrap())
            .collect();
        let g = Grid::for_waveguides(&ws, 1.0 / 8.0).unwrap();
        for w in &ws {
            assert!(membership_mask(w, &g).is_ok());
        }
    }
}
