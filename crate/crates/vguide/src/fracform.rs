//! Discrete quadratic form `a_s[u] = ∫|ξ|^{2s}|F u|² dξ` on grid functions.
//!
//! A grid function is a nodal sample on a uniform grid that vanishes outside
//! an active-node mask (the discrete analogue of `supp u ⊂ Ω̄`).  The form is
//! the lattice multiplier form of [`crate::lattice`]:
//!
//! ```text
//!   a_h[u] = hⁿ · h^{−2s} · Σ_{i,j} u_i c(i − j) u_j ,
//! ```
//!
//! applied matrix-free as a linear convolution: `u` is embedded in a zero
//! padded cell of at least twice the box, the kernel restricted to offsets
//! inside the box is embedded with wrap-around, and both are multiplied in
//! Fourier space.  Because the embedded kernel has no periodic images the
//! result is the exact infinite-lattice form for every padding `≥ 2`.
//!
//! [`GagliardoOracle`] evaluates the double-integral seminorm by direct lattice
//! summation with a one-cell regularization of the diagonal; it shares no code
//! with the multiplier route and serves as the independent check.

use crate::error::{Error, Result};
use crate::fft::{good_size, signed_index, FftNd};
use crate::geometry::{Grid, Mask};
use crate::lattice::lattice_kernel;
use crate::quad::Rule;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Default padding factor of the multiplier cell.
pub const DEFAULT_PADDING: f64 = 2.0;

/// Default cap on active nodes for dense assembly (≈ 290 MB of matrix).
pub const DEFAULT_DENSE_CAP: usize = 6000;

/// Fractional order `s ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("fractional order must lie in (0,1), got {s}")));
        }
        Ok(FracOrder(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Values on a grid, zero outside the mask.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Grid,
    mask: Arc<Mask>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, mask: Arc<Mask>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() || mask.dims() != grid.dims() {
            return Err(Error::Argument("values, mask and grid sizes disagree".into()));
        }
        for (f, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Argument(format!("non-finite value at node {f}")));
            }
            if *v != 0.0 && !mask.is_active(f) {
                return Err(Error::Argument(format!("nonzero value {v} at inactive node {f}")));
            }
        }
        Ok(GridFunction { grid, mask, values })
    }

    /// Build from values listed in mask order.
    pub fn from_active(grid: Grid, mask: Arc<Mask>, active: &[f64]) -> Result<Self> {
        if active.len() != mask.count() {
            return Err(Error::Argument(format!("{} values for {} active nodes", active.len(), mask.count())));
        }
        let mut values = vec![0.0; grid.len()];
        for (&f, &v) in mask.nodes().iter().zip(active) {
            values[f] = v;
        }
        GridFunction::new(grid, mask, values)
    }

    /// Sample `f` at the active nodes.
    pub fn sample(grid: Grid, mask: Arc<Mask>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let active: Vec<f64> = mask.nodes().iter().map(|&i| f(&grid.position(i))).collect();
        GridFunction::from_active(grid, mask, &active)
    }

    pub fn zeros(grid: Grid, mask: Arc<Mask>) -> Self {
        let n = grid.len();
        GridFunction { grid, mask, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &Arc<Mask> {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn active_values(&self) -> Vec<f64> {
        self.mask.nodes().iter().map(|&i| self.values[i]).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            mask: Arc::clone(&self.mask),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Pointwise sum; both functions must live on the same grid.
    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Argument("cannot add grid functions on different grids".into()));
        }
        let mask = if Arc::ptr_eq(&self.mask, &other.mask) || self.mask == other.mask {
            Arc::clone(&self.mask)
        } else {
            let active = self.mask.active().iter().zip(other.mask.active()).map(|(a, b)| *a || *b).collect();
            Arc::new(Mask::from_active(&self.grid, active))
        };
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        GridFunction::new(self.grid.clone(), mask, values)
    }
}

/// `Σ u² hⁿ`.
pub fn mass_norm(u: &GridFunction) -> f64 {
    let hn = u.grid.h().powi(u.grid.dim() as i32);
    u.values.iter().map(|v| v * v).sum::<f64>() * hn
}

/// Matrix-free multiplier operator `A = h^{−2s} C` on the active nodes of a mask,
/// so that `a_h[u] = hⁿ uᵀ A u` and the eigenproblem reads `A v = λ v`.
pub struct FormOperator {
    grid: Grid,
    mask: Arc<Mask>,
    s: f64,
    cell: Vec<usize>,
    fft: FftNd,
    /// Real DFT of the embedded kernel times `h^{−2s}/N_cell`.
    symbol: Vec<f64>,
    /// Cell frequencies `|ξ|` (lattice units over `h`) for preconditioning.
    /// Free-space symbol `|ξ|^{2s}` on the cell frequencies.
    xi_pow: Vec<f64>,
    /// Cell index of every box node.
    cell_index: Vec<usize>,
}

impl std::fmt::Debug for FormOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FormOperator")
            .field("dims", &self.grid.dims())
            .field("cell", &self.cell)
            .field("active", &self.mask.count())
            .finish()
    }
}

impl FormOperator {
    pub fn new(grid: &Grid, mask: Arc<Mask>, s: FracOrder, padding: f64) -> Result<Self> {
        if !(padding >= 2.0) {
            return Err(Error::Config(format!(
                "padding factor {padding} < 2 would alias the linear convolution"
            )));
        }
        if mask.dims() != grid.dims() {
            return Err(Error::Argument("mask does not match grid".into()));
        }
        let s = s.value();
        let dims = grid.dims().to_vec();
        let nd = dims.len();
        let cell: Vec<usize> = dims.iter().map(|&d| good_size((padding * d as f64).ceil() as usize)).collect();
        let kernel = lattice_kernel(s, &dims);
        let ncell: usize = cell.iter().product();
        let h = grid.h();
        let scale = h.powf(-2.0 * s) / ncell as f64;

        // Embed c(o) for |o_a| < dims_a at o mod cell.
        let mut buf = vec![Complex64::new(0.0, 0.0); ncell];
        let kvals = kernel.values();
        let kcount = kvals.len();
        let mut kidx = vec![0usize; nd];
        for (kf, &kv) in kvals.iter().enumerate().take(kcount) {
            let mut rem = kf;
            for a in (0..nd).rev() {
                kidx[a] = rem % dims[a];
                rem /= dims[a];
            }
            // All sign combinations of the non-zero components.
            let nz: Vec<usize> = (0..nd).filter(|&a| kidx[a] != 0).collect();
            for signs in 0..(1usize << nz.len()) {
                let mut flat = 0usize;
                for a in 0..nd {
                    let mut o = kidx[a] as i64;
                    if let Some(pos) = nz.iter().position(|&b| b == a) {
                        if signs & (1 << pos) != 0 {
                            o = -o;
                        }
                    }
                    let c = cell[a] as i64;
                    flat = flat * cell[a] + o.rem_euclid(c) as usize;
                }
                buf[flat] = Complex64::new(kv, 0.0);
            }
        }
        let fft = FftNd::new(&cell);
        fft.forward(&mut buf);
        let symbol: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();

        let mut xi_pow = vec![0.0; ncell];
        let mut idx = vec![0usize; nd];
        for (f, x) in xi_pow.iter_mut().enumerate() {
            let mut rem = f;
            for a in (0..nd).rev() {
                idx[a] = rem % cell[a];
                rem /= cell[a];
            }
            let mut q = 0.0;
            for a in 0..nd {
                let k = signed_index(idx[a], cell[a]) as f64;
                let th = 2.0 * std::f64::consts::PI * k / cell[a] as f64;
                q += th * th;
            }
            *x = (q.sqrt() / h).powf(2.0 * s);
        }

        let cell_index: Vec<usize> = (0..grid.len())
            .map(|f| {
                let bi = grid.unflatten(f);
                bi.iter().zip(&cell).fold(0, |acc, (&i, &c)| acc * c + i)
            })
            .collect();

        Ok(FormOperator { grid: grid.clone(), mask, s, cell, fft, symbol, xi_pow, cell_index })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &Arc<Mask> {
        &self.mask
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn size(&self) -> usize {
        self.mask.count()
    }

    pub fn cell(&self) -> &[usize] {
        &self.cell
    }

    /// Apply a cell multiplier to up to two vectors at once (packed as real
    /// and imaginary parts); `mult(k)` already includes the 1/N of the inverse.
    fn packed(&self, mult: impl Fn(usize) -> f64, x1: &[f64], x2: Option<&[f64]>, y1: &mut [f64], y2: Option<&mut [f64]>) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.symbol.len()];
        let nodes = self.mask.nodes();
        for (k, &f) in nodes.iter().enumerate() {
            let im = x2.map_or(0.0, |x| x[k]);
            buf[self.cell_index[f]] = Complex64::new(x1[k], im);
        }
        self.fft.forward(&mut buf);
        for (k, b) in buf.iter_mut().enumerate() {
            *b *= mult(k);
        }
        self.fft.inverse(&mut buf);
        for (k, &f) in nodes.iter().enumerate() {
            y1[k] = buf[self.cell_index[f]].re;
        }
        if let Some(y2) = y2 {
            for (k, &f) in nodes.iter().enumerate() {
                y2[k] = buf[self.cell_index[f]].im;
            }
        }
    }

    fn packed_block(&self, mult: impl Fn(usize) -> f64 + Copy, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut out: Vec<Vec<f64>> = vec![vec![0.0; n]; xs.len()];
        for (pair_x, pair_y) in xs.chunks(2).zip(out.chunks_mut(2)) {
            if pair_x.len() == 2 {
                let (a, b) = pair_y.split_at_mut(1);
                self.packed(mult, &pair_x[0], Some(&pair_x[1]), &mut a[0], Some(&mut b[0]));
            } else {
                self.packed(mult, &pair_x[0], None, &mut pair_y[0], None);
            }
        }
        out
    }

    /// `y = A x` on active-node vectors.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.packed(|k| self.symbol[k], x, None, &mut y, None);
        y
    }

    /// Apply `A` to every column of a block, two columns per transform.
    pub fn apply_block(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.packed_block(|k| self.symbol[k], xs)
    }

    /// Preconditioner `(|ξ|^{2s} + σ)⁻¹` of the free-space multiplier, restricted to the mask.
    pub fn precondition(&self, r: &[f64], sigma: f64) -> Vec<f64> {
        self.precondition_block(&[r.to_vec()], sigma).remove(0)
    }

    /// [`FormOperator::precondition`] on every column of a block.
    pub fn precondition_block(&self, rs: &[Vec<f64>], sigma: f64) -> Vec<Vec<f64>> {
        let n = self.symbol.len() as f64;
        self.packed_block(|k| 1.0 / ((self.xi_pow[k] + sigma) * n), rs)
    }

    /// `a_h[u] = hⁿ uᵀ A u` for a function on this operator's grid.
    pub fn energy(&self, u: &GridFunction) -> f64 {
        let x: Vec<f64> = self.mask.nodes().iter().map(|&f| u.values()[f]).collect();
        let y = self.apply(&x);
        let hn = self.grid.h().powi(self.grid.dim() as i32);
        hn * x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Multiplier form with the default padding.
pub fn form_energy(u: &GridFunction, s: FracOrder) -> Result<f64> {
    form_energy_padded(u, s, 4.0)
}

/// Multiplier form `a_h[u]` on a cell padded by `padding ≥ 2`.
pub fn form_energy_padded(u: &GridFunction, s: FracOrder, padding: f64) -> Result<f64> {
    let full = Arc::new(Mask::full(u.grid()));
    let op = FormOperator::new(u.grid(), full, s, padding)?;
    Ok(op.energy(u).max(0.0))
}

/// Periodic multiplier form on the grid box taken as a torus:
/// `(hⁿ/N) Σ_k |ξ_k|^{2s} |DFT(u)_k|²` with `ξ_k = 2πk/(N h)`.
pub fn periodic_energy(u: &GridFunction, s: FracOrder) -> f64 {
    let grid = u.grid();
    let dims = grid.dims();
    let h = grid.h();
    let fft = FftNd::new(dims);
    let mut buf: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    let n = buf.len() as f64;
    let mut total = 0.0;
    for (f, b) in buf.iter().enumerate() {
        let idx = grid.unflatten(f);
        let mut q = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            let xi = 2.0 * std::f64::consts::PI * signed_index(i, dims[a]) as f64 / (dims[a] as f64 * h);
            q += xi * xi;
        }
        total += q.powf(s.value()) * b.norm_sqr();
    }
    total * h.powi(grid.dim() as i32) / n
}

/// Dense matrix of the form over the active nodes: `uᵀ M u = a_h[u]`.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    pub order: FracOrder,
    pub grid: Grid,
    pub nodes: Vec<usize>,
    pub entries: DMatrix<f64>,
}

/// Assemble `M_ij = hⁿ h^{−2s} c(i − j)` over the active nodes.
pub fn assemble_form(mask: &Mask, grid: &Grid, s: FracOrder, cap: usize) -> Result<FormMatrix> {
    let n = mask.count();
    if n == 0 {
        return Err(Error::Argument("cannot assemble a form on an empty mask".into()));
    }
    if n > cap {
        return Err(Error::Capacity(format!("{n} active nodes exceed the dense cap of {cap}")));
    }
    let kernel = lattice_kernel(s.value(), grid.dims());
    let h = grid.h();
    let scale = h.powi(grid.dim() as i32) * h.powf(-2.0 * s.value());
    let idx: Vec<Vec<i64>> = mask.nodes().iter().map(|&f| grid.unflatten(f).iter().map(|&i| i as i64).collect()).collect();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut off = vec![0i64; grid.dim()];
            (0..n)
                .map(|i| {
                    for a in 0..off.len() {
                        off[a] = idx[i][a] - idx[j][a];
                    }
                    scale * kernel.at(&off)
                })
                .collect()
        })
        .collect();
    let entries = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
    Ok(FormMatrix { order: s, grid: grid.clone(), nodes: mask.nodes().to_vec(), entries })
}

impl FormMatrix {
    pub fn quadratic(&self, u: &GridFunction) -> f64 {
        let x: Vec<f64> = self.nodes.iter().map(|&f| u.values()[f]).collect();
        let v = nalgebra::DVector::from_vec(x);
        v.dot(&(&self.entries * &v))
    }
}

/// `2n ∫_{[−1,1]^{n−1}} g(√(1+|a|²)) (1+|a|²)^{−n/2} da` — the integral over the
/// unit sphere of a function of the distance `ρ(ω)` from the origin to the face of
/// the cube `[−1,1]ⁿ` in direction ω.
fn for_each_lattice_point(n: usize, m: i64, mut visit: impl FnMut(f64)) {
    let side = (2 * m + 1) as usize;
    let total = side.pow(n as u32);
    let mut idx = vec![-m; n];
    for _ in 0..total {
        let d2: i64 = idx.iter().map(|i| i * i).sum();
        if d2 != 0 {
            visit(d2 as f64);
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i <= m {
                break;
            }
            *i = -m;
        }
    }
}

fn cube_direction_integral(n: usize, g: impl Fn(f64) -> f64) -> f64 {
    let rule = Rule::panels(&[-1.0, 0.0, 1.0], 24);
    let face = |a2: f64| g((1.0 + a2).sqrt()) * (1.0 + a2).powf(-(n as f64) / 2.0);
    let inner = match n {
        1 => face(0.0),
        2 => rule.integrate(|a| face(a * a)),
        3 => rule.integrate(|a| rule.integrate(|b| face(a * a + b * b))),
        _ => unreachable!("dimension checked by caller"),
    };
    2.0 * n as f64 * inner
}

/// Independent singular-integral oracle for the form.
///
/// Evaluates `(C/2) Σ_{x≠y} (u(x)−u(y))² |x−y|^{−n−2s} h^{2n}` over the whole lattice
/// (the exterior enters through the lattice sum `Z = Σ_{m≠0}|m|^{−n−2s}`) plus a
/// diagonal term `(C/2) Σ_x hⁿ |∇u(x)|²/n · h^{2−2s} K`.  For a linear profile
/// `K` is the analytic integral of `|r|^{2−n−2s}` over the excluded cell plus the
/// midpoint-rule error of the lattice sum on all other cells,
/// `K = lim_M ∫_{|r|_∞ ≤ M+½} |r|^{2−n−2s} dr − Σ_{0<|m|_∞≤M} |m|^{2−n−2s}`,
/// so that the leading near-diagonal error of the double sum cancels.  `C` is
/// fixed by [`GagliardoOracle::calibrate`].
#[derive(Debug, Clone)]
pub struct GagliardoOracle {
    n: usize,
    s: f64,
    lattice_sum: f64,
    local_constant: f64,
    constant: Option<f64>,
}

impl GagliardoOracle {
    pub fn new(n: usize, s: FracOrder) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Domain(format!("dimension {n} not supported")));
        }
        let s = s.value();
        let p = n as f64 + 2.0 * s;
        // Z = Σ over the cube |m_i| ≤ M plus the midpoint-rule tail outside it.
        let m: i64 = match n {
            1 => 20000,
            2 => 200,
            _ => 40,
        };
        // Z and the near-field sum Σ |m|^{2−n−2s} over the cube |m_i| ≤ M.
        let (mut direct, mut near) = (0.0, 0.0);
        for_each_lattice_point(n, m, |d2| {
            direct += d2.powf(-p / 2.0);
            near += d2.powf((2.0 - p) / 2.0);
        });
        let edge = m as f64 + 0.5;
        let outside = edge.powf(-2.0 * s) * cube_direction_integral(n, |rho| rho.powf(-2.0 * s) / (2.0 * s));
        // Local constant: ∫_box |r|^{2−p} − Σ_box |m|^{2−p}, with the midpoint
        // error (1/24)∫Δ|r|^{2−p} of the cells outside the box.
        let box_integral =
            edge.powf(2.0 - 2.0 * s) * cube_direction_integral(n, |rho| rho.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s));
        let laplacian_tail = 2.0 * s * (p - 2.0) / 24.0 * outside;
        let local_constant = box_integral - near + laplacian_tail;
        Ok(GagliardoOracle { n, s, lattice_sum: direct + outside, local_constant, constant: None })
    }

    pub fn constant(&self) -> Option<f64> {
        self.constant
    }

    /// `Σ_{m≠0} |m|^{−n−2s}`.
    pub fn lattice_sum(&self) -> f64 {
        self.lattice_sum
    }

    /// Fix `C` so that the oracle reproduces the multiplier form on a reference
    /// Gaussian (σ = 0.1 on `[−½, ½]ⁿ`, spacing `h`).  Returns `C`.
    pub fn calibrate(&mut self, h: f64) -> Result<f64> {
        let cells = (1.0 / h).round() as usize;
        let grid = Grid::new(h, vec![-0.5; self.n], vec![cells + 1; self.n])?;
        let mask = Arc::new(Mask::full(&grid));
        let g = GridFunction::sample(grid, mask, |p| {
            (-p.iter().map(|x| x * x).sum::<f64>() / (2.0 * 0.01)).exp()
        })?;
        let form = form_energy(&g, FracOrder::new(self.s)?)?;
        let raw = self.raw(&g)?;
        let c = form / raw;
        self.constant = Some(c);
        Ok(c)
    }

    /// Oracle value with the calibrated constant.
    pub fn energy(&self, u: &GridFunction) -> Result<f64> {
        let c = self
            .constant
            .ok_or_else(|| Error::State("the singular-integral oracle has not been calibrated".into()))?;
        Ok(c * self.raw(u)?)
    }

    /// The seminorm with `C = 1`.
    pub fn raw(&self, u: &GridFunction) -> Result<f64> {
        let grid = u.grid();
        if grid.dim() != self.n {
            return Err(Error::Argument("oracle dimension differs from grid dimension".into()));
        }
        let support: Vec<usize> = (0..grid.len()).filter(|&f| u.values()[f] != 0.0).collect();
        if support.len() > 10_000 {
            return Err(Error::Capacity(format!("{} support nodes exceed the oracle limit of 10⁴", support.len())));
        }
        let h = grid.h();
        let nn = self.n;
        let p = nn as f64 + 2.0 * self.s;
        let idx: Vec<Vec<i64>> = support.iter().map(|&f| grid.unflatten(f).iter().map(|&i| i as i64).collect()).collect();
        let vals: Vec<f64> = support.iter().map(|&f| u.values()[f]).collect();
        // Rows in parallel, summed in a fixed order so the result is reproducible.
        let rows: Vec<f64> = (0..support.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..support.len() {
                    if i == j {
                        continue;
                    }
                    let d2: i64 = (0..nn).map(|a| (idx[i][a] - idx[j][a]).pow(2)).sum();
                    acc += vals[j] * (d2 as f64).powf(-p / 2.0);
                }
                vals[i] * acc
            })
            .collect();
        let cross: f64 = rows.iter().sum();
        let sq: f64 = vals.iter().map(|v| v * v).sum();
        let pair_part = h.powf(nn as f64 - 2.0 * self.s) * (self.lattice_sum * sq - cross);

        // Diagonal cell: central-difference gradients, zero outside the grid.
        let dims = grid.dims();
        let at = |idx: &[i64]| -> f64 {
            if idx.iter().zip(dims).all(|(&i, &d)| i >= 0 && (i as usize) < d) {
                let uidx: Vec<usize> = idx.iter().map(|&i| i as usize).collect();
                u.values()[grid.flatten(&uidx)]
            } else {
                0.0
            }
        };
        let mut grad_sq = 0.0;
        for f in 0..grid.len() {
            let base: Vec<i64> = grid.unflatten(f).iter().map(|&i| i as i64).collect();
            let mut g2 = 0.0;
            for a in 0..nn {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[a] += 1;
                minus[a] -= 1;
                let d = (at(&plus) - at(&minus)) / (2.0 * h);
                g2 += d * d;
            }
            grad_sq += g2;
        }
        let diag = 0.5 * h.powi(nn as i32) * h.powf(2.0 - 2.0 * self.s) * self.local_constant / nn as f64 * grad_sq;
        Ok(pair_part + diag)
    }
}

/// Normalizing constant `C_{n,s} = 4^s Γ(n/2+s) / (π^{n/2} |Γ(−s)|)` of the
/// continuum singular-integral representation.
pub fn singular_integral_constant(n: usize, s: f64) -> f64 {
    use crate::special::gamma;
    4f64.powf(s) * gamma(n as f64 / 2.0 + s) / (std::f64::consts::PI.powf(n as f64 / 2.0) * gamma(-s).abs())
}
