//! Eigenproblems of the restricted fractional Laplacian.
//!
//! With the nodal basis the mass matrix is `hⁿ·I` exactly, so the generalized
//! problem `M v = λ hⁿ v` is the standard problem `A v = λ v` for the
//! multiplier operator `A = M/hⁿ`.  Two solvers are provided:
//!
//! * dense `nalgebra` symmetric eigendecomposition below a node-count cutoff;
//!   it doubles as the oracle for the iterative solver;
//! * block LOBPCG (locally optimal block preconditioned conjugate gradient)
//!   driven by the matrix-free [`FormOperator`], preconditioned with the
//!   free-space resolvent `(|ξ|^{2s} + σ)⁻¹` applied on the padded cell.
//!
//! The cross-section threshold `Λ†` is the bottom of the spectrum on `ω`; the
//! waveguide eigenvalues are classified against `Λ† − ε_disc`, where `ε_disc`
//! is the drift of `Λ†` between the two finest refinement levels.

use crate::error::{Error, Result};
use crate::fracform::{assemble_form, form_energy, mass_norm, FormOperator, FracOrder, GridFunction, DEFAULT_DENSE_CAP, DEFAULT_PADDING};
use crate::geometry::{cross_section_mask, membership_mask, CrossSection, Grid, Mask, Waveguide};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Solver controls shared by the threshold and waveguide problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Relative residual tolerance `‖Av − λv‖ ≤ tol·max(λ, 1)` of the iterative solver.
    pub tol: f64,
    pub max_iter: usize,
    /// Use the dense solver at or below this many active nodes.
    pub dense_cutoff: usize,
    pub dense_cap: usize,
    pub padding: f64,
    /// Extra block vectors carried by LOBPCG beyond the requested count.
    pub guard: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-7,
            max_iter: 600,
            dense_cutoff: 3000,
            dense_cap: DEFAULT_DENSE_CAP,
            padding: DEFAULT_PADDING,
            guard: 2,
            seed: 0x5eed,
        }
    }
}

/// Eigenpairs of a masked problem.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// L²-orthonormal eigenfunctions.
    pub vectors: Vec<GridFunction>,
    /// `‖Av − λv‖` for the L²-normalized `v`.
    pub residuals: Vec<f64>,
    /// Threshold used for classification.
    pub threshold: f64,
    pub eps_disc: f64,
    /// `#{λ_j < threshold − eps_disc}`.
    pub below_threshold_count: usize,
    /// True when fewer than the requested pairs converged.
    pub partial: bool,
    pub iterations: usize,
    pub solver: SolverKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Lobpcg,
}

/// Smallest eigenpairs of `A` by dense decomposition; vectors Euclidean-normalized.
pub fn dense_eigs(mask: &Mask, grid: &Grid, s: FracOrder, k: usize, cap: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let fm = assemble_form(mask, grid, s, cap)?;
    let hn = grid.h().powi(grid.dim() as i32);
    let a: DMatrix<f64> = fm.entries / hn;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let take = k.min(order.len());
    let values = order[..take].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order[..take].iter().map(|&i| eig.eigenvectors.column(i).iter().cloned().collect()).collect();
    Ok((values, vectors))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn combine(basis: &[Vec<f64>], coeffs: &DMatrix<f64>, col: usize, rows: std::ops::Range<usize>) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    for r in rows {
        let c = coeffs[(r, col)];
        if c != 0.0 {
            axpy(c, &basis[r], &mut out);
        }
    }
    out
}

/// Modified Gram–Schmidt (two passes) on `vs`, mirrored on their images `avs`.
/// Vectors that become numerically dependent are dropped.
fn orthonormalize(vs: Vec<Vec<f64>>, avs: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    let mut aq: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for (mut v, mut av) in vs.into_iter().zip(avs) {
        let norm0 = dot(&v, &v).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            continue;
        }
        for _pass in 0..2 {
            for (qi, aqi) in q.iter().zip(&aq) {
                let c = dot(qi, &v);
                axpy(-c, qi, &mut v);
                axpy(-c, aqi, &mut av);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= 1e-10 * norm0 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        for x in av.iter_mut() {
            *x /= norm;
        }
        q.push(v);
        aq.push(av);
    }
    (q, aq)
}

/// Output of [`lobpcg`].
#[derive(Debug, Clone)]
pub struct LobpcgOutput {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub converged: usize,
    pub iterations: usize,
}

/// Block LOBPCG for the `k` smallest eigenpairs of the masked operator.
pub fn lobpcg(op: &FormOperator, x0: Vec<Vec<f64>>, k: usize, sigma: f64, opts: &EigenOptions) -> Result<LobpcgOutput> {
    let m = x0.len();
    if m < k || k == 0 {
        return Err(Error::Argument(format!("block of {m} vectors cannot deliver {k} eigenpairs")));
    }
    let ax0 = op.apply_block(&x0);
    let (mut x, mut ax) = orthonormalize(x0, ax0);
    if x.len() < k {
        return Err(Error::Argument("initial block is rank deficient".into()));
    }
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut ap: Vec<Vec<f64>> = Vec::new();
    let mut lambda = vec![0.0; x.len()];
    let mut residuals = vec![f64::INFINITY; x.len()];
    let mut iterations = 0;
    let mut converged = 0;

    for it in 0..=opts.max_iter {
        iterations = it;
        // Rayleigh–Ritz on S = [X, W, P] (X alone on the first pass).
        let (s, as_) = if it == 0 {
            (x.clone(), ax.clone())
        } else {
            let mut r: Vec<Vec<f64>> = Vec::with_capacity(x.len());
            for (j, (xj, axj)) in x.iter().zip(&ax).enumerate() {
                let mut rj = axj.clone();
                axpy(-lambda[j], xj, &mut rj);
                r.push(rj);
            }
            let w: Vec<Vec<f64>> = op.precondition_block(&r, sigma);
            let aw = op.apply_block(&w);
            let mut sv = x.clone();
            let mut asv = ax.clone();
            sv.extend(w);
            asv.extend(aw);
            sv.extend(p.iter().cloned());
            asv.extend(ap.iter().cloned());
            orthonormalize(sv, asv)
        };
        let dim = s.len();
        let mut hmat = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = 0.5 * (dot(&s[i], &as_[j]) + dot(&s[j], &as_[i]));
                hmat[(i, j)] = v;
                hmat[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(hmat);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let keep = m.min(dim);
        let mut coeffs = DMatrix::<f64>::zeros(dim, keep);
        for (c, &o) in order[..keep].iter().enumerate() {
            coeffs.set_column(c, &eig.eigenvectors.column(o));
            lambda[c] = eig.eigenvalues[o];
        }
        lambda.truncate(keep);
        let nx = x.len();
        let mut new_x = Vec::with_capacity(keep);
        let mut new_ax = Vec::with_capacity(keep);
        let mut new_p = Vec::new();
        let mut new_ap = Vec::new();
        for c in 0..keep {
            new_x.push(combine(&s, &coeffs, c, 0..dim));
            new_ax.push(combine(&as_, &coeffs, c, 0..dim));
            if it > 0 {
                new_p.push(combine(&s, &coeffs, c, nx..dim));
                new_ap.push(combine(&as_, &coeffs, c, nx..dim));
            }
        }
        x = new_x;
        ax = new_ax;
        p = new_p;
        ap = new_ap;
        // Refresh images periodically to stop round-off drift.
        if it % 25 == 24 {
            ax = op.apply_block(&x);
        }
        residuals = x
            .iter()
            .zip(&ax)
            .zip(&lambda)
            .map(|((xj, axj), &l)| {
                let mut r = axj.clone();
                axpy(-l, xj, &mut r);
                dot(&r, &r).sqrt()
            })
            .collect();
        converged = residuals
            .iter()
            .zip(&lambda)
            .take(k)
            .take_while(|(r, l)| **r <= opts.tol * l.abs().max(1.0))
            .count();
        if converged == k {
            break;
        }
    }
    // Final exact residuals.
    let ax = op.apply_block(&x[..k.min(x.len())]);
    let residuals: Vec<f64> = x
        .iter()
        .zip(&ax)
        .zip(&lambda)
        .map(|((xj, axj), &l)| {
            let mut r = axj.clone();
            axpy(-l, xj, &mut r);
            dot(&r, &r).sqrt()
        })
        .collect();
    let _ = &residuals;
    Ok(LobpcgOutput {
        values: lambda[..k].to_vec(),
        vectors: x[..k].to_vec(),
        residuals,
        converged,
        iterations,
    })
}

/// `(values, vectors, residuals, partial, iterations, solver)`.
type RawEigs = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, bool, usize, SolverKind);

/// Smallest `k` eigenpairs on a mask, dense or iterative by size.
/// Vectors returned Euclidean-normalized, plus residuals and the solver used.
fn masked_eigs(
    grid: &Grid,
    mask: &Arc<Mask>,
    s: FracOrder,
    k: usize,
    guess: impl Fn(usize, &[f64]) -> f64,
    sigma: f64,
    opts: &EigenOptions,
) -> Result<RawEigs> {
    let n = mask.count();
    if k == 0 {
        return Err(Error::Argument("eigenpair count must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Argument(format!("{k} eigenpairs requested on {n} active nodes")));
    }
    let op = FormOperator::new(grid, Arc::clone(mask), s, opts.padding)?;
    if n <= opts.dense_cutoff {
        let (values, vectors) = dense_eigs(mask, grid, s, k, opts.dense_cap)?;
        let res = vectors
            .iter()
            .zip(&values)
            .map(|(v, &l)| {
                let av = op.apply(v);
                av.iter().zip(v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        return Ok((values, vectors, res, false, 0, SolverKind::Dense));
    }
    let m = (k + opts.guard).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x0: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            mask.nodes()
                .iter()
                .map(|&f| guess(j, &grid.position(f)) + 1e-3 * rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let out = lobpcg(&op, x0, k, sigma, opts)?;
    if out.converged == 0 {
        let worst = out.residuals.iter().cloned().fold(0.0, f64::max);
        return Err(Error::Solver { message: format!("no eigenpair converged in {} iterations", out.iterations), residual: worst });
    }
    let partial = out.converged < k;
    Ok((out.values, out.vectors, out.residuals, partial, out.iterations, SolverKind::Lobpcg))
}

fn to_grid_functions(grid: &Grid, mask: &Arc<Mask>, vectors: Vec<Vec<f64>>) -> Result<Vec<GridFunction>> {
    let scale = grid.h().powf(-(grid.dim() as f64) / 2.0);
    vectors
        .into_iter()
        .map(|v| {
            let l2: Vec<f64> = v.iter().map(|x| x * scale).collect();
            GridFunction::from_active(grid.clone(), Arc::clone(mask), &l2)
        })
        .collect()
}

/// Ground state of the cross-section problem.
#[derive(Debug, Clone)]
pub struct ThresholdResult {
    pub h: f64,
    pub value: f64,
    /// L²-normalized, positive mean.
    pub phi: GridFunction,
    pub residual: f64,
}

/// `Λ†` and `φ` on `ω` at spacing `h` (cell-centred grid).
pub fn threshold(omega: &CrossSection, s: FracOrder, h: f64, opts: &EigenOptions) -> Result<ThresholdResult> {
    let grid = Grid::for_cross_section(omega, h)?;
    for w in omega.widths() {
        if w / h < 32.0 - 1e-9 {
            return Err(Error::Resolution(format!(
                "threshold needs at least 32 nodes per cross-section axis; width {w} at h = {h} gives {:.0}",
                w / h
            )));
        }
    }
    threshold_on_grid(omega, s, &grid, opts)
}

/// `Λ†` on a given cross-section grid (no 32-node floor; used for coarse companions).
pub fn threshold_on_grid(omega: &CrossSection, s: FracOrder, grid: &Grid, opts: &EigenOptions) -> Result<ThresholdResult> {
    let mask = Arc::new(cross_section_mask(omega, grid)?);
    let lower = omega.lower().to_vec();
    let widths = omega.widths();
    let guess = move |j: usize, p: &[f64]| -> f64 {
        p.iter()
            .enumerate()
            .map(|(a, &x)| {
                let y = ((x - lower[a]) / widths[a]).clamp(0.0, 1.0);
                let mode = if a == 0 { j + 1 } else { 1 };
                (std::f64::consts::PI * mode as f64 * y).sin()
            })
            .product()
    };
    let (values, vectors, residuals, partial, _, _) = masked_eigs(grid, &mask, s, 1, guess, 1.0, opts)?;
    if partial {
        return Err(Error::Solver { message: "threshold eigenpair did not converge".into(), residual: residuals[0] });
    }
    let mut phi = to_grid_functions(grid, &mask, vectors)?.remove(0);
    if phi.values().iter().sum::<f64>() < 0.0 {
        phi = phi.scaled(-1.0);
    }
    Ok(ThresholdResult { h: grid.h(), value: values[0], phi, residual: residuals[0] })
}

/// Refinement study of `Λ†`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdStudy {
    pub s: f64,
    /// `(h, Λ†_h)` from coarse to fine.
    pub levels: Vec<(f64, f64)>,
    /// Richardson extrapolation `Λ† + a h^p` through the three finest levels
    /// (or the finest value when fewer levels are available).
    pub extrapolated: f64,
    /// Observed order `p` of the extrapolation, when available.
    pub order: Option<f64>,
    /// `|Λ†(h_finest) − Λ†(h_second)|`.
    pub eps_disc: f64,
}

pub fn threshold_study(omega: &CrossSection, s: FracOrder, hs: &[f64], opts: &EigenOptions) -> Result<ThresholdStudy> {
    if hs.len() < 2 {
        return Err(Error::Argument("a refinement study needs at least two spacings".into()));
    }
    let mut hs = hs.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    let levels: Vec<(f64, f64)> = hs
        .iter()
        .map(|&h| threshold(omega, s, h, opts).map(|t| (h, t.value)))
        .collect::<Result<_>>()?;
    let n = levels.len();
    let eps_disc = (levels[n - 1].1 - levels[n - 2].1).abs();
    let (extrapolated, order) = if n >= 3 {
        richardson(&levels[n - 3..])
    } else {
        (levels[n - 1].1, None)
    };
    Ok(ThresholdStudy { s: s.value(), levels, extrapolated, order, eps_disc })
}

/// Three-level Richardson extrapolation assuming `Λ(h) = Λ₀ + a h^p`.
fn richardson(l: &[(f64, f64)]) -> (f64, Option<f64>) {
    let (h0, a0) = l[0];
    let (h1, a1) = l[1];
    let (_, a2) = l[2];
    let d1 = a1 - a0;
    let d2 = a2 - a1;
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return (a2, None);
    }
    let ratio = h0 / h1;
    let p = (d1 / d2).ln() / ratio.ln();
    let extrap = a2 + d2 / (ratio.powf(p) - 1.0);
    (extrap, Some(p))
}

/// Reference threshold for classifying waveguide eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReference {
    pub value: f64,
    pub eps_disc: f64,
}

/// Smallest `k` eigenpairs of the truncated waveguide on `grid`.
pub fn waveguide_eigs(
    w: &Waveguide,
    s: FracOrder,
    grid: &Grid,
    k: usize,
    reference: ThresholdReference,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let mask = Arc::new(membership_mask(w, grid)?);
    let (beta, omega) = (w.beta(), w.cross_section().clone());
    let n = w.dim();
    let lz = w.truncation();
    let guess = move |j: usize, p: &[f64]| -> f64 {
        let z = p[n - 1];
        let xp = p[0] * beta.sin() - z.abs() * beta.cos();
        let mut cross = 1.0;
        let mut q = vec![xp];
        q.extend_from_slice(&p[1..n - 1]);
        for (a, &x) in q.iter().enumerate() {
            let y = ((x - omega.lower()[a]) / omega.widths()[a]).clamp(0.0, 1.0);
            cross *= (std::f64::consts::PI * y).sin();
        }
        // Envelopes along the arms: even/odd modes of increasing order.
        let ell = (0.25 * lz).max(1.0);
        let u = z / ell;
        let env = (-u * u).exp();
        let poly = match j % 4 {
            0 => 1.0,
            1 => u,
            2 => 1.0 - 2.0 * u * u,
            _ => u * (3.0 - 2.0 * u * u),
        };
        cross * env * poly * (1.0 + 0.5 * (j / 4) as f64 * (u * (j as f64)).cos())
    };
    let sigma = reference.value.max(1.0);
    let (values, vectors, residuals, partial, iterations, solver) = masked_eigs(grid, &mask, s, k, guess, sigma, opts)?;
    let vectors = to_grid_functions(grid, &mask, vectors)?;
    let cut = reference.value - reference.eps_disc;
    let below_threshold_count = values.iter().filter(|&&l| l < cut).count();
    Ok(EigenResult {
        values,
        vectors,
        residuals,
        threshold: reference.value,
        eps_disc: reference.eps_disc,
        below_threshold_count,
        partial,
        iterations,
        solver,
    })
}

/// Rayleigh quotient `a_h[u] / ‖u‖²`.
pub fn rayleigh(u: &GridFunction, s: FracOrder) -> Result<f64> {
    let m = mass_norm(u);
    if !(m > 0.0) {
        return Err(Error::Argument("Rayleigh quotient of the zero function".into()));
    }
    Ok(form_energy(u, s)? / m)
}
