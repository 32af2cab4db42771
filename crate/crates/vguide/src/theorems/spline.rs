//! Uniform cubic B-spline bases on one axis, with Gauss rules aligned to the
//! knots.  Basis functions are fixed linear combinations of cardinal splines
//! `B((x − start)/spacing − j)`, which lets a basis impose `f(0) = 0`.

use crate::quad::{geometric_edges, Rule};

/// Cardinal cubic B-spline on `[0, 4]` and its derivative.
pub fn cardinal(u: f64) -> (f64, f64) {
    if !(0.0..4.0).contains(&u) {
        return (0.0, 0.0);
    }
    if u < 1.0 {
        (u * u * u / 6.0, 0.5 * u * u)
    } else if u < 2.0 {
        ((-3.0 * u * u * u + 12.0 * u * u - 12.0 * u + 4.0) / 6.0, (-9.0 * u * u + 24.0 * u - 12.0) / 6.0)
    } else if u < 3.0 {
        ((3.0 * u * u * u - 24.0 * u * u + 60.0 * u - 44.0) / 6.0, (9.0 * u * u - 48.0 * u + 60.0) / 6.0)
    } else {
        let v = 4.0 - u;
        (v * v * v / 6.0, -0.5 * v * v)
    }
}

#[derive(Debug, Clone)]
pub struct Basis1D {
    pub spacing: f64,
    pub start: f64,
    pub funcs: Vec<Vec<(usize, f64)>>,
}

impl Basis1D {
    /// Splines whose support lies in `[a, b]` (they vanish to second order at both ends).
    pub fn interior(a: f64, b: f64, spacing: f64) -> Basis1D {
        let cells = ((b - a) / spacing).round() as usize;
        let m = cells.saturating_sub(3);
        Basis1D { spacing, start: a, funcs: (0..m).map(|j| vec![(j, 1.0)]).collect() }
    }

    /// Splines restricted to `[0, b]`, free at 0 and vanishing at `b`.
    pub fn free_at_zero(b: f64, spacing: f64) -> Basis1D {
        let m = (b / spacing + 1e-9).floor() as usize;
        Basis1D { spacing, start: -3.0 * spacing, funcs: (0..m).map(|j| vec![(j, 1.0)]).collect() }
    }

    /// Splines restricted to `[0, b]` that vanish at 0 and at `b`.
    pub fn vanishing_at_zero(b: f64, spacing: f64) -> Basis1D {
        let mut basis = Basis1D::free_at_zero(b, spacing);
        if basis.funcs.len() >= 3 {
            // Cardinal values at 0: B_0 = 1/6, B_1 = 4/6, B_2 = 1/6.
            basis.funcs[1] = vec![(1, 1.0), (0, -4.0)];
            basis.funcs[2] = vec![(2, 1.0), (0, -1.0)];
        }
        basis.funcs.remove(0);
        basis
    }

    /// One cardinal spline with support `[a, a + 4·spacing]`.
    pub fn single(a: f64, spacing: f64) -> Basis1D {
        Basis1D { spacing, start: a, funcs: vec![vec![(0, 1.0)]] }
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn eval(&self, i: usize, x: f64) -> (f64, f64) {
        let u = (x - self.start) / self.spacing;
        let mut v = 0.0;
        let mut d = 0.0;
        for &(j, c) in &self.funcs[i] {
            let (a, b) = cardinal(u - j as f64);
            v += c * a;
            d += c * b;
        }
        (v, d / self.spacing)
    }

    /// Support `[lo, hi]` of the whole basis.
    pub fn support(&self) -> (f64, f64) {
        let jmin = self.funcs.iter().flat_map(|f| f.iter().map(|p| p.0)).min().unwrap_or(0);
        let jmax = self.funcs.iter().flat_map(|f| f.iter().map(|p| p.0)).max().unwrap_or(0);
        (self.start + jmin as f64 * self.spacing, self.start + (jmax + 4) as f64 * self.spacing)
    }

    /// Gauss rule on the knot cells of `[lo, hi]` (clipped to the support),
    /// `npt` points per cell; a cell starting at 0 is graded towards 0 when
    /// `grade_zero` is set (for the weight `t^{1−2s}`).
    pub fn rule(&self, lo: f64, hi: f64, npt: usize, grade_zero: bool) -> Rule {
        let (a, b) = self.support();
        let (lo, hi) = (lo.max(a), hi.min(b));
        let mut rule = Rule::default();
        if !(hi > lo) {
            return rule;
        }
        let k0 = ((lo - self.start) / self.spacing).floor() as i64;
        let k1 = ((hi - self.start) / self.spacing).ceil() as i64;
        for k in k0..k1 {
            let c0 = (self.start + k as f64 * self.spacing).max(lo);
            let c1 = (self.start + (k + 1) as f64 * self.spacing).min(hi);
            if !(c1 > c0) {
                continue;
            }
            let part = if grade_zero && c0 == 0.0 {
                let mut edges = geometric_edges(1e-6 * c1, c1, 3.0);
                edges[0] = 0.0;
                Rule::panels(&edges, npt)
            } else {
                Rule::panels(&[c0, c1], npt)
            };
            rule.nodes.extend(part.nodes);
            rule.weights.extend(part.weights);
        }
        rule
    }

    /// Value and derivative matrices `[q][i]` at the nodes of `rule`.
    pub fn tabulate(&self, rule: &Rule) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut val = Vec::with_capacity(rule.len());
        let mut der = Vec::with_capacity(rule.len());
        for &x in &rule.nodes {
            let (v, d): (Vec<f64>, Vec<f64>) = (0..self.len()).map(|i| self.eval(i, x)).unzip();
            val.push(v);
            der.push(d);
        }
        (val, der)
    }
}
