//! Composite Gauss–Legendre rules on panel partitions.
//!
//! Every integral of the lab that is not a lattice sum goes through these
//! rules: moments of the spectral density in ξ, graded t-integrals with the
//! `t^{1−2s}` weight, and the cutoff integrals in (z, t).  Panels are chosen by
//! the caller so that kinks and endpoint singularities sit on panel edges.

use gauss_quad::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("rule needs at least one node"));
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// A composite rule: nodes and weights.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `npt`-point Gauss rule on every panel `[edges[i], edges[i+1]]`.
    /// Degenerate panels are skipped.
    pub fn panels(edges: &[f64], npt: usize) -> Rule {
        let (g, w) = gauss_legendre(npt);
        let mut rule = Rule::default();
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (gi, wi) in g.iter().zip(&w) {
                rule.nodes.push(mid + half * gi);
                rule.weights.push(half * wi);
            }
        }
        rule
    }

    /// Panels `[0, a₀], [a₀, a₀q], …` growing geometrically from `first` up to `last`,
    /// plus the initial panel `[0, first]`.
    pub fn geometric(first: f64, last: f64, ratio: f64, npt: usize) -> Rule {
        Rule::panels(&geometric_edges(first, last, ratio), npt)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Multiply every weight by `g(node)`.
    pub fn weighted(mut self, g: impl Fn(f64) -> f64) -> Rule {
        for (x, w) in self.nodes.iter().zip(self.weights.iter_mut()) {
            *w *= g(*x);
        }
        self
    }
}

/// Edges `0, first, first·ratio, …` ending exactly at `last`.
pub fn geometric_edges(first: f64, last: f64, ratio: f64) -> Vec<f64> {
    assert!(first > 0.0 && last > first && ratio > 1.0);
    let mut edges = vec![0.0, first];
    let mut x = first;
    while x * ratio < last {
        x *= ratio;
        edges.push(x);
    }
    edges.push(last);
    edges
}
