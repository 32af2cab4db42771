//! Angle sweeps: eigenvalues below the threshold as a function of the opening
//! angle, with the monotonicity and squeeze checks.

use crate::error::{Error, Result};
use crate::fracform::FracOrder;
use crate::geometry::{CrossSection, Grid, Waveguide};
use crate::spectral::{waveguide_eigs, EigenOptions, ThresholdReference};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One angle of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Opening angle in radians.
    pub alpha: f64,
    /// All computed eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub threshold: f64,
    pub eps_disc: f64,
    /// `(1 − cos α)·Λ†`.
    pub lower_bound: f64,
    /// `#{λ_j < Λ† − ε_disc}`.
    pub count: usize,
    pub partial: bool,
}

impl SweepRow {
    /// Eigenvalues classified as below the threshold.
    pub fn lambdas(&self) -> Vec<f64> {
        let cut = self.threshold - self.eps_disc;
        self.eigenvalues.iter().cloned().filter(|&l| l < cut).collect()
    }

    pub fn lambda_1(&self) -> Option<f64> {
        self.eigenvalues.first().cloned()
    }
}

/// Eigenvalues of `Ω_α` for every angle in `angles` (radians), each on its own
/// grid with spacing `h` and truncation `L`.  Rows are computed concurrently
/// on the current rayon pool and returned in the order of `angles`.
#[allow(clippy::too_many_arguments)]
pub fn angle_sweep(
    s: FracOrder,
    angles: &[f64],
    omega: &CrossSection,
    h: f64,
    truncation: f64,
    k: usize,
    reference: ThresholdReference,
    opts: &EigenOptions,
) -> Result<Vec<SweepRow>> {
    if angles.is_empty() {
        return Err(Error::Argument("no angles to sweep".into()));
    }
    if k == 0 {
        return Err(Error::Argument("at least one eigenvalue per angle is needed".into()));
    }
    if angles.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("sweep angles must be strictly increasing".into()));
    }
    angles
        .par_iter()
        .map(|&alpha| {
            let w = Waveguide::new(alpha, omega.clone(), truncation)?;
            let grid = Grid::for_waveguides(std::slice::from_ref(&w), h)?;
            let r = waveguide_eigs(&w, s, &grid, k, reference, opts)?;
            Ok(SweepRow {
                alpha,
                eigenvalues: r.values,
                residuals: r.residuals,
                threshold: reference.value,
                eps_disc: reference.eps_disc,
                lower_bound: (1.0 - alpha.cos()) * reference.value,
                count: r.below_threshold_count,
                partial: r.partial,
            })
        })
        .collect()
}

/// Checks on a sweep ordered by increasing angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepVerdict {
    /// `λ₁` strictly increasing by more than `ε_disc` between neighbours.
    pub strictly_increasing: bool,
    pub counts_non_increasing: bool,
    /// `(1 − cos α)Λ† ≤ λ₁ < Λ†` at every angle.
    pub squeeze: bool,
    /// Human-readable reasons for every failed check.
    pub flags: Vec<String>,
}

pub fn sweep_verdict(rows: &[SweepRow]) -> SweepVerdict {
    let mut rows: Vec<&SweepRow> = rows.iter().collect();
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let mut flags = Vec::new();
    let deg = |a: f64| a.to_degrees();
    let mut strictly_increasing = true;
    for pair in rows.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if let (Some(la), Some(lb)) = (a.lambda_1(), b.lambda_1()) {
            if !(lb - la > a.eps_disc.max(b.eps_disc)) {
                strictly_increasing = false;
                flags.push(format!(
                    "λ₁ rises by {:.3e} from {:.1}° to {:.1}°, not beyond ε_disc = {:.3e}",
                    lb - la,
                    deg(a.alpha),
                    deg(b.alpha),
                    a.eps_disc.max(b.eps_disc)
                ));
            }
        }
    }
    let mut counts_non_increasing = true;
    for pair in rows.windows(2) {
        if pair[1].count > pair[0].count {
            counts_non_increasing = false;
            flags.push(format!(
                "count grows from {} at {:.1}° to {} at {:.1}°",
                pair[0].count,
                deg(pair[0].alpha),
                pair[1].count,
                deg(pair[1].alpha)
            ));
        }
    }
    let mut squeeze = true;
    for r in &rows {
        match r.lambda_1() {
            Some(l) if l >= r.lower_bound && l < r.threshold => {}
            Some(l) => {
                squeeze = false;
                if l < r.lower_bound - r.eps_disc {
                    flags.push(format!(
                        "inconsistent row at {:.1}°: λ₁ below (1 − cos α)Λ† by more than ε_disc (discretisation failure)",
                        deg(r.alpha)
                    ));
                }
                flags.push(format!(
                    "λ₁ = {l:.6} at {:.1}° outside [{:.6}, {:.6})",
                    deg(r.alpha),
                    r.lower_bound,
                    r.threshold
                ));
            }
            None => {
                squeeze = false;
                flags.push(format!("no eigenvalue computed at {:.1}°", deg(r.alpha)));
            }
        }
    }
    SweepVerdict { strictly_increasing, counts_non_increasing, squeeze, flags }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alpha_deg: f64, l1: f64, count: usize) -> SweepRow {
        let alpha = alpha_deg.to_radians();
        SweepRow {
            alpha,
            eigenvalues: vec![l1, 3.0],
            residuals: vec![0.0, 0.0],
            threshold: 2.3,
            eps_disc: 0.01,
            lower_bound: (1.0 - alpha.cos()) * 2.3,
            count,
            partial: false,
        }
    }

    #[test]
    fn verdict_accepts_a_monotone_sweep() {
        let v = sweep_verdict(&[row(45.0, 2.1, 2), row(30.0, 1.9, 3), row(60.0, 2.2, 1)]);
        assert!(v.strictly_increasing && v.counts_non_increasing && v.squeeze, "{:?}", v.flags);
    }

    #[test]
    fn verdict_flags_every_violation() {
        let v = sweep_verdict(&[row(30.0, 2.1, 1), row(45.0, 2.105, 2), row(60.0, 2.4, 0)]);
        assert!(!v.strictly_increasing);
        assert!(!v.counts_non_increasing);
        assert!(!v.squeeze);
        assert_eq!(v.flags.len(), 3);
    }

    #[test]
    fn lambdas_keep_only_bound_states() {
        let r = row(45.0, 2.1, 1);
        assert_eq!(r.lambdas(), vec![2.1]);
    }

    #[test]
    fn sweep_rejects_empty_requests() {
        let om = CrossSection::interval(0.0, 1.0).unwrap();
        let s = FracOrder::new(0.5).unwrap();
        let r = ThresholdReference { value: 2.3, eps_disc: 0.01 };
        assert!(angle_sweep(s, &[], &om, 0.125, 2.0, 1, r, &EigenOptions::default()).is_err());
        assert!(angle_sweep(s, &[0.5], &om, 0.125, 2.0, 0, r, &EigenOptions::default()).is_err());
        assert!(angle_sweep(s, &[0.6, 0.5], &om, 0.125, 2.0, 1, r, &EigenOptions::default()).is_err());
    }

    #[test]
    fn coarse_sweep_orders_the_ground_energies() {
        let om = CrossSection::interval(0.0, 1.0).unwrap();
        let s = FracOrder::new(0.5).unwrap();
        let r = ThresholdReference { value: 2.3, eps_disc: 0.0 };
        let angles = [30f64.to_radians(), 60f64.to_radians()];
        let rows = angle_sweep(s, &angles, &om, 0.125, 2.0, 1, r, &EigenOptions::default()).unwrap();
        assert!(rows[0].eigenvalues[0] < rows[1].eigenvalues[0]);
        assert!((rows[0].lower_bound - (1.0 - angles[0].cos()) * 2.3).abs() < 1e-15);
    }
}
