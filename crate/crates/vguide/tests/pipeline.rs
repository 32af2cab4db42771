//! End-to-end checks of the library on coarse problems: geometry maps,
//! threshold, waveguide eigenvalues, pushforward and the extension energy.

use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;
use vguide::extension::{cs_extend, default_levels, weighted_energy, TGrid};
use vguide::fracform::{form_energy, mass_norm, FracOrder, GridFunction};
use vguide::geometry::{jacobian_between, map_between, map_from_tube, map_to_tube, CrossSection, Grid, Mask, Waveguide};
use vguide::special::cs_constant;
use vguide::spectral::{threshold, waveguide_eigs, EigenOptions, ThresholdReference};
use vguide::theorems::pushforward;

fn unit() -> CrossSection {
    CrossSection::interval(0.0, 1.0).unwrap()
}

proptest! {
    #[test]
    fn tube_maps_are_inverse(beta in 0.1f64..FRAC_PI_2, x in -3.0f64..3.0, z in -10.0f64..10.0) {
        let p = [x, z];
        let q = map_from_tube(beta, &map_to_tube(beta, &p).unwrap()).unwrap();
        prop_assert!((q[0] - x).abs() < 1e-9 * (1.0 + x.abs() + z.abs()));
        prop_assert_eq!(q[1], z);
    }

    #[test]
    fn map_between_sends_guides_to_guides(a in 0.2f64..1.5, d in 0.0f64..0.07, y in 0.01f64..0.99, z in -6.0f64..6.0) {
        let b = (a + d).min(FRAC_PI_2);
        let wa = Waveguide::new(a, unit(), 8.0).unwrap();
        let wb = Waveguide::new(b, unit(), 8.0).unwrap();
        // a point of Ω_α at cross-section coordinate y
        let p = map_from_tube(a, &[y, z]).unwrap();
        prop_assert!(wa.contains(&p));
        prop_assert!(wb.contains(&map_between(a, b, &p).unwrap()));
        prop_assert!(jacobian_between(a, b) <= 1.0 + 1e-15);
    }
}

#[test]
fn threshold_lies_below_the_spectral_value() {
    let s = FracOrder::new(0.5).unwrap();
    let t = threshold(&unit(), s, 1.0 / 32.0, &EigenOptions::default()).unwrap();
    // The restricted operator lies below the spectral one, whose first value is π.
    assert!(t.value > 2.0 && t.value < PI, "{}", t.value);
    assert!((mass_norm(&t.phi) - 1.0).abs() < 1e-10);
}

#[test]
fn bent_guide_binds_below_its_threshold() {
    let s = FracOrder::new(0.5).unwrap();
    let opts = EigenOptions::default();
    let h = 1.0 / 32.0;
    let t = threshold(&unit(), s, h, &opts).unwrap();
    let reference = ThresholdReference { value: t.value, eps_disc: 0.0 };
    let w = Waveguide::new(PI / 6.0, unit(), 5.0).unwrap();
    let grid = Grid::for_waveguides(std::slice::from_ref(&w), h).unwrap();
    let e = waveguide_eigs(&w, s, &grid, 1, reference, &opts).unwrap();
    assert!(e.values[0] < t.value - 0.1, "λ₁ = {} vs Λ† = {}", e.values[0], t.value);
    assert_eq!(e.below_threshold_count, 1);
}

#[test]
fn pushforward_preserves_the_norm() {
    let s = FracOrder::new(0.5).unwrap();
    let opts = EigenOptions::default();
    let h = 1.0 / 32.0;
    let t = threshold(&unit(), s, h, &opts).unwrap();
    let reference = ThresholdReference { value: t.value, eps_disc: 0.0 };
    let source = Waveguide::new(PI / 3.0, unit(), 3.0).unwrap();
    let grid = Grid::for_waveguides(std::slice::from_ref(&source), h).unwrap();
    let u = waveguide_eigs(&source, s, &grid, 1, reference, &opts).unwrap().vectors.remove(0);
    let target = source.with_angle(PI / 4.0).unwrap();
    let tg = Grid::for_waveguides(std::slice::from_ref(&target), h).unwrap();
    let v = pushforward(&u, &source, &target, &tg).unwrap();
    assert!((mass_norm(&v) - 1.0).abs() < 0.02, "‖v‖² = {}", mass_norm(&v));
    assert!(pushforward(&v, &target, &source, &grid).is_err(), "pushforward to a larger angle must be rejected");
}

#[test]
fn extension_energy_matches_the_form_in_two_dimensions() {
    let s = FracOrder::new(0.5).unwrap();
    let h = 1.0 / 32.0;
    let grid = Grid::new(h, vec![0.0, 0.0], vec![33, 33]).unwrap();
    let mask = Arc::new(Mask::full(&grid));
    let u = GridFunction::sample(grid, mask, |p| {
        let r2 = ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)) / 0.16;
        if r2 < 1.0 {
            (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    })
    .unwrap();
    let levels = default_levels(u.grid(), 4.0, TGrid::default());
    let field = cs_extend(&u, s, &levels, 4.0).unwrap();
    let lhs = cs_constant(0.5) * weighted_energy(&field, s).unwrap();
    let rhs = form_energy(&u, s).unwrap();
    assert!((lhs - rhs).abs() < 0.1 * rhs, "{lhs} vs {rhs}");
}
