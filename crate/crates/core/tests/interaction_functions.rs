mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use phaseiso::cgle::closed_h;
use phaseiso::interaction::quadrature_h;
use proptest::prelude::*;

#[test]
fn mfcgl_interaction_functions_match_closed_forms() {
    for c1 in [-2.0, 0.0, 1.0] {
        for c2 in [0.5, 1.1, 3.0] {
            let (_, red) = common::cgle(c1, c2, 64);
            for k in 1..=6 {
                let err = common::theta_grid(101).into_iter().map(|x| (red.interaction.eval(k, x) - closed_h(c1, c2, k, x)).abs()).fold(0.0, f64::max);
                assert!(err < 1e-6, "c1={c1} c2={c2} H{k}: {err:e}");
            }
        }
    }
}

#[test]
fn spectral_averages_match_direct_quadrature() {
    let ml = common::ml();
    let (o, r, h) = (&ml.red.orbit, &ml.red.response, &ml.red.interaction);
    for k in 1..=6 {
        for chi in [0.0, 0.9, 2.5, 4.4] {
            let q = quadrature_h(&ml.model, o, r, k, chi, 512);
            let s = h.eval(k, chi);
            assert!((q - s).abs() < 1e-7 * s.abs().max(1.0), "H{k}({chi}) quadrature {q} spectral {s}");
        }
    }
}

#[test]
fn morris_lecar_kernels_are_resolved() {
    let ml = common::ml();
    assert!(ml.red.kernels.tail < 1e-9, "tail {:e}", ml.red.kernels.tail);
}

#[test]
fn diffusive_coupling_vanishes_at_zero_lag() {
    // h1 and h4 are proportional to x_j - x_i
    let h = &common::ml().red.interaction;
    assert_abs_diff_eq!(h.eval(1, 0.0), 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(h.eval(4, 0.0), 0.0, epsilon = 1e-10);
    // and h2 + h3 = 0, h5 + h6 = 0 at zero lag with linear coupling
    assert_abs_diff_eq!(h.eval(2, 0.0) + h.eval(3, 0.0), 0.0, epsilon = 1e-8);
    assert_abs_diff_eq!(h.eval(5, 0.0) + h.eval(6, 0.0), 0.0, epsilon = 1e-8);
}

#[test]
fn csv_has_one_row_per_sample() {
    let h = &common::ml().red.interaction;
    let csv = h.to_csv(32);
    assert_eq!(csv.lines().count(), 33);
    assert!(csv.starts_with("chi,H1,H2,H3,H4,H5,H6"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interaction_functions_are_periodic_and_derivatives_consistent(chi in 0.0..(2.0 * PI), k in 1usize..=6) {
        let h = &common::ml().red.interaction;
        let a = h.eval(k, chi);
        prop_assert!((a - h.eval(k, chi + 2.0 * PI)).abs() < 1e-9 * a.abs().max(1.0));
        let d = 1e-5;
        let fd = (h.eval(k, chi + d) - h.eval(k, chi - d)) / (2.0 * d);
        prop_assert!((fd - h.deriv(k, chi)).abs() < 1e-4 * h.deriv(k, chi).abs().max(1.0));
    }

    #[test]
    fn trimming_keeps_values(chi in 0.0..(2.0 * PI)) {
        let h = &common::ml().red.interaction;
        let t = h.trimmed(1e-12);
        for k in 1..=6 {
            prop_assert!((t.eval(k, chi) - h.eval(k, chi)).abs() < 1e-9);
        }
    }
}
