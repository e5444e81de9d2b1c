mod common;

use std::f64::consts::PI;

use phaseiso::compare::compare_hop;
use phaseiso::error::Error;
use phaseiso::higher_order::{hop_jacobian_eigenvalues, hop_spectrum, hop_stability, higher_order_kernels, HigherOrderKernels, HigherOrderOptions, HopState};
use phaseiso::locked::multiset_distance;
use proptest::prelude::*;

fn cgle_kernels(c1: f64, c2: f64) -> HigherOrderKernels {
    let (_, red) = common::cgle(c1, c2, 64);
    higher_order_kernels(&red.kernels, &HigherOrderOptions::default()).unwrap()
}

fn check_against_quadrature(q: &HigherOrderKernels, tol: f64) {
    let pts = [(0.0, 0.0, 0.0), (0.3, 2.1, 4.0), (5.0, 1.2, 0.7), (2.5, 2.5, 6.0)];
    for (a, b, c) in pts {
        let scale = |x: f64, y: f64| tol * x.abs().max(y.abs()).max(1.0);
        let (s, t) = (q.q1.eval(&[a, b]), q.q1_quadrature(a, b, 20000));
        assert!((s - t).abs() < scale(s, t), "q1({a},{b}) {s} vs {t}");
        let (s, t) = (q.q2.eval(&[a, b, c]), q.q2_quadrature(a, b, c, 20000));
        assert!((s - t).abs() < scale(s, t), "q2({a},{b},{c}) {s} vs {t}");
        let (s, t) = (q.q3.eval(&[a, b, c]), q.q3_quadrature(a, b, c, 20000));
        assert!((s - t).abs() < scale(s, t), "q3({a},{b},{c}) {s} vs {t}");
    }
}

#[test]
fn mfcgl_q_kernels_match_direct_quadrature() {
    for (c1, c2) in [(-2.0, 1.1), (1.0, 0.5), (0.3, 3.0)] {
        check_against_quadrature(&cgle_kernels(c1, c2), 1e-7);
    }
}

#[test]
fn morris_lecar_q_kernels_match_direct_quadrature() {
    let raw = &common::ml().red.kernels;
    let q = higher_order_kernels(raw, &HigherOrderOptions { kmax: 6, tol: 1e-12 }).unwrap();
    check_against_quadrature(&q, 1e-7);
}

#[test]
fn first_order_average_is_h1() {
    let (_, red) = common::cgle(-2.0, 1.1, 64);
    let q = higher_order_kernels(&red.kernels, &HigherOrderOptions::default()).unwrap();
    for chi in [0.0, 1.0, 2.7, 5.9] {
        assert!((q.hbar[0].eval(&[chi]) - red.interaction.eval(1, chi)).abs() < 1e-10);
    }
}

#[test]
fn order_outside_one_to_three_is_rejected() {
    let q = cgle_kernels(-2.0, 1.1);
    assert!(matches!(hop_stability(&q, HopState::Synchrony, 4, 3, 0.1), Err(Error::Order(4))));
    assert!(matches!(hop_stability(&q, HopState::Synchrony, 0, 3, 0.1), Err(Error::Order(0))));
    assert!(hop_spectrum(&q, HopState::Antisynchrony, 3).is_err());
    assert!(hop_spectrum(&q, HopState::Splay, 1).is_err());
}

#[test]
fn symmetric_spectra_match_the_full_jacobian() {
    let q = cgle_kernels(-2.0, 1.1);
    for eps in [-0.4, 0.15, 0.6] {
        for order in 1..=3 {
            for n in [3, 5, 8] {
                let sync = hop_stability(&q, HopState::Synchrony, order, n, eps).unwrap();
                let full = hop_jacobian_eigenvalues(&q, &vec![0.0; n], order, eps).unwrap();
                assert!(multiset_distance(&sync.eigenvalues, &full) < 1e-9, "sync n={n} order={order}");
                let splay = hop_stability(&q, HopState::Splay, order, n, eps).unwrap();
                let th: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
                let full = hop_jacobian_eigenvalues(&q, &th, order, eps).unwrap();
                assert!(multiset_distance(&splay.eigenvalues, &full) < 1e-9, "splay n={n} order={order}");
            }
            let anti = hop_stability(&q, HopState::Antisynchrony, order, 2, eps).unwrap();
            let full = hop_jacobian_eigenvalues(&q, &[0.0, PI], order, eps).unwrap();
            assert!(multiset_distance(&anti.eigenvalues, &full) < 1e-9);
        }
    }
}

#[test]
fn third_order_boundaries_do_not_depend_on_network_size() {
    let q = cgle_kernels(-2.0, 1.1);
    for state in [HopState::Synchrony, HopState::Splay] {
        let b3 = hop_spectrum(&q, state, 3).unwrap().boundaries(3).unwrap();
        for n in [5, 40] {
            let b = hop_spectrum(&q, state, n).unwrap().boundaries(3).unwrap();
            assert_eq!(b.len(), b3.len(), "{state:?} N={n}");
            for (x, y) in b.iter().zip(&b3) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }
}

fn hop_deviation(c1: f64, c2: f64) -> f64 {
    let q = cgle_kernels(c1, c2);
    let mut worst = 0.0f64;
    for (state, n) in [(HopState::Synchrony, 5), (HopState::Splay, 5), (HopState::Antisynchrony, 2)] {
        for order in 2..=3 {
            let row = compare_hop(&q, state, order, n, c1, c2, -10.0, 10.0).unwrap();
            worst = worst.max(row.max_deviation());
        }
    }
    worst
}

#[test]
fn mfcgl_boundaries_match_closed_polynomials() {
    for (c1, c2) in [(-2.0, 1.1), (-1.0, 0.5), (2.0, 3.0), (0.5, 1.1)] {
        let d = hop_deviation(c1, c2);
        assert!(d < 1e-6, "c1={c1} c2={c2}: {d:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_mfcgl_parameters_match_closed_polynomials(c1 in -3.0..3.0f64, c2 in 0.2..3.0f64) {
        // avoid the c1 = ±1 degeneracy of the second-order splay curve
        prop_assume!((c1.abs() - 1.0).abs() > 1e-3);
        let d = hop_deviation(c1, c2);
        prop_assert!(d < 1e-6, "c1={} c2={}: {:e}", c1, c2, d);
    }
}
