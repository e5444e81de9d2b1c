mod common;

use phaseiso::cgle::{self, closed_h, closed_interaction, exact_boundaries, poly_eps_0_pi, real_roots, sigma_at_boundary, sigma_formula};
use phaseiso::compare::{compare_pi, linspace, BoundaryState};
use phaseiso::error::Error;
use phaseiso::locked::{splay_analysis, Decomposition, SplaySize};
use phaseiso::linalg::poly::Poly;
use proptest::prelude::*;

fn residual(p: &Poly, x: f64) -> f64 {
    let scale: f64 = p.0.iter().enumerate().map(|(k, a)| (a * x.powi(k as i32)).abs()).sum();
    p.eval(x).abs() / scale.max(1e-300)
}

#[test]
fn antisynchrony_polynomial_has_the_trivial_root() {
    let (c1, c2) = (-2.0, 1.1);
    let r = real_roots(&cgle::poly_eps_a(c1, c2)).unwrap();
    let nontrivial = 2.0 * (1.0 + c1 * c2) / (c1 * c1 + 2.0 * c1 * c2 + 3.0);
    assert_eq!(r.len(), 2);
    assert!(r.iter().any(|x| x.abs() < 1e-12));
    assert!(r.iter().any(|x| (x - nontrivial).abs() < 1e-12));
}

#[test]
fn boundary_values_at_reference_parameters() {
    let b = exact_boundaries(-2.0, 1.1).unwrap();
    assert!((b.eps_s - 0.48).abs() < 1e-12);
    assert!((b.eps_s2.unwrap() - 2.4 / (4.0 * 2.21)).abs() < 1e-12);
    assert_eq!(b.curves().len(), 4 + b.eps_a.len() + b.eps_0.len() + b.eps_a_pi.len() + b.eps_0_pi.len()
        + b.eps_s3.len() + b.eps_s3_star.len() + b.eps_a3.len() + b.eps_03.len() + b.eps_03_star.len());
}

#[test]
fn closed_interaction_set_reproduces_closed_h() {
    let h = closed_interaction(0.7, 2.0);
    for chi in common::theta_grid(37) {
        for k in 1..=6 {
            assert!((h.eval(k, chi) - closed_h(0.7, 2.0, k, chi)).abs() < 1e-12);
        }
    }
}

#[test]
fn sigma_is_only_defined_on_the_splay_boundary() {
    let (c1, c2) = (-2.0, 1.1);
    assert!(matches!(sigma_at_boundary(c1, c2, 0.2), Err(Error::Domain(_))));
    let roots = real_roots(&poly_eps_0_pi(c1, c2)).unwrap();
    assert!(!roots.is_empty());
    for e in roots {
        assert_eq!(sigma_at_boundary(c1, c2, e).unwrap(), sigma_formula(c1, c2, e));
    }
}

#[test]
fn sigma_matches_the_critical_splay_frequency() {
    for (c1, c2) in [(-2.0, 1.1), (-2.5, 0.5), (1.5, 3.0)] {
        let h = closed_interaction(c1, c2);
        for e in real_roots(&poly_eps_0_pi(c1, c2)).unwrap().into_iter().filter(|e| e.abs() > 1e-6 && (e - 1.0).abs() > 1e-6) {
            let Ok((_, rep)) = splay_analysis(SplaySize::Finite(5), &h, e) else { continue };
            let Some(Decomposition::Splay { blocks }) = rep.decomposition else { panic!("splay blocks") };
            let b = blocks.iter().find(|(q, _)| *q == 1).unwrap().1;
            // the pair that crosses sits on the imaginary axis
            let crit = b.iter().min_by(|x, y| x.re.abs().partial_cmp(&y.re.abs()).unwrap()).unwrap();
            assert!(crit.re.abs() < 1e-8, "c1={c1} c2={c2} ε={e}: Re {}", crit.re);
            let s = sigma_at_boundary(c1, c2, e).unwrap();
            assert!((s.abs() - crit.im.abs()).abs() < 1e-8, "σ {s} vs Im {}", crit.im);
        }
    }
}

#[test]
fn pipeline_boundaries_match_the_closed_forms() {
    let grid = linspace(-1.5, 0.999, 500);
    for c2 in [0.5, 1.1, 3.0] {
        for c1 in [-2.5, -1.0, 0.4, 2.2] {
            let (_, red) = common::cgle(c1, c2, 64);
            let h = red.interaction.trimmed(1e-12);
            for state in [BoundaryState::Synchrony, BoundaryState::Antisynchrony, BoundaryState::Splay(SplaySize::Finite(5)), BoundaryState::Splay(SplaySize::Infinite)] {
                let row = compare_pi(state, c1, c2, &h, &grid).unwrap();
                assert!(row.max_deviation() < 1e-5, "{} c1={c1} c2={c2}: {:?}", row.state, row.matches);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_root_solves_its_polynomial(c1 in -3.0..3.0f64, c2 in 0.1..4.0f64) {
        let polys = [
            cgle::poly_eps_a(c1, c2), cgle::poly_eps_0(c1, c2), cgle::poly_eps_a_pi(c1, c2), cgle::poly_eps_0_pi(c1, c2),
            cgle::poly_eps_s3(c1, c2), cgle::poly_eps_s3_star(c1, c2), cgle::poly_eps_a3(c1, c2),
            cgle::poly_eps_03(c1, c2), cgle::poly_eps_03_star(c1, c2),
        ];
        for p in &polys {
            for r in real_roots(p).unwrap() {
                prop_assert!(residual(p, r) < 1e-8, "residual {:e} at {}", residual(p, r), r);
            }
        }
    }

    #[test]
    fn closed_responses_are_rotations(c2 in 0.1..4.0f64, th in 0.0..6.283f64) {
        let r0 = cgle::closed_responses(c2, 0.0);
        let r = cgle::closed_responses(c2, th);
        let rot = |v: [f64; 2]| [v[0] * th.cos() + v[1] * th.sin(), -v[0] * th.sin() + v[1] * th.cos()];
        for (a, b) in [(r0.g1, r.g1), (r0.g2, r.g2), (r0.z[0], r.z[0]), (r0.i[2], r.i[2])] {
            let ra = rot(a);
            prop_assert!((ra[0] - b[0]).abs() < 1e-12 && (ra[1] - b[1]).abs() < 1e-12);
        }
    }
}
