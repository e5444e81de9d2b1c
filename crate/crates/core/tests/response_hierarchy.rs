mod common;

use approx::assert_abs_diff_eq;
use phaseiso::cgle::closed_responses;
use phaseiso::response::OrbitJets;

fn sup_errors(c1: f64, c2: f64) -> Vec<(&'static str, f64)> {
    let (_, red) = common::cgle(c1, c2, 64);
    let r = &red.response;
    let mut worst = vec![("g1", 0.0f64), ("g2", 0.0), ("Z0", 0.0), ("Z1", 0.0), ("Z2", 0.0), ("I0", 0.0), ("I1", 0.0), ("I2", 0.0)];
    for th in common::theta_grid(97) {
        let e = closed_responses(c2, th);
        let exact = [e.g1, e.g2, e.z[0], e.z[1], e.z[2], e.i[0], e.i[1], e.i[2]];
        let got = [&r.g1, &r.g2, &r.z0, &r.z1, &r.z2, &r.i0, &r.i1, &r.i2];
        for (k, (x, f)) in exact.iter().zip(got).enumerate() {
            let v = f.at(th);
            worst[k].1 = worst[k].1.max((v[0] - x[0]).abs()).max((v[1] - x[1]).abs());
        }
    }
    worst
}

#[test]
fn mfcgl_responses_match_closed_forms() {
    for c1 in [-2.0, 0.0, 1.0] {
        for c2 in [0.5, 1.1, 3.0] {
            for (name, err) in sup_errors(c1, c2) {
                assert!(err < 1e-6, "c1={c1} c2={c2} {name}: {err:e}");
            }
        }
    }
}

#[test]
fn morris_lecar_adjoint_residuals_are_small() {
    let r = &common::ml().red.response;
    for (name, res) in &r.residuals {
        assert!(*res < 1e-6, "{name}: {res:e}");
    }
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
}

#[test]
fn normalization_identities_hold() {
    let ml = common::ml();
    let (o, r) = (&ml.red.orbit, &ml.red.response);
    let jets = OrbitJets::new(&ml.model, o).unwrap();
    for (name, d) in r.normalization_defects(&jets) {
        // higher orders sum products of large responses near the spike
        let tol = if name.ends_with('1') || name.ends_with('2') { 1e-6 } else { 1e-8 };
        assert!(d < tol, "{name}: {d:e}");
    }
    // Z0·F = ω along the orbit, I0(0)·g1(0) = 1, ‖g1(0)‖ = 1
    for th in common::theta_grid(50) {
        let mut f = vec![0.0; 2];
        ml.model.field.eval(&o.at(th), &mut f);
        let z = r.z0.at(th);
        assert_abs_diff_eq!(z[0] * f[0] + z[1] * f[1], o.omega, epsilon = 1e-8);
    }
    let (i0, g1) = (r.i0.at(0.0), r.g1.at(0.0));
    assert_abs_diff_eq!(i0[0] * g1[0] + i0[1] * g1[1], 1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(g1[0].hypot(g1[1]), 1.0, epsilon = 1e-12);
}

#[test]
fn isostable_response_is_orthogonal_to_the_flow() {
    let ml = common::ml();
    let (o, r) = (&ml.red.orbit, &ml.red.response);
    for th in common::theta_grid(40) {
        let mut f = vec![0.0; 2];
        ml.model.field.eval(&o.at(th), &mut f);
        let i0 = r.i0.at(th);
        let z0 = r.z0.at(th);
        let g1 = r.g1.at(th);
        assert_abs_diff_eq!(i0[0] * f[0] + i0[1] * f[1], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(z0[0] * g1[0] + z0[1] * g1[1], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(i0[0] * g1[0] + i0[1] * g1[1], 1.0, epsilon = 1e-8);
    }
}

#[test]
fn closed_responses_are_dual_on_the_circle() {
    // independent identities of the closed forms themselves
    for c2 in [0.5, 1.1, 3.0] {
        for th in common::theta_grid(13) {
            let e = closed_responses(c2, th);
            let f = [-c2 * th.sin(), -c2 * th.cos()];
            assert_abs_diff_eq!(e.z[0][0] * f[0] + e.z[0][1] * f[1], c2, epsilon = 1e-12);
            assert_abs_diff_eq!(e.i[0][0] * e.g1[0] + e.i[0][1] * e.g1[1], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(e.g1[0].hypot(e.g1[1]), 1.0, epsilon = 1e-12);
        }
    }
}
