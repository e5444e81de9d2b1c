use std::collections::BTreeMap;

use approx::assert_relative_eq;
use phaseiso::error::Error;
use phaseiso::model::{derivative, fd_hessians, fd_jacobian, make_mfcgl_node, make_morris_lecar_node, ModelDescriptor, MorrisLecarParams, OscillatorModel};
use proptest::prelude::*;

fn ml_field(p: &MorrisLecarParams, x: &[f64]) -> [f64; 2] {
    // written out from the conductance equations, independently of the library
    let (v, w) = (x[0], x[1]);
    let m_inf = 0.5 * (1.0 + ((v - p.v1) / p.v2).tanh());
    let w_inf = 0.5 * (1.0 + ((v - p.v3) / p.v4).tanh());
    let lam = ((v - p.v3) / (2.0 * p.v4)).cosh();
    let i_ion = p.g_ca * m_inf * (v - p.e_ca) + p.g_k * w * (v - p.e_k) + p.g_l * (v - p.e_l);
    [(p.ib - i_ion) / p.cm, p.phi * lam * (w_inf - w)]
}

fn eval(m: &OscillatorModel, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.dim()];
    m.field.eval(x, &mut out);
    out
}

#[test]
fn morris_lecar_field_matches_conductance_equations() {
    let p = MorrisLecarParams::default();
    let m = make_morris_lecar_node(p.clone()).unwrap();
    for x in [[-0.1, 0.07], [0.2, 0.3], [-0.4, 0.01], [0.05, 0.5]] {
        let f = eval(&m, &x);
        let e = ml_field(&p, &x);
        assert_relative_eq!(f[0], e[0], epsilon = 1e-14);
        assert_relative_eq!(f[1], e[1], epsilon = 1e-14);
    }
}

#[test]
fn mfcgl_field_is_the_stuart_landau_normal_form() {
    let c2 = 1.1;
    let m = make_mfcgl_node(-2.0, c2).unwrap();
    for (x, y) in [(0.3, -0.4), (1.0, 0.0), (-0.7, 1.2)] {
        let z = num_complex::Complex64::new(x, y);
        let dz = z - num_complex::Complex64::new(1.0, c2) * z.norm_sqr() * z;
        let f = eval(&m, &[x, y]);
        assert_relative_eq!(f[0], dz.re, epsilon = 1e-14);
        assert_relative_eq!(f[1], dz.im, epsilon = 1e-14);
    }
}

#[test]
fn analytic_jacobians_match_finite_differences() {
    let models = [make_mfcgl_node(0.4, 3.0).unwrap(), make_morris_lecar_node(MorrisLecarParams::default()).unwrap()];
    for m in &models {
        for x in [vec![0.1, 0.2], vec![-0.2, 0.35]] {
            let a = m.field.jacobian(&x);
            let fd = fd_jacobian(2, 2, &x, |y, o| m.field.eval(y, o));
            let d = (&a - &fd).amax();
            assert!(d < 1e-6 * a.amax().max(1.0), "{}: {d:e}", m.field.name());
        }
    }
}

#[test]
fn analytic_hessians_match_finite_differences() {
    let models = [make_mfcgl_node(0.4, 3.0).unwrap(), make_morris_lecar_node(MorrisLecarParams::default()).unwrap()];
    for m in &models {
        let x = [0.13, 0.21];
        let a = m.field.hessians(&x).expect("analytic hessians");
        let fd = fd_hessians(m.field.as_ref(), &x);
        for (ha, hf) in a.iter().zip(&fd) {
            assert!((ha - hf).amax() < 1e-5 * ha.amax().max(1.0), "{}: {ha} vs {hf}", m.field.name());
        }
    }
}

#[test]
fn derivative_tensor_contracts_like_the_hessian() {
    let m = make_morris_lecar_node(MorrisLecarParams::default()).unwrap();
    let x = [0.05, 0.2];
    let d2 = derivative(m.field.as_ref(), &x, 2).unwrap();
    let hs = m.field.hessians(&x).unwrap();
    let (u, v) = ([0.3, -1.2], [0.7, 0.4]);
    for q in 0..2 {
        let direct = (nalgebra::RowDVector::from_row_slice(&u) * &hs[q] * nalgebra::DVector::from_row_slice(&v))[(0, 0)];
        assert_relative_eq!(d2.bilinear(q, &u, &v), direct, epsilon = 1e-12, max_relative = 1e-10);
    }
}

#[test]
fn derivative_order_above_three_is_rejected() {
    let m = make_mfcgl_node(0.0, 1.0).unwrap();
    assert!(matches!(derivative(m.field.as_ref(), &[0.1, 0.1], 4), Err(Error::Order(4))));
}

#[test]
fn descriptors_parse_and_validate() {
    let m = ModelDescriptor::from_json(r#"{"model": "morris_lecar", "params": {"ib": 0.08}}"#).unwrap();
    assert_eq!(m.descriptor.params.get("ib"), Some(&0.08));
    let bad = ModelDescriptor { model: "hodgkin_huxley".into(), params: BTreeMap::new() };
    assert!(matches!(bad.build(), Err(Error::Config(_))));
    let unknown = ModelDescriptor { model: "morris_lecar".into(), params: BTreeMap::from([("nope".to_string(), 1.0)]) };
    assert!(matches!(unknown.build(), Err(Error::Config(_))));
    assert!(make_mfcgl_node(f64::NAN, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mfcgl_coupling_is_diffusive(c1 in -3.0..3.0f64, xi in prop::array::uniform2(-1.0..1.0f64), xj in prop::array::uniform2(-1.0..1.0f64)) {
        let m = make_mfcgl_node(c1, 1.0).unwrap();
        let mut g = [0.0; 2];
        m.coupling.eval(&xi, &xj, &mut g);
        let (dx, dy) = (xj[0] - xi[0], xj[1] - xi[1]);
        prop_assert!((g[0] - (dx - c1 * dy)).abs() < 1e-14);
        prop_assert!((g[1] - (c1 * dx + dy)).abs() < 1e-14);
        m.coupling.eval(&xi, &xi, &mut g);
        prop_assert!(g[0] == 0.0 && g[1] == 0.0);
    }

    #[test]
    fn mfcgl_circle_is_invariant(c2 in 0.1..4.0f64, phi in 0.0..6.3f64) {
        let m = make_mfcgl_node(0.0, c2).unwrap();
        let x = [phi.cos(), phi.sin()];
        let f = eval(&m, &x);
        // on |z| = 1 the field is tangent with speed c2
        prop_assert!((f[0] * x[0] + f[1] * x[1]).abs() < 1e-13);
        prop_assert!(((f[0] * f[0] + f[1] * f[1]).sqrt() - c2.abs()).abs() < 1e-13);
    }
}
