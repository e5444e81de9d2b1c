//! Closed forms for the mean-field complex Ginzburg-Landau node: response
//! functions, interaction functions and every stability boundary polynomial.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::InteractionSet;
use crate::linalg::poly::Poly;

const ROOT_TOL: f64 = 1e-9;

fn a_of(c2: f64) -> f64 {
    1.0 / (1.0 + c2 * c2).sqrt()
}

/// Response functions at phase `θ` (time `θ/c2` along the orbit).
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedResponses {
    pub x: [f64; 2],
    pub g1: [f64; 2],
    pub g2: [f64; 2],
    pub z: [[f64; 2]; 3],
    pub i: [[f64; 2]; 3],
}

pub fn closed_responses(c2: f64, theta: f64) -> ClosedResponses {
    let a = a_of(c2);
    let r = [theta.cos(), -theta.sin()];
    let p = [theta.sin(), theta.cos()];
    let lin = |u: f64, v: f64| [u * r[0] + v * p[0], u * r[1] + v * p[1]];
    ClosedResponses {
        x: r,
        g1: lin(a, a * c2),
        g2: lin(0.5 * a * a * (3.0 - c2 * c2), 2.0 * a * a * c2),
        z: [lin(c2, -1.0), lin(0.0, 1.0 / a), lin(-0.5 * c2, 0.5)],
        i: [lin(1.0 / a, 0.0), lin(-3.0, c2), lin(0.5 * a * (3.0 - c2 * c2), -2.0 * a * c2)],
    }
}

/// `H_1..H_6` (`k` is 1-based).
pub fn closed_h(c1: f64, c2: f64, k: usize, chi: f64) -> f64 {
    let a = a_of(c2);
    let (s, c) = chi.sin_cos();
    match k {
        1 => (c2 - c1) * (c - 1.0) + (1.0 + c1 * c2) * s,
        2 => a * (1.0 + c2 * c2) * (c1 * c - s),
        3 => -a * (1.0 + c2 * c2) * (c1 * c - s),
        4 => (c1 * s + c - 1.0) / a,
        5 => 2.0 + (c1 * c2 - 3.0) * c - (3.0 * c1 + c2) * s,
        6 => (c1 + c2) * s + (1.0 - c1 * c2) * c,
        _ => panic!("interaction functions are numbered 1..6"),
    }
}

/// The closed-form interaction functions sampled into an [`InteractionSet`].
pub fn closed_interaction(c1: f64, c2: f64) -> InteractionSet {
    InteractionSet::from_fn(c2, -2.0, 16, |k, x| closed_h(c1, c2, k, x))
}

/// Synchrony boundary of the full model.
pub fn eps_s(c1: f64, c2: f64) -> f64 {
    -2.0 * (1.0 + c1 * c2) / (1.0 + c1 * c1)
}

/// Antisynchrony boundary polynomial of the full model (N = 2).
pub fn poly_eps_a(c1: f64, c2: f64) -> Poly {
    Poly::new(&[0.0, -2.0 * (1.0 + c1 * c2), c1 * c1 + 2.0 * c1 * c2 + 3.0])
}

/// Splay boundary polynomial of the full model (N ≥ 3).
pub fn poly_eps_0(c1: f64, c2: f64) -> Poly {
    let e = Poly::x();
    let one = Poly::constant(1.0);
    let t1 = &(&e * &(&e.scale(2.0) - &one)).scale(c1 * c1);
    let t2 = &(&(&e - &one) * &(&e.scale(2.0) - &one)).scale(4.0 * c1 * c2);
    let t3 = &(&e * &(&e - &one)).scale(-c2 * c2);
    let t4 = (&e.scale(3.0) - &Poly::constant(2.0)).powi(2);
    &(&(t1 + t2) + t3) + &t4
}

/// Phase-isostable antisynchrony boundary polynomial.
pub fn poly_eps_a_pi(c1: f64, c2: f64) -> Poly {
    let p = c1 * c2;
    Poly::new(&[-2.0 * (p + 1.0), 4.0 * p + c1 * c1 + 5.0, c1 * c1 * c2 * c2 - 2.0 * p - 3.0])
}

/// Phase-isostable splay boundary quintic.
pub fn poly_eps_0_pi(c1: f64, c2: f64) -> Poly {
    let p = c1 * c2;
    let (c1s, c2s) = (c1 * c1, c2 * c2);
    Poly::new(&[
        16.0 * (1.0 + p),
        4.0 * (c2s - c1s) - 96.0 * (1.0 + p),
        -4.0 * (3.0 + c1s) * c2s + 224.0 * p + 16.0 * c1s + 232.0,
        -4.0 * c2s * p + 8.0 * (2.0 * c1s + 1.0) * c2s - 260.0 * p - 20.0 * c1s - 284.0,
        8.0 * c2s * p + (5.0 - 19.0 * c1s) * c2s + 152.0 * p + 9.0 * c1s + 177.0,
        (c2s + 9.0) * (1.0 + p) * (p - 5.0),
    ])
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

pub fn eps_s2(c1: f64, c2: f64) -> Option<f64> {
    ratio(-2.0 * (1.0 + c1 * c2), c1 * c1 * (1.0 + c2 * c2))
}

pub fn eps_02(c1: f64, c2: f64) -> Option<f64> {
    ratio(4.0 * (1.0 + c1 * c2), (c1 * c1 - 1.0) * (1.0 + c2 * c2))
}

pub fn eps_a2(c1: f64, c2: f64) -> Option<f64> {
    ratio(2.0 * (1.0 + c1 * c2), c1 * c1 * (1.0 + c2 * c2))
}

/// Third-order synchrony boundary (isostable-based reduction).
pub fn poly_eps_s3(c1: f64, c2: f64) -> Poly {
    let b = (1.0 + c2 * c2) * c1 * c1;
    Poly::new(&[4.0 * (1.0 + c1 * c2), 2.0 * b, (c1 * c2 - 1.0) * b])
}

/// Third-order synchrony boundary of the isochron-based reduction.
pub fn poly_eps_s3_star(c1: f64, c2: f64) -> Poly {
    let b = 1.0 + c2 * c2;
    Poly::new(&[2.0 * (1.0 + c1 * c2), b * c1 * c1, b * c1.powi(3) * c2])
}

/// Third-order splay boundary (isostable-based reduction).
pub fn poly_eps_03(c1: f64, c2: f64) -> Poly {
    let b = 1.0 + c2 * c2;
    Poly::new(&[
        16.0 * (1.0 + c1 * c2),
        4.0 * (1.0 - c1 * c1) * b,
        b * (c2 * c1.powi(3) - 3.0 * c1 * c2 - 7.0 * c1 * c1 + 5.0),
    ])
}

/// Third-order splay boundary of the isochron-based reduction.
pub fn poly_eps_03_star(c1: f64, c2: f64) -> Poly {
    let b = 1.0 + c2 * c2;
    Poly::new(&[
        8.0 * (1.0 + c1 * c2),
        2.0 * b * (1.0 - c1 * c1),
        b * (2.0 - 2.0 * c1 * c1 - 3.0 * c1 * c2 + c1.powi(3) * c2),
    ])
}

/// Third-order antisynchrony boundary (isostable-based reduction).
pub fn poly_eps_a3(c1: f64, c2: f64) -> Poly {
    let b = (1.0 + c2 * c2) * c1 * c1;
    Poly::new(&[4.0 * (1.0 + c1 * c2), -2.0 * b, b * (c1 * c2 - 3.0)])
}

/// Real roots of `p`, ascending; a constant polynomial has none.
pub fn real_roots(p: &Poly) -> Result<Vec<f64>> {
    if p.degree() == 0 {
        return Ok(Vec::new());
    }
    p.real_roots(ROOT_TOL)
}

/// Every closed-form boundary at one `(c1, c2)`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundarySet {
    pub c1: f64,
    pub c2: f64,
    pub eps_s: f64,
    pub eps_a: Vec<f64>,
    pub eps_0: Vec<f64>,
    pub eps_a_pi: Vec<f64>,
    pub eps_0_pi: Vec<f64>,
    pub eps_s2: Option<f64>,
    pub eps_s3: Vec<f64>,
    pub eps_s3_star: Vec<f64>,
    pub eps_a2: Option<f64>,
    pub eps_a3: Vec<f64>,
    pub eps_02: Option<f64>,
    pub eps_03: Vec<f64>,
    pub eps_03_star: Vec<f64>,
}

pub fn exact_boundaries(c1: f64, c2: f64) -> Result<BoundarySet> {
    Ok(BoundarySet {
        c1,
        c2,
        eps_s: eps_s(c1, c2),
        eps_a: real_roots(&poly_eps_a(c1, c2))?,
        eps_0: real_roots(&poly_eps_0(c1, c2))?,
        eps_a_pi: real_roots(&poly_eps_a_pi(c1, c2))?,
        eps_0_pi: real_roots(&poly_eps_0_pi(c1, c2))?,
        eps_s2: eps_s2(c1, c2),
        eps_s3: real_roots(&poly_eps_s3(c1, c2))?,
        eps_s3_star: real_roots(&poly_eps_s3_star(c1, c2))?,
        eps_a2: eps_a2(c1, c2),
        eps_a3: real_roots(&poly_eps_a3(c1, c2))?,
        eps_02: eps_02(c1, c2),
        eps_03: real_roots(&poly_eps_03(c1, c2))?,
        eps_03_star: real_roots(&poly_eps_03_star(c1, c2))?,
    })
}

impl BoundarySet {
    /// `(curve, ε)` rows in a fixed order.
    pub fn curves(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("eps_s", self.eps_s)];
        let lists: [(&'static str, &Vec<f64>); 9] = [
            ("eps_a", &self.eps_a),
            ("eps_0", &self.eps_0),
            ("eps_a_pi", &self.eps_a_pi),
            ("eps_0_pi", &self.eps_0_pi),
            ("eps_s3", &self.eps_s3),
            ("eps_s3_star", &self.eps_s3_star),
            ("eps_a3", &self.eps_a3),
            ("eps_03", &self.eps_03),
            ("eps_03_star", &self.eps_03_star),
        ];
        for (name, v) in [("eps_s2", self.eps_s2), ("eps_a2", self.eps_a2), ("eps_02", self.eps_02)] {
            if let Some(x) = v {
                out.push((name, x));
            }
        }
        for (name, v) in lists {
            out.extend(v.iter().map(|&x| (name, x)));
        }
        out
    }
}

/// Frequency of the critical splay pair, as a raw expression in `ε`.
pub fn sigma_formula(c1: f64, c2: f64, eps: f64) -> f64 {
    let num = eps * ((c2 * c2 * c1 - 2.0 * c2 + 3.0 * c1) * eps * eps + 2.0 * (c2 - c1) * (2.0 * eps - 1.0));
    num / (2.0 * (eps - 1.0) * (3.0 * eps - 2.0))
}

/// `σ` at a root of the splay quintic; other `ε` are a domain error.
pub fn sigma_at_boundary(c1: f64, c2: f64, eps: f64) -> Result<f64> {
    let p = poly_eps_0_pi(c1, c2);
    let scale: f64 = p.0.iter().enumerate().map(|(k, a)| (a * eps.powi(k as i32)).abs()).sum();
    let res = p.eval(eps).abs();
    if res > 1e-7 * scale.max(1e-300) {
        return Err(Error::Domain(format!("ε = {eps} is not a splay boundary (relative residual {:.3e})", res / scale)));
    }
    Ok(sigma_formula(c1, c2, eps))
}
