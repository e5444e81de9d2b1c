//! Node vector fields, coupling functions and their derivative tensors.

mod mfcgl;
mod morris_lecar;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mfcgl::{make_mfcgl_node, Mfcgl};
pub use morris_lecar::{make_morris_lecar_node, MorrisLecar, MorrisLecarParams};

/// Smooth autonomous vector field `dx/dt = F(x)`.
pub trait VectorField: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        fd_jacobian(self.dim(), self.dim(), x, |y, o| self.eval(y, o))
    }

    /// Analytic Hessians `∂²F_q/∂x∂xᵀ`, one per component.
    fn hessians(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Analytic third derivatives, one `n² x n` matrix per component.
    fn third(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Whether orders 1..=3 are available analytically.
    fn analytic_orders(&self) -> [bool; 3];

    fn params(&self) -> BTreeMap<String, f64>;

    /// Per-coordinate admissible interval.
    fn bounds(&self) -> Vec<(f64, f64)>;
}

/// Pairwise coupling `G(x_i, x_j)`.
pub trait Coupling: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, xi: &[f64], xj: &[f64], out: &mut [f64]);

    /// `B` when `G(x_i, x_j) = B (x_j - x_i)`.
    fn linear_matrix(&self) -> Option<DMatrix<f64>> {
        None
    }

    /// `(∂G/∂x_i, ∂G/∂x_j)`.
    fn jacobians(&self, xi: &[f64], xj: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.dim();
        let j1 = fd_jacobian(n, n, xi, |y, o| self.eval(y, xj, o));
        let j2 = fd_jacobian(n, n, xj, |y, o| self.eval(xi, y, o));
        (j1, j2)
    }

    /// Second-derivative blocks `[H¹¹, H¹², H²¹, H²²]`, each a vector of
    /// per-component `n x n` matrices with `H^{ab}_q = ∂²G_q/∂x_a∂x_bᵀ`.
    fn hessian_blocks(&self, xi: &[f64], xj: &[f64]) -> [Vec<DMatrix<f64>>; 4];

    /// True when `G(x, x) = 0` for all `x`.
    fn is_diffusive(&self) -> bool;
}

/// `G = B (x_j - x_i)` for a constant matrix `B`.
#[derive(Clone, Debug)]
pub struct LinearCoupling {
    pub b: DMatrix<f64>,
}

impl Coupling for LinearCoupling {
    fn dim(&self) -> usize {
        self.b.nrows()
    }

    fn eval(&self, xi: &[f64], xj: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for q in 0..n {
            out[q] = (0..n).map(|c| self.b[(q, c)] * (xj[c] - xi[c])).sum();
        }
    }

    fn linear_matrix(&self) -> Option<DMatrix<f64>> {
        Some(self.b.clone())
    }

    fn jacobians(&self, _xi: &[f64], _xj: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        (-self.b.clone(), self.b.clone())
    }

    fn hessian_blocks(&self, _xi: &[f64], _xj: &[f64]) -> [Vec<DMatrix<f64>>; 4] {
        let n = self.dim();
        let z = vec![DMatrix::zeros(n, n); n];
        [z.clone(), z.clone(), z.clone(), z]
    }

    fn is_diffusive(&self) -> bool {
        true
    }
}

/// Where `θ = 0` sits on the orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchor {
    /// Hyperplane through the guess, normal to the flow.
    Flow,
    /// Upward crossing of `x[index] = value`.
    Crossing { index: usize, value: f64 },
    /// Maximum of `x[index]` along the orbit.
    Peak { index: usize },
}

/// Node dynamics together with coupling and orbit-search hints.
#[derive(Clone)]
pub struct OscillatorModel {
    pub field: Arc<dyn VectorField>,
    pub coupling: Arc<dyn Coupling>,
    /// Point near the limit cycle.
    pub guess: Vec<f64>,
    pub period_guess: f64,
    pub anchor: Anchor,
    pub descriptor: ModelDescriptor,
}

impl std::fmt::Debug for OscillatorModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OscillatorModel").field("descriptor", &self.descriptor).finish()
    }
}

/// JSON form `{"model": "mfcgl" | "morris_lecar", "params": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelDescriptor {
    pub model: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ModelDescriptor {
    pub fn build(&self) -> Result<OscillatorModel> {
        match self.model.as_str() {
            "mfcgl" => {
                let mut p = self.params.clone();
                let c1 = p.remove("c1").unwrap_or(0.0);
                let c2 = p.remove("c2").unwrap_or(0.5);
                if let Some(k) = p.keys().next() {
                    return Err(Error::Config(format!("unknown mfcgl parameter '{k}'")));
                }
                make_mfcgl_node(c1, c2)
            }
            "morris_lecar" => make_morris_lecar_node(MorrisLecarParams::from_map(&self.params)?),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }

    pub fn from_json(s: &str) -> Result<OscillatorModel> {
        let d: ModelDescriptor = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        d.build()
    }
}

impl OscillatorModel {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn in_bounds(&self, x: &[f64]) -> bool {
        self.field.bounds().iter().zip(x).all(|((lo, hi), v)| *lo <= *v && *v <= *hi)
    }
}

/// Derivative tensor `F_q^{(k)}` with the recursive vec-stacked layout:
/// order 1 is the `1 x n` gradient row, order `k` is `n^{k-1} x n`.
#[derive(Clone, Debug)]
pub struct DerivTensor {
    pub order: usize,
    pub n: usize,
    pub comps: Vec<DMatrix<f64>>,
    pub analytic: bool,
}

impl DerivTensor {
    /// `uᵀ F_q^{(2)} v`.
    pub fn bilinear(&self, q: usize, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(self.order, 2);
        let h = &self.comps[q];
        let mut s = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                s += u[a] * h[(a, b)] * v[b];
            }
        }
        s
    }

    /// `F_q^{(2)} v`.
    pub fn apply2(&self, q: usize, v: &[f64]) -> Vec<f64> {
        let h = &self.comps[q];
        (0..self.n).map(|a| (0..self.n).map(|b| h[(a, b)] * v[b]).sum()).collect()
    }

    /// `Σ_{b,c} T_q[a, b, c] u_b v_c` for the order-3 tensor.
    pub fn apply3(&self, q: usize, u: &[f64], v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.order, 3);
        let t = &self.comps[q];
        let n = self.n;
        (0..n)
            .map(|a| {
                let mut s = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        s += t[(a + n * b, c)] * u[b] * v[c];
                    }
                }
                s
            })
            .collect()
    }
}

/// Central-difference step for coordinate value `x`.
pub fn fd_step(x: f64) -> f64 {
    1e-4f64.max(1e-4 * x.abs())
}

pub fn fd_jacobian<G>(rows: usize, n: usize, x: &[f64], mut f: G) -> DMatrix<f64>
where
    G: FnMut(&[f64], &mut [f64]),
{
    let mut jac = DMatrix::zeros(rows, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; rows];
    let mut fm = vec![0.0; rows];
    for c in 0..n {
        let h = fd_step(x[c]);
        xp[c] = x[c] + h;
        f(&xp, &mut fp);
        xp[c] = x[c] - h;
        f(&xp, &mut fm);
        xp[c] = x[c];
        for r in 0..rows {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Derivative tensor of order `k` (1..=3), analytic where the model
/// provides it, otherwise by central differences of the order below.
pub fn derivative(f: &dyn VectorField, x: &[f64], k: usize) -> Result<DerivTensor> {
    let n = f.dim();
    let analytic = f.analytic_orders();
    match k {
        1 => {
            let j = f.jacobian(x);
            let comps = (0..n).map(|q| j.rows(q, 1).into_owned()).collect();
            Ok(DerivTensor { order: 1, n, comps, analytic: analytic[0] })
        }
        2 => {
            if let Some(h) = f.hessians(x) {
                return Ok(DerivTensor { order: 2, n, comps: h, analytic: true });
            }
            let comps = (0..n)
                .map(|q| {
                    fd_jacobian(n, n, x, |y, o| {
                        let j = f.jacobian(y);
                        for c in 0..n {
                            o[c] = j[(q, c)];
                        }
                    })
                })
                .collect();
            Ok(DerivTensor { order: 2, n, comps, analytic: false })
        }
        3 => {
            if let Some(t) = f.third(x) {
                return Ok(DerivTensor { order: 3, n, comps: t, analytic: true });
            }
            let comps = (0..n)
                .map(|q| {
                    fd_jacobian(n * n, n, x, |y, o| {
                        let h = derivative(f, y, 2).expect("second order").comps[q].clone();
                        o.copy_from_slice(h.as_slice());
                    })
                })
                .collect();
            Ok(DerivTensor { order: 3, n, comps, analytic: false })
        }
        other => Err(Error::Order(other)),
    }
}

/// Finite-difference Hessian of the vector field, ignoring analytic forms.
pub fn fd_hessians(f: &dyn VectorField, x: &[f64]) -> Vec<DMatrix<f64>> {
    let n = f.dim();
    (0..n)
        .map(|q| {
            fd_jacobian(n, n, x, |y, o| {
                let j = f.jacobian(y);
                for c in 0..n {
                    o[c] = j[(q, c)];
                }
            })
        })
        .collect()
}

/// Finite-difference third derivatives from the model's Hessians.
pub fn fd_third(f: &dyn VectorField, x: &[f64]) -> Vec<DMatrix<f64>> {
    let n = f.dim();
    (0..n)
        .map(|q| {
            fd_jacobian(n * n, n, x, |y, o| {
                let h = derivative(f, y, 2).expect("second order").comps[q].clone();
                o.copy_from_slice(h.as_slice());
            })
        })
        .collect()
}
