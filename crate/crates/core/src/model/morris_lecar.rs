use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Anchor, Coupling, LinearCoupling, ModelDescriptor, OscillatorModel, VectorField};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorrisLecarParams {
    pub phi: f64,
    pub g_ca: f64,
    pub g_k: f64,
    pub g_l: f64,
    pub e_ca: f64,
    pub e_k: f64,
    pub e_l: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub cm: f64,
    pub ib: f64,
    /// Upward crossing of `v = v_anchor` defines `θ = 0`; without it the
    /// voltage peak does.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_anchor: Option<f64>,
}

impl Default for MorrisLecarParams {
    fn default() -> Self {
        Self {
            phi: 1.15,
            g_ca: 1.0,
            g_k: 2.0,
            g_l: 0.5,
            e_ca: 1.0,
            e_k: -0.7,
            e_l: -0.5,
            v1: -0.01,
            v2: 0.15,
            v3: 0.1,
            v4: 0.145,
            cm: 1.0,
            ib: 0.075,
            v_anchor: None,
        }
    }
}

impl MorrisLecarParams {
    pub fn from_map(m: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = Self::default();
        for (k, &v) in m {
            let slot = match k.as_str() {
                "phi" => &mut p.phi,
                "gCa" | "g_ca" => &mut p.g_ca,
                "gK" | "g_k" => &mut p.g_k,
                "gL" | "g_l" => &mut p.g_l,
                "ECa" | "e_ca" => &mut p.e_ca,
                "EK" | "e_k" => &mut p.e_k,
                "EL" | "e_l" => &mut p.e_l,
                "V1" | "v1" => &mut p.v1,
                "V2" | "v2" => &mut p.v2,
                "V3" | "v3" => &mut p.v3,
                "V4" | "v4" => &mut p.v4,
                "Cm" | "cm" => &mut p.cm,
                "Ib" | "ib" => &mut p.ib,
                "v_anchor" => {
                    p.v_anchor = Some(v);
                    continue;
                }
                other => return Err(Error::Config(format!("unknown morris_lecar parameter '{other}'"))),
            };
            *slot = v;
        }
        if p.v2 == 0.0 || p.v4 == 0.0 || p.cm <= 0.0 {
            return Err(Error::Config("V2, V4 must be nonzero and Cm positive".into()));
        }
        Ok(p)
    }

    fn to_map(&self) -> BTreeMap<String, f64> {
        let v = serde_json::to_value(self).expect("serialisable");
        serde_json::from_value(v).expect("flat map")
    }
}

#[derive(Clone, Debug)]
pub struct MorrisLecar {
    pub p: MorrisLecarParams,
}

struct Gates {
    m: f64,
    dm: f64,
    ddm: f64,
    dddm: f64,
    w: f64,
    dw: f64,
    ddw: f64,
    dddw: f64,
    lam: f64,
    dlam: f64,
    ddlam: f64,
    dddlam: f64,
}

impl MorrisLecar {
    fn gates(&self, v: f64) -> Gates {
        let p = &self.p;
        let u = (v - p.v1) / p.v2;
        let tu = u.tanh();
        let su = 1.0 - tu * tu;
        let s = (v - p.v3) / p.v4;
        let ts = s.tanh();
        let ss = 1.0 - ts * ts;
        Gates {
            m: 0.5 * (1.0 + tu),
            dm: 0.5 * su / p.v2,
            ddm: -su * tu / (p.v2 * p.v2),
            dddm: su * (2.0 * tu * tu - su) / p.v2.powi(3),
            w: 0.5 * (1.0 + ts),
            dw: 0.5 * ss / p.v4,
            ddw: -ss * ts / (p.v4 * p.v4),
            dddw: ss * (2.0 * ts * ts - ss) / p.v4.powi(3),
            lam: (0.5 * s).cosh(),
            dlam: (0.5 * s).sinh() / (2.0 * p.v4),
            ddlam: (0.5 * s).cosh() / (4.0 * p.v4 * p.v4),
            dddlam: (0.5 * s).sinh() / (8.0 * p.v4.powi(3)),
        }
    }
}

impl VectorField for MorrisLecar {
    fn name(&self) -> &str {
        "morris_lecar"
    }

    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let p = &self.p;
        let (v, w) = (x[0], x[1]);
        let g = self.gates(v);
        out[0] = (p.ib - p.g_l * (v - p.e_l) - p.g_k * w * (v - p.e_k) - p.g_ca * g.m * (v - p.e_ca)) / p.cm;
        out[1] = p.phi * (g.w - w) * g.lam;
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let p = &self.p;
        let (v, w) = (x[0], x[1]);
        let g = self.gates(v);
        DMatrix::from_row_slice(
            2,
            2,
            &[
                (-p.g_l - p.g_k * w - p.g_ca * (g.dm * (v - p.e_ca) + g.m)) / p.cm,
                -p.g_k * (v - p.e_k) / p.cm,
                p.phi * (g.dw * g.lam + (g.w - w) * g.dlam),
                -p.phi * g.lam,
            ],
        )
    }

    fn hessians(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let p = &self.p;
        let (v, w) = (x[0], x[1]);
        let g = self.gates(v);
        let f1vv = -p.g_ca * (g.ddm * (v - p.e_ca) + 2.0 * g.dm) / p.cm;
        let f1vw = -p.g_k / p.cm;
        let f2vv = p.phi * (g.ddw * g.lam + 2.0 * g.dw * g.dlam + (g.w - w) * g.ddlam);
        let f2vw = -p.phi * g.dlam;
        Some(vec![
            DMatrix::from_row_slice(2, 2, &[f1vv, f1vw, f1vw, 0.0]),
            DMatrix::from_row_slice(2, 2, &[f2vv, f2vw, f2vw, 0.0]),
        ])
    }

    fn third(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let p = &self.p;
        let (v, w) = (x[0], x[1]);
        let g = self.gates(v);
        let f1vvv = -p.g_ca * (g.dddm * (v - p.e_ca) + 3.0 * g.ddm) / p.cm;
        let f2vvv = p.phi * (g.dddw * g.lam + 3.0 * g.ddw * g.dlam + 3.0 * g.dw * g.ddlam + (g.w - w) * g.dddlam);
        let f2vvw = -p.phi * g.ddlam;
        // rows (a + 2b), column c
        Some(vec![
            DMatrix::from_row_slice(4, 2, &[f1vvv, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(4, 2, &[f2vvv, f2vvw, f2vvw, 0.0, f2vvw, 0.0, 0.0, 0.0]),
        ])
    }

    fn analytic_orders(&self) -> [bool; 3] {
        [true, true, true]
    }

    fn params(&self) -> BTreeMap<String, f64> {
        self.p.to_map()
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0), (-0.2, 1.0)]
    }
}

/// Morris–Lecar node with voltage-only diffusive coupling `G = (v_j - v_i, 0)`.
pub fn make_morris_lecar_node(params: MorrisLecarParams) -> Result<OscillatorModel> {
    let descriptor = ModelDescriptor { model: "morris_lecar".into(), params: params.to_map() };
    let anchor = match params.v_anchor {
        Some(value) => Anchor::Crossing { index: 0, value },
        None => Anchor::Peak { index: 0 },
    };
    let coupling: Arc<dyn Coupling> = Arc::new(LinearCoupling { b: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]) });
    Ok(OscillatorModel {
        field: Arc::new(MorrisLecar { p: params }),
        coupling,
        guess: vec![-0.1, 0.07],
        period_guess: 8.0,
        anchor,
        descriptor,
    })
}
