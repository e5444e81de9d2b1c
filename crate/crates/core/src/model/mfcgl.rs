use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Anchor, Coupling, LinearCoupling, ModelDescriptor, OscillatorModel, VectorField};
use crate::error::{Error, Result};

/// Mean-field complex Ginzburg–Landau node, `z' = z - (1 + i c2)|z|² z`
/// written in real coordinates.
#[derive(Clone, Debug)]
pub struct Mfcgl {
    pub c2: f64,
}

impl VectorField for Mfcgl {
    fn name(&self) -> &str {
        "mfcgl"
    }

    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, s: &[f64], out: &mut [f64]) {
        let (x, y, c2) = (s[0], s[1], self.c2);
        let r2 = x * x + y * y;
        out[0] = x - (x - c2 * y) * r2;
        out[1] = y - (y + c2 * x) * r2;
    }

    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        let (x, y, c2) = (s[0], s[1], self.c2);
        DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0 - 3.0 * x * x - y * y + 2.0 * c2 * x * y,
                c2 * x * x + 3.0 * c2 * y * y - 2.0 * x * y,
                -3.0 * c2 * x * x - c2 * y * y - 2.0 * x * y,
                1.0 - x * x - 3.0 * y * y - 2.0 * c2 * x * y,
            ],
        )
    }

    fn hessians(&self, s: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let (x, y, c2) = (s[0], s[1], self.c2);
        let h1 = DMatrix::from_row_slice(2, 2, &[-6.0 * x + 2.0 * c2 * y, -2.0 * y + 2.0 * c2 * x, -2.0 * y + 2.0 * c2 * x, -2.0 * x + 6.0 * c2 * y]);
        let h2 = DMatrix::from_row_slice(2, 2, &[-2.0 * y - 6.0 * c2 * x, -2.0 * x - 2.0 * c2 * y, -2.0 * x - 2.0 * c2 * y, -6.0 * y - 2.0 * c2 * x]);
        Some(vec![h1, h2])
    }

    fn third(&self, _s: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let c2 = self.c2;
        // rows (a + 2b), column c: ∂³F/∂x_a∂x_b∂x_c
        let t = |xxx: f64, xxy: f64, xyy: f64, yyy: f64| DMatrix::from_row_slice(4, 2, &[xxx, xxy, xxy, xyy, xxy, xyy, xyy, yyy]);
        Some(vec![t(-6.0, 2.0 * c2, -2.0, 6.0 * c2), t(-6.0 * c2, -2.0, -2.0 * c2, -6.0)])
    }

    fn analytic_orders(&self) -> [bool; 3] {
        [true, true, true]
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("c2".to_string(), self.c2)])
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-3.0, 3.0), (-3.0, 3.0)]
    }
}

/// MF-CGLE node with coupling `G = [[1, -c1], [c1, 1]] (x_j - x_i)`.
pub fn make_mfcgl_node(c1: f64, c2: f64) -> Result<OscillatorModel> {
    if !c1.is_finite() || !c2.is_finite() {
        return Err(Error::Config("c1 and c2 must be finite".into()));
    }
    if c2 <= 0.0 {
        return Err(Error::Config(format!("c2 must be positive for a rotating orbit, got {c2}")));
    }
    let coupling: Arc<dyn Coupling> = Arc::new(LinearCoupling { b: DMatrix::from_row_slice(2, 2, &[1.0, -c1, c1, 1.0]) });
    Ok(OscillatorModel {
        field: Arc::new(Mfcgl { c2 }),
        coupling,
        guess: vec![1.0, 0.0],
        period_guess: 2.0 * std::f64::consts::PI / c2,
        anchor: Anchor::Flow,
        descriptor: ModelDescriptor {
            model: "mfcgl".into(),
            params: BTreeMap::from([("c1".to_string(), c1), ("c2".to_string(), c2)]),
        },
    })
}
