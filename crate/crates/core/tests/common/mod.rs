#![allow(dead_code)]

use std::sync::OnceLock;

use phaseiso::interaction::{reduce, Reduction, ReductionOptions};
use phaseiso::model::{make_mfcgl_node, make_morris_lecar_node, MorrisLecarParams, OscillatorModel};

pub struct Ml {
    pub model: OscillatorModel,
    pub red: Reduction,
}

/// Morris-Lecar node reduced on the default 512-point grid, built once per test binary.
pub fn ml() -> &'static Ml {
    static ML: OnceLock<Ml> = OnceLock::new();
    ML.get_or_init(|| {
        let model = make_morris_lecar_node(MorrisLecarParams::default()).unwrap();
        let red = reduce(&model, &ReductionOptions::with_grid(512)).unwrap();
        Ml { model, red }
    })
}

pub fn cgle(c1: f64, c2: f64, m: usize) -> (OscillatorModel, Reduction) {
    let model = make_mfcgl_node(c1, c2).unwrap();
    let red = reduce(&model, &ReductionOptions::with_grid(m)).unwrap();
    (model, red)
}

pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect()
}
