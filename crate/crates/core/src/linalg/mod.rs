pub mod eigen;
pub mod poly;

pub use eigen::{eig2, eigenvalues};
pub use poly::Poly;

use nalgebra::DMatrix;

/// Ratio of smallest to largest singular value.
pub fn inverse_condition(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().fold(0.0f64, |m, v| m.max(*v));
    let min = sv.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}
