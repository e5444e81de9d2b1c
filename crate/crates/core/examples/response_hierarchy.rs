//! Response functions of the MF-CGLE node against their closed forms.

use std::f64::consts::PI;

use phaseiso::cgle::closed_responses;
use phaseiso::interaction::{reduce, ReductionOptions};
use phaseiso::model::make_mfcgl_node;

fn main() -> phaseiso::error::Result<()> {
    let (c1, c2) = (-2.0, 1.1);
    let red = reduce(&make_mfcgl_node(c1, c2)?, &ReductionOptions::with_grid(64))?;
    let r = &red.response;
    println!("omega {:.6}, kappa {:.6}", r.omega, r.kappa);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let th = 2.0 * PI * k as f64 / 200.0;
        let exact = closed_responses(c2, th);
        let pairs: [(Vec<f64>, [f64; 2]); 8] = [
            (r.g1.at(th), exact.g1),
            (r.g2.at(th), exact.g2),
            (r.z0.at(th), exact.z[0]),
            (r.z1.at(th), exact.z[1]),
            (r.z2.at(th), exact.z[2]),
            (r.i0.at(th), exact.i[0]),
            (r.i1.at(th), exact.i[1]),
            (r.i2.at(th), exact.i[2]),
        ];
        for (p, e) in pairs {
            worst = worst.max((p[0] - e[0]).abs()).max((p[1] - e[1]).abs());
        }
    }
    println!("sup deviation from closed forms: {worst:.3e}");
    for (name, res) in &r.residuals {
        println!("  residual {name:<3} {res:.3e}");
    }
    Ok(())
}
