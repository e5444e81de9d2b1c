//! Interaction functions H1..H6 of the Morris-Lecar node.

use std::f64::consts::PI;

use phaseiso::interaction::{reduce, ReductionOptions};
use phaseiso::model::{make_morris_lecar_node, MorrisLecarParams};

fn main() -> phaseiso::error::Result<()> {
    let red = reduce(&make_morris_lecar_node(MorrisLecarParams::default())?, &ReductionOptions::with_grid(512))?;
    let h = &red.interaction;
    println!("{:>8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}", "chi", "H1", "H2", "H3", "H4", "H5", "H6");
    for k in 0..=8 {
        let chi = 2.0 * PI * k as f64 / 8.0;
        let (v, _) = h.all(chi);
        println!("{chi:8.4} {:12.5} {:12.5} {:12.5} {:12.5} {:12.5} {:12.5}", v[0], v[1], v[2], v[3], v[4], v[5]);
    }
    println!("kernel tail {:.3e}", red.kernels.tail);
    Ok(())
}
