//! Second- and third-order phase reduction of the MF-CGLE and its
//! stability boundaries.

use phaseiso::cgle;
use phaseiso::higher_order::{higher_order_kernels, hop_spectrum, HigherOrderOptions, HopState};
use phaseiso::interaction::{reduce, ReductionOptions};
use phaseiso::model::make_mfcgl_node;

fn main() -> phaseiso::error::Result<()> {
    let (c1, c2) = (-2.0, 1.1);
    let red = reduce(&make_mfcgl_node(c1, c2)?, &ReductionOptions::with_grid(64))?;
    let q = higher_order_kernels(&red.kernels, &HigherOrderOptions::default())?;
    for (state, n) in [(HopState::Synchrony, 5), (HopState::Splay, 5), (HopState::Antisynchrony, 2)] {
        let spec = hop_spectrum(&q, state, n)?;
        for order in 2..=3 {
            println!("{state:?} order {order}: {:?}", spec.boundaries(order)?);
        }
    }
    let exact = cgle::exact_boundaries(c1, c2)?;
    println!("closed forms: s2 {:?}, 02 {:?}, a2 {:?}", exact.eps_s2, exact.eps_02, exact.eps_a2);
    println!("              s3 {:?}, 03 {:?}, a3 {:?}", exact.eps_s3, exact.eps_03, exact.eps_a3);
    Ok(())
}
