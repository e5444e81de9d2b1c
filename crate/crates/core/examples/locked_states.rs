//! Existence and stability of locked states in a 200-node Morris-Lecar network.

use phaseiso::interaction::{reduce, ReductionOptions};
use phaseiso::locked::{splay_analysis, synchrony_analysis, two_cluster_solve, NetworkSpec, SplaySize};
use phaseiso::model::{make_morris_lecar_node, MorrisLecarParams};

fn main() -> phaseiso::error::Result<()> {
    let red = reduce(&make_morris_lecar_node(MorrisLecarParams::default())?, &ReductionOptions::with_grid(512))?;
    let h = &red.interaction;
    let eps = 0.065;

    let (_, sync) = synchrony_analysis(&NetworkSpec::global(200, eps)?, h)?;
    println!("synchrony: max Re {:+.5} ({:?})", sync.max_re, sync.verdict);

    let (splay, rep) = splay_analysis(SplaySize::Finite(200), h, eps)?;
    println!("splay:     Psi {:.4}, max Re {:+.5} ({:?})", splay.psi[0], rep.max_re, rep.verdict);

    for (st, rep) in two_cluster_solve(28, 172, h, eps)?.into_iter().flatten() {
        println!("{}: Psi_A {:+.4}, Psi_B {:+.4}, max Re {:+.5} ({:?})", st.class.label(), st.psi[0], st.psi[199], rep.max_re, rep.verdict);
    }
    Ok(())
}
