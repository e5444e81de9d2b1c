//! Sweep ε for two coupled Morris-Lecar nodes and continue the branch
//! that leaves synchrony.

use phaseiso::interaction::{reduce, ReductionOptions};
use phaseiso::locked::{eps_range, sweep, track_two_cluster, NetworkSpec, Selector, SplaySize, TrackOptions};
use phaseiso::model::{make_morris_lecar_node, MorrisLecarParams};

fn main() -> phaseiso::error::Result<()> {
    let red = reduce(&make_morris_lecar_node(MorrisLecarParams::default())?, &ReductionOptions::with_grid(512))?;
    let h = &red.interaction;
    let grid = eps_range(-0.5, 0.2, 0.002)?;
    for sel in [Selector::Synchrony(NetworkSpec::global(2, 0.0)?), Selector::Splay(SplaySize::Finite(2))] {
        for b in sweep(&sel, h, &grid).bifurcations {
            println!("{:<14} {:<16} eps = {:+.5}", b.class, b.kind.label(), b.eps);
        }
    }
    let (branch, bifs) = track_two_cluster(1, 1, h, 0.093, 0.0, 0.1, &TrackOptions::default());
    println!("branch: {} points", branch.len());
    for b in bifs {
        println!("{:<14} {:<16} eps = {:+.5}", b.class, b.kind.label(), b.eps);
    }
    Ok(())
}
