//! Two Morris-Lecar nodes integrated in the full state space at a coupling
//! where no locked state is stable.

use phaseiso::interaction::{reduce, ReductionOptions};
use phaseiso::locked::NetworkSpec;
use phaseiso::model::{make_morris_lecar_node, MorrisLecarParams};
use phaseiso::simulate::{detect_clusters, simulate_full, SimOptions};

fn main() -> phaseiso::error::Result<()> {
    let model = make_morris_lecar_node(MorrisLecarParams::default())?;
    let red = reduce(&model, &ReductionOptions::with_grid(512))?;
    let x0 = vec![red.orbit.at(0.0), red.orbit.at(2.0)];
    let traj = simulate_full(&model, &NetworkSpec::global(2, 0.25)?, &x0, 300.0, 0.5, &SimOptions::default())?;
    for (a, b) in [(100.0, 150.0), (150.0, 200.0), (200.0, 250.0), (250.0, 300.0)] {
        let s = detect_clusters(&traj, (a, b), 0.05, 0.02);
        println!("window [{a}, {b}]: {:?}, gap {:.4}", s.class, s.gaps.last().copied().unwrap_or(0.0));
    }
    Ok(())
}
