//! Reduced 200-node Morris-Lecar network started near synchrony, and the
//! clusters it settles into.

use phaseiso::interaction::{reduce, ReductionOptions};
use phaseiso::locked::NetworkSpec;
use phaseiso::model::{make_morris_lecar_node, MorrisLecarParams};
use phaseiso::simulate::{detect_clusters, order_parameter, random_box, simulate_phase_isostable, SimOptions};

fn main() -> phaseiso::error::Result<()> {
    let red = reduce(&make_morris_lecar_node(MorrisLecarParams::default())?, &ReductionOptions::with_grid(512))?;
    let net = NetworkSpec::global(200, 0.065)?;
    let (theta0, psi0) = random_box(200, (0.283725, 0.283735), (-2.9798, -2.9794), 17);
    let traj = simulate_phase_isostable(&red.interaction.trimmed(1e-10), &net, &theta0, &psi0, 400.0, 1.0, &SimOptions::default())?;
    for t in [0.0, 50.0, 100.0, 200.0, 400.0] {
        let k = traj.index_at(t);
        let (r, _) = order_parameter(&traj, k)?;
        let psi = traj.psi(k);
        let (lo, hi) = psi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
        println!("t {t:5.0}  R {r:.4}  psi in [{lo:+.4}, {hi:+.4}]");
    }
    let s = detect_clusters(&traj, (320.0, 400.0), 0.05, 0.02);
    println!("clusters {:?}, psi {:?}, gaps {:?}", s.sizes(), s.psi, s.gaps);
    Ok(())
}
