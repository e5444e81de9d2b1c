//! Locate the Morris-Lecar limit cycle and report its Floquet data.

use phaseiso::model::{make_morris_lecar_node, MorrisLecarParams};
use phaseiso::orbit::{find_periodic_orbit, OrbitOptions};

fn main() -> phaseiso::error::Result<()> {
    let model = make_morris_lecar_node(MorrisLecarParams::default())?;
    let orbit = find_periodic_orbit(&model, &model.guess, model.period_guess, &OrbitOptions { m: 512, ..Default::default() })?;
    println!("T     = {:.6}", orbit.period);
    println!("omega = {:.6}", orbit.omega);
    println!("kappa = {:.6}", orbit.kappa);
    println!("x(0)  = {:?}", orbit.at(0.0));
    println!("{}", serde_json::to_string_pretty(&orbit.metadata_json())?);
    Ok(())
}
