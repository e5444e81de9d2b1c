//! Build the two shipped node models and evaluate their vector fields.

use phaseiso::model::{make_mfcgl_node, make_morris_lecar_node, ModelDescriptor, MorrisLecarParams};

fn main() -> phaseiso::error::Result<()> {
    let cgle = make_mfcgl_node(-2.0, 1.1)?;
    let ml = make_morris_lecar_node(MorrisLecarParams::default())?;
    for m in [&cgle, &ml] {
        let mut f = vec![0.0; m.dim()];
        m.field.eval(&m.guess, &mut f);
        println!("{:<13} dim {}  F(guess) = {:?}", m.field.name(), m.dim(), f);
        println!("  Jacobian at guess: {}", m.field.jacobian(&m.guess));
    }
    // models can also come from JSON descriptors
    let d: ModelDescriptor = serde_json::from_str(r#"{"model": "mfcgl", "params": {"c1": 1.0, "c2": 0.5}}"#)?;
    let m = d.build()?;
    println!("descriptor round trip: {}", serde_json::to_string(&m.descriptor)?);
    Ok(())
}
