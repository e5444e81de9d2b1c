//! Pipeline boundaries of the phase-isostable network against closed forms.

use phaseiso::compare::{compare_pi, linspace, BoundaryState};
use phaseiso::interaction::{reduce, ReductionOptions};
use phaseiso::locked::SplaySize;
use phaseiso::model::make_mfcgl_node;

fn main() -> phaseiso::error::Result<()> {
    let c2 = 1.1;
    let grid = linspace(-1.5, 0.999, 500);
    let states = [BoundaryState::Synchrony, BoundaryState::Antisynchrony, BoundaryState::Splay(SplaySize::Finite(5)), BoundaryState::Splay(SplaySize::Infinite)];
    for c1 in [-2.5, -1.0, 0.5, 2.0] {
        let red = reduce(&make_mfcgl_node(c1, c2)?, &ReductionOptions::with_grid(32))?;
        let h = red.interaction.trimmed(1e-12);
        for st in states {
            let row = compare_pi(st, c1, c2, &h, &grid)?;
            let roots: Vec<String> = row.matches.iter().map(|m| format!("{:.6}", m.oracle)).collect();
            println!("c1 {c1:+.2} {:<14} roots [{}] max dev {:.2e}", row.state, roots.join(", "), row.max_deviation());
        }
    }
    Ok(())
}
