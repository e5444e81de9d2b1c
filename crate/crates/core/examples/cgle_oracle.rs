//! Closed-form MF-CGLE stability boundaries across c1.

use phaseiso::cgle::{exact_boundaries, sigma_at_boundary};

fn main() -> phaseiso::error::Result<()> {
    let c2 = 1.1;
    println!("{:>6} {:>10} {:>10} {:>10}", "c1", "eps_s", "eps_s2", "eps_02");
    for k in 0..=12 {
        let c1 = -3.0 + 0.5 * k as f64;
        let b = exact_boundaries(c1, c2)?;
        let f = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.5}"));
        println!("{c1:6.2} {:10.5} {:>10} {:>10}", b.eps_s, f(b.eps_s2), f(b.eps_02));
    }
    let b = exact_boundaries(-2.0, c2)?;
    for &e in &b.eps_0_pi {
        println!("splay boundary eps = {e:.6}, sigma = {:.6}", sigma_at_boundary(-2.0, c2, e)?);
    }
    Ok(())
}
