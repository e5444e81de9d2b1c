mod common;

use approx::assert_abs_diff_eq;
use phaseiso::locked::{eps_range, sweep, track_two_cluster, BifurcationKind, NetworkSpec, Selector, SplaySize, TrackOptions};

#[test]
fn eps_ranges_are_validated() {
    assert!(eps_range(0.0, 1.0, 0.0).is_err());
    assert!(eps_range(0.0, 1.0, -0.1).is_err());
    assert!(eps_range(0.0, f64::NAN, 0.1).is_err());
    let v = eps_range(0.0, 1.0, 0.25).unwrap();
    assert_eq!(v.len(), 5);
    assert_abs_diff_eq!(v[4], 1.0);
    assert_eq!(eps_range(1.0, 0.0, -0.5).unwrap().len(), 3);
}

#[test]
fn morris_lecar_n2_synchrony_bifurcations() {
    let h = &common::ml().red.interaction;
    let res = sweep(&Selector::Synchrony(NetworkSpec::global(2, 0.0).unwrap()), h, &eps_range(-0.5, 0.2, 0.002).unwrap());
    let tz = res.find(BifurcationKind::TransverseZero);
    assert_eq!(tz.len(), 1);
    assert_abs_diff_eq!(tz[0].eps, 0.0934, epsilon = 2e-3);
    let hopf = res.find(BifurcationKind::HopfPair);
    assert_eq!(hopf.len(), 1);
    assert_abs_diff_eq!(hopf[0].eps, -0.407, epsilon = 5e-3);
    assert!(hopf[0].frequency.abs() > 0.0);
}

#[test]
fn morris_lecar_antisynchrony_limit_point() {
    let h = &common::ml().red.interaction;
    let res = sweep(&Selector::Splay(SplaySize::Finite(2)), h, &eps_range(0.0, 0.2, 0.002).unwrap());
    let lp = res.find(BifurcationKind::LimitPoint);
    assert_eq!(lp.len(), 1);
    assert_abs_diff_eq!(lp[0].eps, 0.0961, epsilon = 2e-3);
    // the denominator of the isostable formula vanishes there
    let sel = Selector::Splay(SplaySize::Finite(2));
    assert!(sel.denominator(h, lp[0].eps_lo) * sel.denominator(h, lp[0].eps_hi) <= 0.0);
}

#[test]
fn sweep_output_is_in_eps_order() {
    let h = &common::ml().red.interaction.trimmed(1e-10);
    let grid = eps_range(0.2, -0.2, -0.01).unwrap();
    let res = sweep(&Selector::Splay(SplaySize::Finite(40)), h, &grid);
    assert_eq!(res.rows.len(), grid.len());
    for (r, e) in res.rows.iter().zip(&grid) {
        assert_eq!(r.eps, *e);
    }
    assert_eq!(res.to_csv(), sweep(&Selector::Splay(SplaySize::Finite(40)), h, &grid).to_csv());
}

#[test]
fn branch_leaving_synchrony_has_hopf_fold_and_limit_point() {
    let h = &common::ml().red.interaction;
    let (pts, bifs) = track_two_cluster(1, 1, h, 0.093, 0.0, 0.1, &TrackOptions::default());
    assert!(pts.len() > 100);
    let find = |k| bifs.iter().find(|b| b.kind == k).map(|b| b.eps);
    let hopf = find(BifurcationKind::HopfPair).expect("Hopf on the branch");
    assert_abs_diff_eq!(hopf, 0.0484, epsilon = 2e-3);
    let fold = find(BifurcationKind::Fold).expect("fold in ε");
    let lp = find(BifurcationKind::LimitPoint).expect("isostable asymptote");
    assert!(fold < lp && lp < hopf);
    // Ψ of the two nodes have opposite sign on the stable part of the branch
    let stable = pts.iter().find(|p| p.eps > hopf + 0.005 && p.eps < 0.09).unwrap();
    assert!(stable.psi[0] * stable.psi[1] < 0.0);
}
