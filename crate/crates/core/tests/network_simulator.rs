mod common;

use std::f64::consts::PI;

use phaseiso::error::Error;
use phaseiso::locked::NetworkSpec;
use phaseiso::simulate::{
    detect_clusters, embed_phase_isostable, order_parameter, phase_isostable_of, random_box, simulate_full, simulate_phase_isostable, simulate_unaveraged,
    ClusterClass, SimOptions, Trajectory,
};

fn tight() -> SimOptions {
    SimOptions { rtol: 1e-11, atol: 1e-11, ..SimOptions::default() }
}

fn spike_times(traj: &Trajectory, i: usize, thr: f64) -> Vec<f64> {
    (0..traj.last())
        .filter(|&k| traj.node(k, i)[0] < thr && traj.node(k + 1, i)[0] >= thr)
        .map(|k| traj.times[k])
        .collect()
}

#[test]
fn uncoupled_nodes_rotate_and_relax() {
    let h = &common::ml().red.interaction;
    let net = NetworkSpec::global(3, 0.0).unwrap();
    let (th0, ps0) = ([0.1, 2.0, 4.0], [0.5, -1.0, 2.0]);
    let traj = simulate_phase_isostable(h, &net, &th0, &ps0, 5.0, 0.5, &tight()).unwrap();
    for (k, t) in traj.times.iter().enumerate() {
        for i in 0..3 {
            let th = th0[i] + h.omega * t;
            let ps = ps0[i] * (h.kappa * t).exp();
            assert!((traj.theta_unwrapped(k)[i] - th).abs() < 1e-9);
            assert!((traj.psi(k)[i] - ps).abs() < 1e-9 * ps0[i].abs());
        }
    }
}

fn averaging_error(red: &phaseiso::interaction::Reduction, eps: f64) -> f64 {
    let net = NetworkSpec::global(3, eps).unwrap();
    let (th0, ps0) = ([0.0, 1.0, 2.5], [0.0, 0.1, -0.1]);
    let t_end = 1.0 / eps;
    let avg = simulate_phase_isostable(&red.interaction, &net, &th0, &ps0, t_end, 0.5, &SimOptions::default()).unwrap();
    let raw = simulate_unaveraged(&red.kernels, &net, &th0, &ps0, t_end, 0.5, &SimOptions::default()).unwrap();
    let mut worst = 0.0f64;
    for k in 0..avg.times.len() {
        for i in 0..3 {
            let d = |tr: &Trajectory| tr.theta_unwrapped(k)[i] - tr.theta_unwrapped(k)[0];
            worst = worst.max((d(&avg) - d(&raw)).abs()).max((avg.psi(k)[i] - raw.psi(k)[i]).abs());
        }
    }
    worst
}

#[test]
fn averaged_and_unaveraged_models_agree_at_weak_coupling() {
    let red = &common::ml().red;
    let e1 = averaging_error(red, 0.01);
    let e2 = averaging_error(red, 0.005);
    // O(ε) over times of order 1/ε; the ML kernels are large near the spike, so the constant is too
    assert!(e1 < 60.0 * 0.01, "averaging error {e1}");
    assert!(e2 / e1 > 0.35 && e2 / e1 < 0.65, "{e1} -> {e2}");
}

#[test]
fn rotationally_symmetric_kernels_need_no_averaging() {
    let (_, red) = common::cgle(-2.0, 1.1, 64);
    assert!(averaging_error(&red, 0.05) < 1e-9);
}

#[test]
fn seeded_initial_conditions_are_reproducible() {
    let a = random_box(50, (0.0, 1.0), (-1.0, 1.0), 17);
    let b = random_box(50, (0.0, 1.0), (-1.0, 1.0), 17);
    let c = random_box(50, (0.0, 1.0), (-1.0, 1.0), 18);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.0.iter().all(|t| (0.0..1.0).contains(t)) && a.1.iter().all(|p| (-1.0..1.0).contains(p)));
    let h = common::ml().red.interaction.trimmed(1e-10);
    let net = NetworkSpec::global(50, 0.065).unwrap();
    let run = |ic: &(Vec<f64>, Vec<f64>)| simulate_phase_isostable(&h, &net, &ic.0, &ic.1, 20.0, 1.0, &SimOptions::default()).unwrap().to_csv();
    assert_eq!(run(&a), run(&b));
}

#[test]
fn phase_isostable_map_round_trips() {
    let ml = common::ml();
    let (m, o, r) = (&ml.model, &ml.red.orbit, &ml.red.response);
    for (th, ps) in [(0.0, 0.0), (1.0, 0.05), (3.5, -1.5), (5.0, -2.9), (0.28373, -2.9794)] {
        let x = embed_phase_isostable(m, o, r, th, ps).unwrap();
        let (th2, ps2) = phase_isostable_of(m, o, r, &x).unwrap();
        let dth = ((th2 - th + PI).rem_euclid(2.0 * PI) - PI).abs();
        assert!(dth < 1e-5 && (ps2 - ps).abs() < 1e-5 * ps.abs().max(1.0), "({th}, {ps}) -> ({th2}, {ps2})");
    }
}

#[test]
fn reference_point_has_known_coordinates() {
    let ml = common::ml();
    let (th, ps) = phase_isostable_of(&ml.model, &ml.red.orbit, &ml.red.response, &[-0.1, 0.07]).unwrap();
    assert!((th - 0.28373).abs() < 1e-3, "θ {th}");
    // inside the cycle, so the isostable coordinate is negative
    assert!((ps + 2.9796).abs() < 1e-3, "ψ {ps}");
    let x = embed_phase_isostable(&ml.model, &ml.red.orbit, &ml.red.response, 0.283731, -2.97939).unwrap();
    assert!((x[0] + 0.1).abs() < 1e-3 && (x[1] - 0.07).abs() < 1e-3, "{x:?}");
}

#[test]
fn points_outside_the_basin_are_rejected() {
    let ml = common::ml();
    assert!(embed_phase_isostable(&ml.model, &ml.red.orbit, &ml.red.response, 0.0, 0.5).is_err());
}

#[test]
fn reduced_network_splits_into_two_clusters() {
    let h = common::ml().red.interaction.trimmed(1e-10);
    let net = NetworkSpec::global(200, 0.065).unwrap();
    let (th0, ps0) = random_box(200, (0.283725, 0.283735), (-2.9798, -2.9794), 17);
    let traj = simulate_phase_isostable(&h, &net, &th0, &ps0, 400.0, 1.0, &SimOptions::default()).unwrap();
    let (r0, _) = order_parameter(&traj, 0).unwrap();
    assert!(r0 > 1.0 - 1e-9);
    let s = detect_clusters(&traj, (320.0, 400.0), 0.05, 0.02);
    assert_eq!(s.class, ClusterClass::Clusters(2));
    assert_eq!(s.sizes(), vec![172, 28]);
    let gap = s.gaps[1].min(2.0 * PI - s.gaps[1]);
    assert!((gap - 2.1385).abs() < 1e-2, "gap {gap}");
}

#[test]
fn literal_positive_isostable_box_diverges() {
    let h = common::ml().red.interaction.trimmed(1e-10);
    let net = NetworkSpec::global(200, 0.065).unwrap();
    let (th0, ps0) = random_box(200, (0.283725, 0.283735), (2.9794, 2.9798), 17);
    let opts = SimOptions { limit: 100.0, ..SimOptions::default() };
    assert!(matches!(simulate_phase_isostable(&h, &net, &th0, &ps0, 100.0, 1.0, &opts), Err(Error::Divergence(_))));
}

#[test]
fn two_full_nodes_do_not_lock_at_strong_coupling() {
    let ml = common::ml();
    let x0 = vec![ml.red.orbit.at(0.0), ml.red.orbit.at(2.0)];
    let traj = simulate_full(&ml.model, &NetworkSpec::global(2, 0.25).unwrap(), &x0, 600.0, 0.1, &SimOptions::default()).unwrap();
    let vs: Vec<f64> = ml.red.orbit.samples.iter().map(|x| x[0]).collect();
    let thr = 0.5 * (vs.iter().cloned().fold(f64::INFINITY, f64::min) + vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let a = spike_times(&traj, 0, thr);
    let b = spike_times(&traj, 1, thr);
    // a phase-locked pair fires equally often
    assert!(a.len().abs_diff(b.len()) > 5, "spikes {} vs {}", a.len(), b.len());
}

#[test]
fn full_network_of_200_settles_into_a_few_clusters() {
    let ml = common::ml();
    let (th0, ps0) = random_box(200, (0.283725, 0.283735), (-2.9798, -2.9794), 17);
    let x0: Vec<Vec<f64>> = th0.iter().zip(&ps0).map(|(&t, &p)| embed_phase_isostable(&ml.model, &ml.red.orbit, &ml.red.response, t, p).unwrap()).collect();
    let traj = simulate_full(&ml.model, &NetworkSpec::global(200, 0.065).unwrap(), &x0, 2000.0, 0.5, &SimOptions::default()).unwrap();
    let s = detect_clusters(&traj, (1800.0, 2000.0), 0.05, 0.02);
    assert!(matches!(s.class, ClusterClass::Clusters(2) | ClusterClass::Clusters(3)), "{:?} {:?}", s.class, s.sizes());
}
