use std::f64::consts::PI;

use num_complex::Complex64;

use super::{
    balanced_phases, eig2_real, jacobian, splay_phases, Decomposition, LockedState, NetworkSpec, StabilityReport, StateClass,
};
use crate::error::{Error, Result};
use crate::interaction::InteractionSet;
use crate::linalg::eigen::{eig2, eigenvalues};

const DENOM_TOL: f64 = 1e-12;

fn check_denominator(d: f64, num: f64) -> Result<()> {
    if d.abs() < DENOM_TOL * num.abs().max(1.0) {
        return Err(Error::Asymptote(num.abs() / d.abs().max(1e-300)));
    }
    Ok(())
}

/// Synchronous state and its spectrum.
pub fn synchrony_analysis(net: &NetworkSpec, h: &InteractionSet) -> Result<(LockedState, StabilityReport)> {
    let n = net.n;
    let eps = net.eps;
    let (v, dv) = h.all(0.0);
    let kappa = h.kappa;
    let phases = vec![0.0; n];
    if let Some(c) = net.constant_row() {
        let den = kappa + eps * c * (v[4] + v[5]);
        check_denominator(den, eps * c * v[3])?;
        let psi = -eps * c * v[3] / den;
        let big_omega = h.omega + eps * c * (v[0] + psi * (v[1] + v[2]));
        // J = -ε X ⊗ L + Y ⊗ I
        let x = [dv[0] + psi * (dv[1] + dv[2]), v[2], dv[3] + psi * (dv[4] + dv[5]), v[5]];
        let y = [0.0, eps * c * (v[1] + v[2]), 0.0, den];
        let lap = if net.is_global() {
            let mut l = vec![Complex64::new(0.0, 0.0)];
            l.extend(std::iter::repeat_n(Complex64::new(1.0, 0.0), n - 1));
            l
        } else {
            eigenvalues(&net.laplacian())?
        };
        let mut eigs = Vec::with_capacity(2 * n);
        for &l in &lap {
            let e = |k: usize| Complex64::new(y[k], 0.0) - l * eps * x[k];
            eigs.extend_from_slice(&eig2(e(0), e(1), e(2), e(3)));
        }
        let m_block = eig2_real(-eps * x[0], eps * v[1], -eps * x[2], kappa + eps * v[4]);
        let psi_v = vec![psi; n];
        let residual = super::locking_residual(&phases, &psi_v, big_omega, net, h);
        let state = LockedState { phases, psi: psi_v, big_omega, class: StateClass::Synchrony, residual };
        let report = StabilityReport::from_eigenvalues(
            eigs,
            Some(Decomposition::Synchrony { transverse: Complex64::new(den, 0.0), m_block, laplacian: lap }),
        )?;
        return Ok((state, report));
    }
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    if v[0].abs() > 1e-10 * scale || v[3].abs() > 1e-10 * scale {
        return Err(Error::NoLockedState(f64::NAN));
    }
    let psi = vec![0.0; n];
    let residual = super::locking_residual(&phases, &psi, h.omega, net, h);
    let state = LockedState { phases, psi, big_omega: h.omega, class: StateClass::Synchrony, residual };
    let report = jacobian(&state, net, h)?;
    Ok((state, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SplaySize {
    Finite(usize),
    Infinite,
}

/// `Ψ`, `Ω` and the `Λ_q` blocks of an `n`-node splay with global coupling.
fn finite_splay(n: usize, h: &InteractionSet, eps: f64) -> Result<(f64, f64, Vec<(i64, [Complex64; 2])>)> {
    let phi: Vec<f64> = (1..=n).map(|m| 2.0 * PI * m as f64 / n as f64).collect();
    let vals: Vec<([f64; 6], [f64; 6])> = phi.iter().map(|&p| h.all(p)).collect();
    let beta = |k: usize| vals.iter().map(|(v, _)| v[k - 1]).sum::<f64>();
    let nf = n as f64;
    let den = nf * h.kappa + eps * (beta(5) + beta(6));
    check_denominator(den, eps * beta(4))?;
    let psi = -eps * beta(4) / den;
    let big_omega = h.omega + eps / nf * (beta(1) + psi * (beta(2) + beta(3)));
    let mut blocks = Vec::with_capacity(n);
    for q in 0..n {
        let mut l = [Complex64::new(0.0, 0.0); 4];
        for (m, (v, dv)) in vals.iter().enumerate() {
            let e = Complex64::from_polar(1.0, 2.0 * PI * ((m + 1) * q) as f64 / nf);
            let a1 = dv[0] + psi * (dv[1] + dv[2]);
            let a3 = dv[3] + psi * (dv[4] + dv[5]);
            l[0] += a1 * (e - 1.0);
            l[1] += v[2] * e + v[1];
            l[2] += a3 * (e - 1.0);
            l[3] += v[5] * e + v[4];
        }
        let s = eps / nf;
        blocks.push((q as i64, eig2(l[0] * s, l[1] * s, l[2] * s, l[3] * s + h.kappa)));
    }
    Ok((psi, big_omega, blocks))
}

/// Splay state for finite `N` (any `N ≥ 1`) or the continuum limit.
pub fn splay_analysis(size: SplaySize, h: &InteractionSet, eps: f64) -> Result<(LockedState, StabilityReport)> {
    match size {
        SplaySize::Finite(n) => {
            if n < 2 {
                return Err(Error::Config("splay needs N >= 2".into()));
            }
            let (psi, big_omega, blocks) = finite_splay(n, h, eps)?;
            let eigs: Vec<Complex64> = blocks.iter().flat_map(|(_, b)| b.iter().copied()).collect();
            let phases = splay_phases(n);
            let psi_v = vec![psi; n];
            let net = NetworkSpec::global(n, eps)?;
            let residual = super::locking_residual(&phases, &psi_v, big_omega, &net, h);
            let state = LockedState { phases, psi: psi_v, big_omega, class: StateClass::Splay, residual };
            Ok((state, StabilityReport::from_eigenvalues(eigs, Some(Decomposition::Splay { blocks }))?))
        }
        SplaySize::Infinite => {
            let c = |k: usize, q: i64| h.coeff(k, q);
            let den = h.kappa + eps * (c(5, 0).re + c(6, 0).re);
            check_denominator(den, eps * c(4, 0).re)?;
            let psi = -eps * c(4, 0).re / den;
            let big_omega = h.omega + eps * (c(1, 0).re + psi * (c(2, 0).re + c(3, 0).re));
            let kmax = h.h.iter().map(|s| s.max_mode()).max().unwrap_or(0) as i64;
            let i = Complex64::new(0.0, 1.0);
            let mut blocks = Vec::new();
            for q in -kmax..=kmax {
                let qf = q as f64;
                let l1 = -i * eps * qf * (c(1, -q) + (c(2, -q) + c(3, -q)) * psi);
                let l2 = (c(3, -q) + c(2, 0)) * eps;
                let l3 = -i * eps * qf * (c(4, -q) + (c(5, -q) + c(6, -q)) * psi);
                let l4 = (c(6, -q) + c(5, 0)) * eps + h.kappa;
                blocks.push((q, eig2(l1, l2, l3, l4)));
            }
            let eigs: Vec<Complex64> = blocks.iter().flat_map(|(_, b)| b.iter().copied()).collect();
            let state = LockedState { phases: Vec::new(), psi: vec![psi], big_omega, class: StateClass::Splay, residual: 0.0 };
            Ok((state, StabilityReport::from_eigenvalues(eigs, Some(Decomposition::Splay { blocks }))?))
        }
    }
}

/// `M` equal clusters of `m` nodes under global coupling.
pub fn balanced_cluster_analysis(clusters: usize, size: usize, h: &InteractionSet, eps: f64) -> Result<(LockedState, StabilityReport)> {
    if clusters == 0 || size == 0 || clusters * size < 2 {
        return Err(Error::Config("balanced clusters need M*m >= 2".into()));
    }
    let n = clusters * size;
    let (psi, big_omega, inter) = finite_splay(clusters, h, eps)?;
    let mf = clusters as f64;
    let pts: Vec<([f64; 6], [f64; 6])> = (1..=clusters).map(|j| h.all(2.0 * PI * j as f64 / mf)).collect();
    let sig = |k: usize| pts.iter().map(|(v, _)| v[k - 1]).sum::<f64>();
    let dsig = |k: usize| pts.iter().map(|(_, d)| d[k - 1]).sum::<f64>();
    let a1 = (dsig(1) + psi * (dsig(2) + dsig(3))) / mf;
    let a2 = -sig(2) / mf;
    let a3 = (dsig(4) + psi * (dsig(5) + dsig(6))) / mf;
    let a4 = -sig(5) / mf - h.kappa / eps;
    let intra = if eps == 0.0 { eig2_real(0.0, 0.0, 0.0, h.kappa) } else { eig2_real(-eps * a1, -eps * a2, -eps * a3, -eps * a4) };
    let mut eigs: Vec<Complex64> = inter.iter().flat_map(|(_, b)| b.iter().copied()).collect();
    for _ in 0..(n - clusters) {
        eigs.extend_from_slice(&intra);
    }
    let phases = balanced_phases(clusters, size);
    let psi_v = vec![psi; n];
    let net = NetworkSpec::global(n, eps)?;
    let residual = super::locking_residual(&phases, &psi_v, big_omega, &net, h);
    let state = LockedState { phases, psi: psi_v, big_omega, class: StateClass::BalancedCluster { clusters, size }, residual };
    Ok((state, StabilityReport::from_eigenvalues(eigs, Some(Decomposition::Balanced { intra, inter }))?))
}
