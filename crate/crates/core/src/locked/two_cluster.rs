use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{eig2_real, Decomposition, LockedState, NetworkSpec, StabilityReport, StateClass};
use crate::error::{Error, Result};
use crate::interaction::InteractionSet;
use crate::linalg::eigen::eigenvalues;
use crate::linalg::poly::{routh_cubic, Poly};

const SCAN: usize = 2048;
const CHI_TOL: f64 = 1e-10;

/// Pieces of the isostable elimination at a given gap `χ`.
struct Elim {
    e: [[f64; 2]; 2],
    r: [f64; 2],
    det: f64,
    /// `Ω_A - Ω_B = u + v·Ψ`
    u: f64,
    v: [f64; 2],
}

fn elim(chi: f64, na: usize, nb: usize, h: &InteractionSet, eps: f64) -> Elim {
    let n = (na + nb) as f64;
    let (a, b) = (na as f64 * eps / n, nb as f64 * eps / n);
    let (z, _) = h.all(0.0);
    let (p, _) = h.all(chi);
    let (m, _) = h.all(-chi);
    let k = h.kappa;
    let e = [[k + a * (z[4] + z[5]) + b * p[4], b * p[5]], [a * m[5], k + a * m[4] + b * (z[4] + z[5])]];
    let r = [-(a * z[3] + b * p[3]), -(a * m[3] + b * z[3])];
    let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
    // Ω_A - ω = a(H1(0) + Ψ_A(H2+H3)(0)) + b(H1(χ) + Ψ_A H2(χ) + Ψ_B H3(χ))
    // Ω_B - ω = a(H1(-χ) + Ψ_B H2(-χ) + Ψ_A H3(-χ)) + b(H1(0) + Ψ_B(H2+H3)(0))
    let u = a * z[0] + b * p[0] - a * m[0] - b * z[0];
    let v = [a * (z[1] + z[2]) + b * p[1] - a * m[2], b * p[2] - a * m[1] - b * (z[1] + z[2])];
    Elim { e, r, det, u, v }
}

/// `(Ψ_A, Ψ_B)` at gap `χ`, or an asymptote error when the elimination is singular.
pub fn two_cluster_psi(chi: f64, na: usize, nb: usize, h: &InteractionSet, eps: f64) -> Result<[f64; 2]> {
    let el = elim(chi, na, nb, h, eps);
    let scale = el.e.iter().flatten().fold(0.0f64, |x, y| x.max(y.abs())).powi(2);
    if el.det.abs() < 1e-12 * scale.max(1e-300) {
        return Err(Error::Asymptote(scale / el.det.abs().max(1e-300)));
    }
    Ok([
        (el.e[1][1] * el.r[0] - el.e[0][1] * el.r[1]) / el.det,
        (el.e[0][0] * el.r[1] - el.e[1][0] * el.r[0]) / el.det,
    ])
}

/// Frequency mismatch multiplied through by `det E`, which keeps it pole-free.
pub fn two_cluster_mismatch(chi: f64, na: usize, nb: usize, h: &InteractionSet, eps: f64) -> f64 {
    let el = elim(chi, na, nb, h, eps);
    let adj_r = [el.e[1][1] * el.r[0] - el.e[0][1] * el.r[1], el.e[0][0] * el.r[1] - el.e[1][0] * el.r[0]];
    el.u * el.det + el.v[0] * adj_r[0] + el.v[1] * adj_r[1]
}

/// Determinant of the isostable elimination; its zeros are limit points.
pub fn two_cluster_det(chi: f64, na: usize, nb: usize, h: &InteractionSet, eps: f64) -> f64 {
    elim(chi, na, nb, h, eps).det
}

/// 2x2 blocks of the two-cluster Jacobian.
#[derive(Clone, Debug, Serialize)]
pub struct TwoClusterBlocks {
    pub a: [f64; 4],
    pub b: [f64; 4],
    pub c: [f64; 4],
    pub d: [f64; 4],
    pub sa: [f64; 4],
    pub sb: [f64; 4],
    pub jm: DMatrix<f64>,
}

impl TwoClusterBlocks {
    pub fn new(chi: f64, psi_a: f64, psi_b: f64, na: usize, nb: usize, h: &InteractionSet, eps: f64) -> Self {
        let n = (na + nb) as f64;
        let s = eps / n;
        let (z, dz) = h.all(0.0);
        let (p, dp) = h.all(chi);
        let (m, dm) = h.all(-chi);
        let a = [s * (dz[0] + psi_a * (dz[1] + dz[2])), s * z[2], s * (dz[3] + psi_a * (dz[4] + dz[5])), s * z[5]];
        let b = [s * (dp[0] + psi_a * dp[1] + psi_b * dp[2]), s * p[2], s * (dp[3] + psi_a * dp[4] + psi_b * dp[5]), s * p[5]];
        let c = [s * (dm[0] + psi_b * dm[1] + psi_a * dm[2]), s * m[2], s * (dm[3] + psi_b * dm[4] + psi_a * dm[5]), s * m[5]];
        let d = [s * (dz[0] + psi_b * (dz[1] + dz[2])), s * z[2], s * (dz[3] + psi_b * (dz[4] + dz[5])), s * z[5]];
        let (fa, fb) = (na as f64, nb as f64);
        let sa = [
            -fa * a[0] - fb * b[0],
            s * (fa * z[1] + fb * p[1]),
            -fa * a[2] - fb * b[2],
            h.kappa + s * (fa * z[4] + fb * p[4]),
        ];
        let sb = [
            -fa * c[0] - fb * d[0],
            s * (fa * m[1] + fb * z[1]),
            -fa * c[2] - fb * d[2],
            h.kappa + s * (fa * m[4] + fb * z[4]),
        ];
        let mut jm = DMatrix::zeros(4, 4);
        for r in 0..2 {
            for col in 0..2 {
                let k = 2 * r + col;
                jm[(r, col)] = sa[k] + fa * a[k];
                jm[(r, 2 + col)] = fb * b[k];
                jm[(2 + r, col)] = fa * c[k];
                jm[(2 + r, 2 + col)] = sb[k] + fb * d[k];
            }
        }
        Self { a, b, c, d, sa, sb, jm }
    }

    /// `(q1, q2, q3)` of `μ(μ³ + q1 μ² + q2 μ + q3)`.
    pub fn routh(&self) -> [f64; 3] {
        let p: Poly = Poly::characteristic(&self.jm);
        let c = &p.0;
        [c[3] / c[4], c[2] / c[4], c[1] / c[4]]
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    while hi - lo > CHI_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots `χ ∈ (0, 2π)` of the two-cluster mismatch.
pub fn two_cluster_roots(na: usize, nb: usize, h: &InteractionSet, eps: f64) -> Vec<f64> {
    let f = |chi: f64| two_cluster_mismatch(chi, na, nb, h, eps);
    let dx = 2.0 * PI / SCAN as f64;
    let xs: Vec<f64> = (1..SCAN).map(|k| k as f64 * dx).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for k in 0..xs.len() {
        if fs[k] == 0.0 {
            roots.push(xs[k]);
            continue;
        }
        if k + 1 < xs.len() && fs[k + 1] != 0.0 && (fs[k] > 0.0) != (fs[k + 1] > 0.0) {
            roots.push(bisect(&f, xs[k], xs[k + 1], fs[k]));
        }
    }
    roots
}

/// Analyse a two-cluster state at a known gap `χ`.
pub fn two_cluster_at(chi: f64, na: usize, nb: usize, h: &InteractionSet, eps: f64) -> Result<(LockedState, StabilityReport)> {
    let [psi_a, psi_b] = two_cluster_psi(chi, na, nb, h, eps)?;
    let n = na + nb;
    let s = eps / n as f64;
    let (z, _) = h.all(0.0);
    let (p, _) = h.all(chi);
    let big_omega = h.omega + s * (na as f64 * (z[0] + psi_a * (z[1] + z[2])) + nb as f64 * (p[0] + psi_a * p[1] + psi_b * p[2]));
    let blocks = TwoClusterBlocks::new(chi, psi_a, psi_b, na, nb, h, eps);
    let intra_a = eig2_real(blocks.sa[0], blocks.sa[1], blocks.sa[2], blocks.sa[3]);
    let intra_b = eig2_real(blocks.sb[0], blocks.sb[1], blocks.sb[2], blocks.sb[3]);
    let inter = eigenvalues(&blocks.jm)?;
    let routh = blocks.routh();
    let routh_stable = routh_cubic(routh[0], routh[1], routh[2]);
    let mut eigs = inter.clone();
    for _ in 1..na {
        eigs.extend_from_slice(&intra_a);
    }
    for _ in 1..nb {
        eigs.extend_from_slice(&intra_b);
    }
    let phases: Vec<f64> = (0..n).map(|i| if i < na { 0.0 } else { chi }).collect();
    let psi: Vec<f64> = (0..n).map(|i| if i < na { psi_a } else { psi_b }).collect();
    let net = NetworkSpec::global(n, eps)?;
    let residual = super::locking_residual(&phases, &psi, big_omega, &net, h);
    let state = LockedState { phases, psi, big_omega, class: StateClass::TwoCluster { na, nb, chi }, residual };
    let report = StabilityReport::from_eigenvalues(
        eigs,
        Some(Decomposition::TwoCluster { intra_a, intra_b, inter: inter.to_vec(), routh, routh_stable }),
    )?;
    Ok((state, report))
}

/// All two-cluster states with cluster sizes `(N_A, N_B)`; roots at which the
/// elimination is singular come back as `Err(Asymptote)` entries.
pub fn two_cluster_solve(na: usize, nb: usize, h: &InteractionSet, eps: f64) -> Result<Vec<Result<(LockedState, StabilityReport)>>> {
    if na == 0 || nb == 0 {
        return Err(Error::Config("both clusters must be non-empty".into()));
    }
    Ok(two_cluster_roots(na, nb, h, eps).into_iter().map(|chi| two_cluster_at(chi, na, nb, h, eps)).collect())
}
