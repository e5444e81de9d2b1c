//! Phase-locked states of the averaged phase-isostable network and their
//! linear stability.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::InteractionSet;
use crate::linalg::eigen::{eig2, eigenvalues};
use crate::linalg::inverse_condition;

mod special;
pub mod sweep;
mod two_cluster;

pub use special::{balanced_cluster_analysis, splay_analysis, synchrony_analysis, SplaySize};
pub use sweep::{
    eps_range, local_root, sweep, track_two_cluster, Bifurcation, BifurcationKind, BranchPoint, Selector, SweepResult, SweepRow, TrackOptions,
};
pub use two_cluster::{
    two_cluster_at, two_cluster_det, two_cluster_mismatch, two_cluster_psi, two_cluster_roots, two_cluster_solve, TwoClusterBlocks,
};

/// Connectivity `W` and coupling strength `ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkSpec {
    pub n: usize,
    pub w: DMatrix<f64>,
    pub eps: f64,
}

impl NetworkSpec {
    /// All-to-all coupling with `w_ij = 1/N`.
    pub fn global(n: usize, eps: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("network needs at least 2 nodes, got {n}")));
        }
        Ok(Self { n, w: DMatrix::from_element(n, n, 1.0 / n as f64), eps })
    }

    /// Scale `w` so every row sums to `c`.
    pub fn constant_row_sum(w: DMatrix<f64>, c: f64, eps: f64) -> Result<Self> {
        let mut net = Self::from_matrix(w, eps)?;
        for i in 0..net.n {
            let s: f64 = net.w.row(i).sum();
            if s == 0.0 {
                return Err(Error::Config(format!("row {i} has zero sum")));
            }
            for j in 0..net.n {
                net.w[(i, j)] *= c / s;
            }
        }
        Ok(net)
    }

    pub fn from_matrix(w: DMatrix<f64>, eps: f64) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::Config("weight matrix must be square".into()));
        }
        if w.nrows() < 2 {
            return Err(Error::Config("network needs at least 2 nodes".into()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("weight matrix has non-finite entries".into()));
        }
        Ok(Self { n: w.nrows(), w, eps })
    }

    /// Whitespace-separated `N x N` reals.
    pub fn from_file(path: &Path, eps: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| Error::Config(format!("bad matrix entry '{t}': {e}")))).collect())
            .collect::<Result<_>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config("matrix file is not square".into()));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]), eps)
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.w.row(i).sum()).collect()
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let s = self.row_sums();
        DMatrix::from_fn(self.n, self.n, |i, j| if i == j { s[i] - self.w[(i, j)] } else { -self.w[(i, j)] })
    }

    pub fn is_global(&self) -> bool {
        let g = 1.0 / self.n as f64;
        self.w.iter().all(|&v| (v - g).abs() < 1e-14)
    }

    /// Common row sum, if all rows agree.
    pub fn constant_row(&self) -> Option<f64> {
        let s = self.row_sums();
        let c = s[0];
        s.iter().all(|v| (v - c).abs() <= 1e-12 * c.abs().max(1.0)).then_some(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum StateClass {
    Synchrony,
    Splay,
    BalancedCluster { clusters: usize, size: usize },
    TwoCluster { na: usize, nb: usize, chi: f64 },
    Generic,
}

impl StateClass {
    pub fn label(&self) -> String {
        match self {
            StateClass::Synchrony => "synchrony".into(),
            StateClass::Splay => "splay".into(),
            StateClass::BalancedCluster { clusters, size } => format!("balanced({clusters}x{size})"),
            StateClass::TwoCluster { na, nb, .. } => format!("two-cluster({na},{nb})"),
            StateClass::Generic => "generic".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LockedState {
    pub phases: Vec<f64>,
    pub psi: Vec<f64>,
    /// Collective frequency `Ω`.
    pub big_omega: f64,
    pub class: StateClass,
    /// Largest violation of the locking equations.
    pub residual: f64,
}

impl LockedState {
    pub fn n(&self) -> usize {
        self.phases.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    /// No eigenvalue in the right half plane but extra zero modes.
    Neutral,
    Unstable,
}

/// Eigenvalue groups reported by the specialised analyses.
#[derive(Clone, Debug, Serialize)]
pub enum Decomposition {
    Synchrony { transverse: Complex64, m_block: [Complex64; 2], laplacian: Vec<Complex64> },
    Splay { blocks: Vec<(i64, [Complex64; 2])> },
    Balanced { intra: [Complex64; 2], inter: Vec<(i64, [Complex64; 2])> },
    TwoCluster { intra_a: [Complex64; 2], intra_b: [Complex64; 2], inter: Vec<Complex64>, routh: [f64; 3], routh_stable: bool },
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    /// Sorted by real part, then imaginary part, descending.
    pub eigenvalues: Vec<Complex64>,
    pub zero_mode: Complex64,
    /// Largest real part once the rotational mode is removed.
    pub max_re: f64,
    /// Imaginary part of the eigenvalue attaining `max_re`.
    pub max_im: f64,
    pub spectral_radius: f64,
    pub verdict: Verdict,
    pub decomposition: Option<Decomposition>,
}

pub const ZERO_TOL: f64 = 1e-6;
pub const MARGIN: f64 = 1e-8;

fn cmp_eig(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal).then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
}

impl StabilityReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>, decomposition: Option<Decomposition>) -> Result<Self> {
        eigenvalues.sort_by(cmp_eig);
        let rho = eigenvalues.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let (iz, zero_mode) = eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .map(|(i, z)| (i, *z))
            .ok_or_else(|| Error::Numerical("empty spectrum".into()))?;
        if zero_mode.norm() > ZERO_TOL * rho.max(1e-300) && rho > 0.0 {
            return Err(Error::Numerical(format!("rotational zero mode missing (smallest |μ| = {:.3e})", zero_mode.norm())));
        }
        let margin = MARGIN * rho;
        let mut max_re = f64::NEG_INFINITY;
        let mut max_im = 0.0;
        let mut extra_zero = false;
        for (i, z) in eigenvalues.iter().enumerate() {
            if i == iz {
                continue;
            }
            if z.re > max_re {
                max_re = z.re;
                max_im = z.im;
            }
            if z.re.abs() <= margin {
                extra_zero = true;
            }
        }
        if eigenvalues.len() == 1 {
            max_re = 0.0;
        }
        let verdict = if max_re > margin {
            Verdict::Unstable
        } else if extra_zero || max_re > -margin {
            Verdict::Neutral
        } else {
            Verdict::Stable
        };
        Ok(Self { eigenvalues, zero_mode, max_re, max_im, spectral_radius: rho, verdict, decomposition })
    }

    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }

    pub fn is_unstable(&self) -> bool {
        self.verdict == Verdict::Unstable
    }
}

/// `εQ` and `εq` for the isostable equations; `Ψ` solves `(εQ) Ψ = ε q`.
fn psi_system(phases: &[f64], net: &NetworkSpec, h: &InteractionSet) -> (DMatrix<f64>, DVector<f64>) {
    let n = net.n;
    let eps = net.eps;
    let mut a = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let mut s5 = 0.0;
        let mut q = 0.0;
        for j in 0..n {
            let w = net.w[(i, j)];
            if w == 0.0 {
                continue;
            }
            let d = phases[j] - phases[i];
            s5 += w * h.eval(5, d);
            q += w * h.eval(4, d);
            a[(i, j)] -= eps * w * h.eval(6, d);
        }
        a[(i, i)] -= eps * s5 + h.kappa;
        rhs[i] = eps * q;
    }
    (a, rhs)
}

fn frequencies(phases: &[f64], psi: &[f64], net: &NetworkSpec, h: &InteractionSet) -> Vec<f64> {
    (0..net.n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..net.n {
                let w = net.w[(i, j)];
                if w != 0.0 {
                    let d = phases[j] - phases[i];
                    s += w * (h.eval(1, d) + psi[i] * h.eval(2, d) + psi[j] * h.eval(3, d));
                }
            }
            h.omega + net.eps * s
        })
        .collect()
}

/// Right-hand side of the averaged network equations.
pub fn network_rhs(theta: &[f64], psi: &[f64], net: &NetworkSpec, h: &InteractionSet) -> (Vec<f64>, Vec<f64>) {
    let n = net.n;
    let mut dth = vec![0.0; n];
    let mut dps = vec![0.0; n];
    // symmetric states repeat the same few phase differences
    let mut seen: HashMap<u64, [f64; 6]> = HashMap::new();
    for i in 0..n {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..n {
            let w = net.w[(i, j)];
            if w != 0.0 {
                let d = theta[j] - theta[i];
                let v = *seen.entry(d.to_bits()).or_insert_with(|| h.all(d).0);
                a += w * (v[0] + psi[i] * v[1] + psi[j] * v[2]);
                b += w * (v[3] + psi[i] * v[4] + psi[j] * v[5]);
            }
        }
        dth[i] = h.omega + net.eps * a;
        dps[i] = h.kappa * psi[i] + net.eps * b;
    }
    (dth, dps)
}

/// Largest violation of the locking equations at `(Φ, Ψ, Ω)`.
pub fn locking_residual(phases: &[f64], psi: &[f64], big_omega: f64, net: &NetworkSpec, h: &InteractionSet) -> f64 {
    let (dth, dps) = network_rhs(phases, psi, net, h);
    dth.iter().map(|v| (v - big_omega).abs()).chain(dps.iter().map(|v| v.abs())).fold(0.0, f64::max)
}

/// Existence of a locked state with relative phases `Φ`.
pub fn solve_existence(phases: &[f64], net: &NetworkSpec, h: &InteractionSet) -> Result<LockedState> {
    if phases.len() != net.n {
        return Err(Error::Config(format!("phase vector has {} entries for {} nodes", phases.len(), net.n)));
    }
    let psi: Vec<f64> = if net.eps == 0.0 {
        vec![0.0; net.n]
    } else {
        let (a, rhs) = psi_system(phases, net, h);
        let rc = inverse_condition(&a);
        if rc < 1e-12 {
            return Err(Error::Asymptote(1.0 / rc));
        }
        let sol = a.lu().solve(&rhs).ok_or(Error::Asymptote(f64::INFINITY))?;
        sol.iter().copied().collect()
    };
    let om = frequencies(phases, &psi, net, h);
    let lo = om.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = om.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    if spread > 1e-9 * h.omega.abs().max(1.0) {
        return Err(Error::NoLockedState(spread));
    }
    let big_omega = om.iter().sum::<f64>() / om.len() as f64;
    let residual = locking_residual(phases, &psi, big_omega, net, h);
    Ok(LockedState { phases: phases.to_vec(), psi, big_omega, class: StateClass::Generic, residual })
}

/// The `2N x 2N` Jacobian of the averaged equations at a locked state.
pub fn jacobian_matrix(state: &LockedState, net: &NetworkSpec, h: &InteractionSet) -> DMatrix<f64> {
    let n = net.n;
    let eps = net.eps;
    let (ph, ps) = (&state.phases, &state.psi);
    let mut jm = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let w = net.w[(i, j)];
            if w == 0.0 {
                continue;
            }
            let d = ph[j] - ph[i];
            let (v, dv) = h.all(d);
            let xt = dv[0] + ps[i] * dv[1] + ps[j] * dv[2];
            let xp = dv[3] + ps[i] * dv[4] + ps[j] * dv[5];
            jm[(i, j)] += eps * w * xt;
            jm[(i, i)] -= eps * w * xt;
            jm[(i, n + j)] += eps * w * v[2];
            jm[(i, n + i)] += eps * w * v[1];
            jm[(n + i, j)] += eps * w * xp;
            jm[(n + i, i)] -= eps * w * xp;
            jm[(n + i, n + j)] += eps * w * v[5];
            jm[(n + i, n + i)] += eps * w * v[4];
        }
        jm[(n + i, n + i)] += h.kappa;
    }
    jm
}

/// Generic stability from the full Jacobian.
pub fn jacobian(state: &LockedState, net: &NetworkSpec, h: &InteractionSet) -> Result<StabilityReport> {
    let jm = jacobian_matrix(state, net, h);
    StabilityReport::from_eigenvalues(eigenvalues(&jm)?, None)
}

/// Phases of the `N`-node splay state `2πj/N`.
pub fn splay_phases(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// `M` clusters of `m` nodes, cluster `c` at phase `2πc/M`.
pub fn balanced_phases(clusters: usize, size: usize) -> Vec<f64> {
    (0..clusters * size).map(|i| 2.0 * PI * (i / size) as f64 / clusters as f64).collect()
}

pub(crate) fn eig2_real(a: f64, b: f64, c: f64, d: f64) -> [Complex64; 2] {
    let r = |x: f64| Complex64::new(x, 0.0);
    eig2(r(a), r(b), r(c), r(d))
}

/// Sort eigenvalue multisets the same way for comparisons.
pub fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(cmp_eig);
    v
}

/// Largest distance between two eigenvalue multisets, matched greedily.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}
