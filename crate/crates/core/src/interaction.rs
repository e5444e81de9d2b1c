//! Coupling kernels `h_1..h_9` on the torus and their averages `H_1..H_6`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{dft2, grid, FourierSeries};
use crate::model::OscillatorModel;
use crate::orbit::PeriodicOrbit;
use crate::response::ResponseSet;

/// Number of raw kernels.
pub const NUM_KERNELS: usize = 9;

/// Point values of everything the kernels need at one phase.
#[derive(Clone, Debug)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub z: [Vec<f64>; 3],
    pub i: [Vec<f64>; 3],
}

impl PhasePoint {
    pub fn at(orbit: &PeriodicOrbit, resp: &ResponseSet, theta: f64) -> Self {
        Self {
            x: orbit.at(theta),
            g1: resp.g1.at(theta),
            g2: resp.g2.at(theta),
            z: [resp.z0.at(theta), resp.z1.at(theta), resp.z2.at(theta)],
            i: [resp.i0.at(theta), resp.i1.at(theta), resp.i2.at(theta)],
        }
    }

    fn on_grid(orbit: &PeriodicOrbit, resp: &ResponseSet, m: usize) -> Vec<Self> {
        if m == orbit.m() {
            return (0..m)
                .map(|j| Self {
                    x: orbit.samples[j].clone(),
                    g1: resp.g1.grid[j].clone(),
                    g2: resp.g2.grid[j].clone(),
                    z: [resp.z0.grid[j].clone(), resp.z1.grid[j].clone(), resp.z2.grid[j].clone()],
                    i: [resp.i0.grid[j].clone(), resp.i1.grid[j].clone(), resp.i2.grid[j].clone()],
                })
                .collect();
        }
        grid(m).iter().map(|&t| Self::at(orbit, resp, t)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mv(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| a[(r, c)] * v[c]).sum()).collect()
}

fn quad(h: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in 0..u.len() {
        for b in 0..v.len() {
            s += u[a] * h[(a, b)] * v[b];
        }
    }
    s
}

/// Kernel values `h_1..h_9` and the vectors `K1, K2, L` for one pair.
pub struct PairKernels {
    pub h: [f64; NUM_KERNELS],
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub l: Vec<f64>,
}

pub fn pair_kernels(model: &OscillatorModel, pi: &PhasePoint, pj: &PhasePoint) -> PairKernels {
    let n = pi.x.len();
    let mut g = vec![0.0; n];
    model.coupling.eval(&pi.x, &pj.x, &mut g);
    let (j1, j2) = model.coupling.jacobians(&pi.x, &pj.x);
    let [h11, h12, h21, h22] = model.coupling.hessian_blocks(&pi.x, &pj.x);
    let j1g1i = mv(&j1, &pi.g1);
    let j2g1j = mv(&j2, &pj.g1);
    let j1g2i = mv(&j1, &pi.g2);
    let j2g2j = mv(&j2, &pj.g2);
    let k1: Vec<f64> = (0..n).map(|q| j1g2i[q] + 0.5 * quad(&h11[q], &pi.g1, &pi.g1)).collect();
    let k2: Vec<f64> = (0..n).map(|q| j2g2j[q] + 0.5 * quad(&h22[q], &pj.g1, &pj.g1)).collect();
    let l: Vec<f64> = (0..n).map(|q| 0.5 * (quad(&h12[q], &pi.g1, &pj.g1) + quad(&h21[q], &pj.g1, &pi.g1))).collect();
    let [z0, z1, z2] = &pi.z;
    let [i0, i1, _] = &pi.i;
    let h = [
        dot(z0, &g),
        dot(z0, &j1g1i) + dot(z1, &g),
        dot(z0, &j2g1j),
        dot(i0, &g),
        dot(i0, &j1g1i) + dot(i1, &g),
        dot(i0, &j2g1j),
        dot(z0, &k1) + dot(z1, &j1g1i) + dot(z2, &g),
        dot(z0, &k2),
        dot(z0, &l) + dot(z1, &j2g1j),
    ];
    PairKernels { h, k1, k2, l }
}

/// Raw kernels sampled on an `M x M` grid in `(θ_i, θ_j)`.
#[derive(Clone, Debug)]
pub struct RawKernelSet {
    pub m: usize,
    pub omega: f64,
    pub kappa: f64,
    /// `h[k][i * m + j] = h_{k+1}(θ_i, θ_j)`.
    pub h: Vec<Vec<f64>>,
    /// Normalised 2-D DFT of each kernel, same layout.
    pub spectra: Vec<Vec<Complex64>>,
    /// `K1, K2, L` indexed `[i * m + j][component]`.
    pub k1: Vec<Vec<f64>>,
    pub k2: Vec<Vec<f64>>,
    pub l: Vec<Vec<f64>>,
    pub tail: f64,
}

impl RawKernelSet {
    /// Coefficient of `e^{i(a θ_i + b θ_j)}` in kernel `k` (0-based).
    pub fn coeff(&self, k: usize, a: i64, b: i64) -> Complex64 {
        let m = self.m as i64;
        let half = m / 2;
        if a.abs() >= half || b.abs() >= half {
            return Complex64::new(0.0, 0.0);
        }
        self.spectra[k][(a.rem_euclid(m) * m + b.rem_euclid(m)) as usize]
    }

    /// Kernel `k` evaluated from its 2-D Fourier series.
    pub fn eval(&self, k: usize, ti: f64, tj: f64) -> f64 {
        let half = (self.m / 2) as i64;
        let mut s = Complex64::new(0.0, 0.0);
        for a in -(half - 1)..half {
            for b in -(half - 1)..half {
                let c = self.coeff(k, a, b);
                if c.norm() > 0.0 {
                    s += c * Complex64::from_polar(1.0, a as f64 * ti + b as f64 * tj);
                }
            }
        }
        s.re
    }
}

fn tail_ratio2(spec: &[Complex64], m: usize) -> f64 {
    let max = spec.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    if max == 0.0 {
        return 0.0;
    }
    let cut = (9 * (m / 2)) / 10;
    let mut tail: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let fa = crate::fourier::freq(a, m).unsigned_abs() as usize;
            let fb = crate::fourier::freq(b, m).unsigned_abs() as usize;
            if fa.max(fb) >= cut {
                tail = tail.max(spec[a * m + b].norm());
            }
        }
    }
    tail / max
}

/// Sample all kernels on the `m x m` phase grid.
pub fn expand_coupling(model: &OscillatorModel, orbit: &PeriodicOrbit, resp: &ResponseSet, m: usize) -> Result<RawKernelSet> {
    if m < 8 || !m.is_multiple_of(2) {
        return Err(Error::Config("kernel grid must be even and at least 8".into()));
    }
    let pts = PhasePoint::on_grid(orbit, resp, m);
    let mut h = vec![vec![0.0; m * m]; NUM_KERNELS];
    let mut k1 = Vec::with_capacity(m * m);
    let mut k2 = Vec::with_capacity(m * m);
    let mut l = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let pk = pair_kernels(model, &pts[i], &pts[j]);
            for k in 0..NUM_KERNELS {
                h[k][i * m + j] = pk.h[k];
            }
            k1.push(pk.k1);
            k2.push(pk.k2);
            l.push(pk.l);
        }
    }
    let spectra: Vec<Vec<Complex64>> = h
        .iter()
        .map(|hk| dft2(&hk.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>(), m))
        .collect();
    let tail = spectra.iter().map(|s| tail_ratio2(s, m)).fold(0.0, f64::max);
    Ok(RawKernelSet { m, omega: resp.omega, kappa: resp.kappa, h, spectra, k1, k2, l, tail })
}

/// The averaged interaction functions `H_1..H_6` (index 0..5).
#[derive(Clone, Debug, Serialize)]
pub struct InteractionSet {
    pub omega: f64,
    pub kappa: f64,
    pub h: Vec<FourierSeries>,
    pub dh: Vec<FourierSeries>,
}

impl InteractionSet {
    /// Sample six scalar functions on an `m`-point grid.
    pub fn from_fn(omega: f64, kappa: f64, m: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        let g = grid(m);
        let h: Vec<FourierSeries> = (1..=6).map(|k| FourierSeries::from_samples(&g.iter().map(|&x| f(k, x)).collect::<Vec<_>>())).collect();
        let dh = h.iter().map(FourierSeries::derivative).collect();
        Self { omega, kappa, h, dh }
    }

    /// Copy with the listed functions (1-based) replaced by zero.
    pub fn with_zeroed(&self, which: &[usize]) -> Self {
        let mut out = self.clone();
        for &k in which {
            let z = FourierSeries::zero(out.h[k - 1].max_mode());
            out.h[k - 1] = z.clone();
            out.dh[k - 1] = z;
        }
        out
    }

    pub fn eval(&self, k: usize, chi: f64) -> f64 {
        self.h[k - 1].eval(chi)
    }

    pub fn deriv(&self, k: usize, chi: f64) -> f64 {
        self.dh[k - 1].eval(chi)
    }

    /// Fourier coefficient `(H_k)_p`.
    pub fn coeff(&self, k: usize, p: i64) -> Complex64 {
        self.h[k - 1].coeff(p)
    }

    /// All six values and derivatives at `chi`.
    pub fn all(&self, chi: f64) -> ([f64; 6], [f64; 6]) {
        let mut v = [0.0; 6];
        let mut d = [0.0; 6];
        for k in 0..6 {
            v[k] = self.h[k].eval(chi);
            d[k] = self.dh[k].eval(chi);
        }
        (v, d)
    }

    /// Drop modes whose magnitude is below `tol` times the largest.
    pub fn trimmed(&self, tol: f64) -> Self {
        let kept = self
            .h
            .iter()
            .map(|s| {
                let max = s.coeffs.iter().fold(0.0f64, |a, c| a.max(c.norm()));
                let mut kmax = 0;
                for p in 0..=s.max_mode() as i64 {
                    if s.coeff(p).norm() > tol * max || s.coeff(-p).norm() > tol * max {
                        kmax = p as usize;
                    }
                }
                kmax
            })
            .max()
            .unwrap_or(0);
        let h: Vec<FourierSeries> = self.h.iter().map(|s| s.truncated(kept)).collect();
        let dh = h.iter().map(FourierSeries::derivative).collect();
        Self { omega: self.omega, kappa: self.kappa, h, dh }
    }

    pub fn to_csv(&self, samples: usize) -> String {
        let mut s = String::from("chi,H1,H2,H3,H4,H5,H6,dH1,dH2,dH3,dH4,dH5,dH6\n");
        for chi in grid(samples) {
            let (v, d) = self.all(chi);
            s.push_str(&format!("{chi:.12e}"));
            for x in v.iter().chain(d.iter()) {
                s.push_str(&format!(",{x:.15e}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serialisable")
    }
}

/// Average along the diagonal: `(H_k)_p` is the `(−p, p)` coefficient of `h_k`.
pub fn average_to_h(raw: &RawKernelSet) -> InteractionSet {
    let m = raw.m;
    let half = m / 2;
    let h: Vec<FourierSeries> = (0..6)
        .map(|k| {
            FourierSeries::from_coeffs(half, |p| {
                let mi = m as i64;
                let c = raw.spectra[k][((-p).rem_euclid(mi) * mi + p.rem_euclid(mi)) as usize];
                if p.unsigned_abs() as usize == half {
                    c * 0.5
                } else {
                    c
                }
            })
        })
        .collect();
    let dh = h.iter().map(FourierSeries::derivative).collect();
    InteractionSet { omega: raw.omega, kappa: raw.kappa, h, dh }
}

/// Trapezoid quadrature `(1/2π)∫ h_k(u, u+χ) du` from direct point evaluation.
pub fn quadrature_h(model: &OscillatorModel, orbit: &PeriodicOrbit, resp: &ResponseSet, k: usize, chi: f64, nodes: usize) -> f64 {
    let mut s = 0.0;
    for u in grid(nodes) {
        let pi = PhasePoint::at(orbit, resp, u);
        let pj = PhasePoint::at(orbit, resp, u + chi);
        s += pair_kernels(model, &pi, &pj).h[k - 1];
    }
    s / nodes as f64
}

/// Full pipeline from a model to its interaction functions.
pub struct Reduction {
    pub orbit: PeriodicOrbit,
    pub response: ResponseSet,
    pub kernels: RawKernelSet,
    pub interaction: InteractionSet,
}

#[derive(Clone, Debug)]
#[derive(Default)]
pub struct ReductionOptions {
    pub orbit: crate::orbit::OrbitOptions,
    pub hierarchy: crate::response::HierarchyOptions,
    /// Kernel grid size; `None` uses the orbit grid.
    pub kernel_grid: Option<usize>,
}


impl ReductionOptions {
    pub fn with_grid(m: usize) -> Self {
        Self { orbit: crate::orbit::OrbitOptions { m, ..Default::default() }, ..Default::default() }
    }
}

pub fn reduce(model: &OscillatorModel, opts: &ReductionOptions) -> Result<Reduction> {
    let orbit = crate::orbit::find_periodic_orbit(model, &model.guess, model.period_guess, &opts.orbit)?;
    let response = crate::response::solve_hierarchy(model, &orbit, &opts.hierarchy)?;
    let kernels = expand_coupling(model, &orbit, &response, opts.kernel_grid.unwrap_or(orbit.m()))?;
    let interaction = average_to_h(&kernels);
    Ok(Reduction { orbit, response, kernels, interaction })
}
