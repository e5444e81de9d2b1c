//! Direct integration of coupled networks and of their phase-isostable
//! reductions, plus cluster and order-parameter diagnostics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::{InteractionSet, RawKernelSet};
use crate::locked::NetworkSpec;
use crate::model::OscillatorModel;
use crate::ode::{Control, Dopri5};
use crate::orbit::PeriodicOrbit;
use crate::response::ResponseSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Full,
    Reduced,
    Unaveraged,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryMeta {
    pub mode: SimMode,
    pub model: String,
    pub n: usize,
    pub eps: f64,
    pub rtol: f64,
    pub atol: f64,
    pub seed: Option<u64>,
    pub t_end: f64,
    pub dt_out: f64,
}

/// Sampled network trajectory. Reduced runs store `[θ_1..θ_N, ψ_1..ψ_N]`
/// with unwrapped phases; full runs store the node states back to back.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub node_dim: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn is_reduced(&self) -> bool {
        self.meta.mode != SimMode::Full
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    /// Unwrapped phases at sample `k`.
    pub fn theta_unwrapped(&self, k: usize) -> &[f64] {
        &self.states[k][..self.meta.n]
    }

    /// Phases at sample `k`, reduced mod 2π.
    pub fn theta(&self, k: usize) -> Vec<f64> {
        self.theta_unwrapped(k).iter().map(|t| t.rem_euclid(2.0 * PI)).collect()
    }

    pub fn psi(&self, k: usize) -> &[f64] {
        &self.states[k][self.meta.n..]
    }

    /// State of node `i` at sample `k` of a full run.
    pub fn node(&self, k: usize, i: usize) -> &[f64] {
        &self.states[k][i * self.node_dim..(i + 1) * self.node_dim]
    }

    pub fn last(&self) -> usize {
        self.times.len() - 1
    }

    /// Sample index closest to time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0
        } else if k >= self.times.len() {
            self.last()
        } else if (self.times[k] - t).abs() < (t - self.times[k - 1]).abs() {
            k
        } else {
            k - 1
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        let n = self.meta.n;
        if self.is_reduced() {
            (0..n).for_each(|i| s.push_str(&format!(",theta{i}")));
            (0..n).for_each(|i| s.push_str(&format!(",psi{i}")));
        } else {
            for i in 0..n {
                (0..self.node_dim).for_each(|c| s.push_str(&format!(",x{i}_{c}")));
            }
        }
        s.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            s.push_str(&format!("{t:.6}"));
            if self.is_reduced() {
                for v in self.theta(k).iter().chain(self.psi(k)) {
                    s.push_str(&format!(",{v:.10e}"));
                }
            } else {
                for v in &self.states[k] {
                    s.push_str(&format!(",{v:.10e}"));
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Sup-norm beyond which the run counts as diverged.
    pub limit: f64,
    /// Seed used to draw the initial condition, recorded in the metadata.
    pub seed: Option<u64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-9, limit: 1e6, seed: None }
    }
}

fn meta(mode: SimMode, model: String, net: &NetworkSpec, t_end: f64, dt_out: f64, opts: &SimOptions) -> TrajectoryMeta {
    TrajectoryMeta { mode, model, n: net.n, eps: net.eps, rtol: opts.rtol, atol: opts.atol, seed: opts.seed, t_end, dt_out }
}

fn integrate<F>(mut rhs: F, y0: Vec<f64>, t_end: f64, dt_out: f64, opts: &SimOptions, watch: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt_out > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Config("need t_end >= 0 and dt_out > 0".into()));
    }
    let count = (t_end / dt_out + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|k| k as f64 * dt_out).collect();
    if t_end - times[count] > 1e-9 * dt_out {
        times.push(t_end);
    }
    let mut out = vec![y0.clone()];
    let mut next = 1;
    let mut blown = None;
    let mut y = y0;
    let solver = Dopri5::new(opts.rtol, opts.atol);
    let mut buf = vec![0.0; y.len()];
    solver.integrate_observed(&mut rhs, 0.0, &mut y, t_end, &mut |st| {
        while next < times.len() && times[next] <= st.t1 + 1e-12 {
            st.eval(times[next], &mut buf);
            out.push(buf.clone());
            next += 1;
        }
        if st.y1[..watch].iter().any(|v| !(v.abs() <= opts.limit)) {
            blown = Some(st.t1);
            return Control::Stop;
        }
        Control::Continue
    })?;
    if let Some(t) = blown {
        return Err(Error::Divergence(t));
    }
    while out.len() < times.len() {
        out.push(y.clone());
    }
    Ok((times, out))
}

/// Row weights as either one shared value or a dense matrix.
enum Weights {
    Uniform(f64),
    Dense(DMatrix<f64>),
}

impl Weights {
    fn new(w: &DMatrix<f64>) -> Self {
        let v = w[(0, 0)];
        if w.iter().all(|&x| x == v) {
            Weights::Uniform(v)
        } else {
            Weights::Dense(w.clone())
        }
    }

    /// `Σ_j w_ij z_j` for every `i`.
    fn apply(&self, z: &[Complex64], out: &mut [Complex64]) {
        match self {
            Weights::Uniform(v) => {
                let s: Complex64 = z.iter().sum::<Complex64>() * *v;
                out.iter_mut().for_each(|o| *o = s);
            }
            Weights::Dense(w) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..z.len()).map(|j| z[j] * w[(i, j)]).sum();
                }
            }
        }
    }

    fn row_sum(&self, i: usize, n: usize) -> f64 {
        match self {
            Weights::Uniform(v) => v * n as f64,
            Weights::Dense(w) => w.row(i).sum(),
        }
    }
}

/// `e^{ipθ_j}` for `p = 0..=kmax`, stored `[p][j]`.
fn powers(theta: &[f64], kmax: usize) -> Vec<Vec<Complex64>> {
    let base: Vec<Complex64> = theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    let mut e = vec![vec![Complex64::new(1.0, 0.0); theta.len()]];
    for p in 1..=kmax {
        let row: Vec<Complex64> = e[p - 1].iter().zip(&base).map(|(a, b)| a * b).collect();
        e.push(row);
    }
    e
}

/// Moment sums `S_p(i) = Σ_j w_ij e^{ipθ_j}` and `T_p(i) = Σ_j w_ij ψ_j e^{ipθ_j}`.
fn moments(w: &Weights, e: &[Vec<Complex64>], psi: &[f64]) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let n = psi.len();
    let mut s = vec![vec![Complex64::new(0.0, 0.0); n]; e.len()];
    let mut t = s.clone();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for p in 0..e.len() {
        w.apply(&e[p], &mut s[p]);
        for j in 0..n {
            scratch[j] = e[p][j] * psi[j];
        }
        w.apply(&scratch, &mut t[p]);
    }
    (s, t)
}

fn effective_modes(h: &InteractionSet) -> usize {
    let scale = h.h.iter().flat_map(|s| s.coeffs.iter()).fold(0.0f64, |a, c| a.max(c.norm()));
    let top = h.h.iter().map(|s| s.max_mode()).max().unwrap_or(0);
    (0..=top).rev().find(|&p| (1..=6).any(|k| h.coeff(k, p as i64).norm() > 1e-15 * scale)).unwrap_or(0)
}

/// Averaged phase-isostable network equations for `N` nodes.
pub fn simulate_phase_isostable(
    h: &InteractionSet,
    net: &NetworkSpec,
    theta0: &[f64],
    psi0: &[f64],
    t_end: f64,
    dt_out: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let n = net.n;
    if theta0.len() != n || psi0.len() != n {
        return Err(Error::Config(format!("initial condition needs {n} phases and {n} isostables")));
    }
    let (omega, kappa, eps) = (h.omega, h.kappa, net.eps);
    let kmax = effective_modes(h);
    let c: Vec<Vec<Complex64>> = (1..=6).map(|k| (0..=kmax).map(|p| h.coeff(k, p as i64)).collect()).collect();
    let w = Weights::new(&net.w);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (th, ps) = y.split_at(n);
        let e = powers(th, kmax);
        let (s, t) = moments(&w, &e, ps);
        for i in 0..n {
            // Σ_j w_ij H_k(θ_j - θ_i) and the ψ_j-weighted version
            let sum = |k: usize, m: &[Vec<Complex64>]| -> f64 {
                let mut acc = (c[k][0] * m[0][i]).re;
                for p in 1..=kmax {
                    acc += 2.0 * (c[k][p] * e[p][i].conj() * m[p][i]).re;
                }
                acc
            };
            dy[i] = omega + eps * (sum(0, &s) + ps[i] * sum(1, &s) + sum(2, &t));
            dy[n + i] = kappa * ps[i] + eps * (sum(3, &s) + ps[i] * sum(4, &s) + sum(5, &t));
        }
    };
    let y0: Vec<f64> = theta0.iter().chain(psi0).copied().collect();
    let (times, states) = integrate(rhs, y0, t_end, dt_out, opts, 2 * n)?;
    Ok(Trajectory { meta: meta(SimMode::Reduced, "phase-isostable".into(), net, t_end, dt_out, opts), node_dim: 2, times, states })
}

/// Non-averaged reduction driven by the raw two-phase kernels `h_1..h_6`.
pub fn simulate_unaveraged(
    raw: &RawKernelSet,
    net: &NetworkSpec,
    theta0: &[f64],
    psi0: &[f64],
    t_end: f64,
    dt_out: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let n = net.n;
    if theta0.len() != n || psi0.len() != n {
        return Err(Error::Config(format!("initial condition needs {n} phases and {n} isostables")));
    }
    let half = (raw.m / 2) as i64;
    // sparse spectra: (a, b, c) with c the coefficient of e^{i(a θ_i + b θ_j)}
    let mut terms: Vec<Vec<(i64, i64, Complex64)>> = Vec::with_capacity(6);
    let mut kmax = 0;
    for k in 0..6 {
        let scale = raw.spectra[k].iter().fold(0.0f64, |a, c| a.max(c.norm()));
        let mut list = Vec::new();
        for a in -(half - 1)..half {
            for b in -(half - 1)..half {
                let c = raw.coeff(k, a, b);
                if c.norm() > 1e-13 * scale.max(1e-300) {
                    kmax = kmax.max(a.unsigned_abs() as usize).max(b.unsigned_abs() as usize);
                    list.push((a, b, c));
                }
            }
        }
        terms.push(list);
    }
    let (omega, kappa, eps) = (raw.omega, raw.kappa, net.eps);
    let w = Weights::new(&net.w);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (th, ps) = y.split_at(n);
        let e = powers(th, kmax);
        let (s, t) = moments(&w, &e, ps);
        let pick = |m: &[Vec<Complex64>], p: i64, i: usize| if p >= 0 { m[p as usize][i] } else { m[(-p) as usize][i].conj() };
        for i in 0..n {
            let sum = |k: usize, m: &[Vec<Complex64>]| -> f64 {
                terms[k].iter().map(|&(a, b, c)| (c * pick(&e, a, i) * pick(m, b, i)).re).sum()
            };
            dy[i] = omega + eps * (sum(0, &s) + ps[i] * sum(1, &s) + sum(2, &t));
            dy[n + i] = kappa * ps[i] + eps * (sum(3, &s) + ps[i] * sum(4, &s) + sum(5, &t));
        }
    };
    let y0: Vec<f64> = theta0.iter().chain(psi0).copied().collect();
    let (times, states) = integrate(rhs, y0, t_end, dt_out, opts, 2 * n)?;
    Ok(Trajectory { meta: meta(SimMode::Unaveraged, "phase-isostable".into(), net, t_end, dt_out, opts), node_dim: 2, times, states })
}

/// The full network `ẋ_i = F(x_i) + ε Σ_j w_ij G(x_i, x_j)`.
pub fn simulate_full(model: &OscillatorModel, net: &NetworkSpec, x0: &[Vec<f64>], t_end: f64, dt_out: f64, opts: &SimOptions) -> Result<Trajectory> {
    let n = net.n;
    let d = model.dim();
    if x0.len() != n || x0.iter().any(|x| x.len() != d) {
        return Err(Error::Config(format!("initial condition needs {n} states of dimension {d}")));
    }
    let eps = net.eps;
    let w = Weights::new(&net.w);
    let lin = model.coupling.linear_matrix();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        for i in 0..n {
            model.field.eval(&y[i * d..(i + 1) * d], &mut dy[i * d..(i + 1) * d]);
        }
        if eps == 0.0 {
            return;
        }
        match &lin {
            Some(b) => {
                // Σ_j w_ij B(x_j - x_i) = B((Wx)_i - r_i x_i)
                let mut wx = vec![0.0; n * d];
                match &w {
                    Weights::Uniform(v) => {
                        let mut tot = vec![0.0; d];
                        for j in 0..n {
                            (0..d).for_each(|c| tot[c] += y[j * d + c]);
                        }
                        for i in 0..n {
                            (0..d).for_each(|c| wx[i * d + c] = v * tot[c]);
                        }
                    }
                    Weights::Dense(m) => {
                        for i in 0..n {
                            for j in 0..n {
                                let wij = m[(i, j)];
                                if wij != 0.0 {
                                    (0..d).for_each(|c| wx[i * d + c] += wij * y[j * d + c]);
                                }
                            }
                        }
                    }
                }
                for i in 0..n {
                    let r = w.row_sum(i, n);
                    for q in 0..d {
                        let g: f64 = (0..d).map(|c| b[(q, c)] * (wx[i * d + c] - r * y[i * d + c])).sum();
                        dy[i * d + q] += eps * g;
                    }
                }
            }
            None => {
                let mut g = vec![0.0; d];
                for i in 0..n {
                    for j in 0..n {
                        let wij = match &w {
                            Weights::Uniform(v) => *v,
                            Weights::Dense(m) => m[(i, j)],
                        };
                        if wij == 0.0 {
                            continue;
                        }
                        model.coupling.eval(&y[i * d..(i + 1) * d], &y[j * d..(j + 1) * d], &mut g);
                        (0..d).for_each(|q| dy[i * d + q] += eps * wij * g[q]);
                    }
                }
            }
        }
    };
    let y0: Vec<f64> = x0.iter().flatten().copied().collect();
    let (times, states) = integrate(rhs, y0, t_end, dt_out, opts, n * d)?;
    Ok(Trajectory { meta: meta(SimMode::Full, model.descriptor.model.clone(), net, t_end, dt_out, opts), node_dim: d, times, states })
}

const NEAR_PSI: f64 = 1e-3;

fn near_cycle(orbit: &PeriodicOrbit, resp: &ResponseSet, theta: f64, psi: f64) -> Vec<f64> {
    let (g1, g2) = (resp.g1.at(theta), resp.g2.at(theta));
    orbit.at(theta).iter().enumerate().map(|(q, x)| x + psi * g1[q] + psi * psi * g2[q]).collect()
}

/// `(θ, ψ)` of a point close to the cycle, from the second-order expansion
/// `x = x_γ(θ) + ψ g1(θ) + ψ² g2(θ)` solved by Gauss-Newton.
fn invert_near(orbit: &PeriodicOrbit, resp: &ResponseSet, x: &[f64]) -> (f64, f64) {
    let grid = orbit.theta_grid();
    let dist = |th: f64| orbit.at(th).iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut th = grid.iter().copied().min_by(|a, b| dist(*a).partial_cmp(&dist(*b)).unwrap()).unwrap_or(0.0);
    let i0 = resp.i0.at(th);
    let mut psi: f64 = i0.iter().zip(orbit.at(th)).zip(x).map(|((i, g), x)| i * (x - g)).sum();
    for _ in 0..50 {
        let r: Vec<f64> = near_cycle(orbit, resp, th, psi).iter().zip(x).map(|(a, b)| a - b).collect();
        let h = 1e-6;
        let dth: Vec<f64> = near_cycle(orbit, resp, th + h, psi).iter().zip(near_cycle(orbit, resp, th - h, psi)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let dps: Vec<f64> = near_cycle(orbit, resp, th, psi + h).iter().zip(near_cycle(orbit, resp, th, psi - h)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let (a11, a12, a22) = (dot(&dth, &dth), dot(&dth, &dps), dot(&dps, &dps));
        let (b1, b2) = (dot(&dth, &r), dot(&dps, &r));
        let det = a11 * a22 - a12 * a12;
        if det == 0.0 {
            break;
        }
        let (s1, s2) = ((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
        th -= s1;
        psi -= s2;
        if s1.abs() < 1e-15 && s2.abs() < 1e-15 {
            break;
        }
    }
    (th.rem_euclid(2.0 * PI), psi)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Asymptotic phase and isostable coordinate of an uncoupled node state.
/// The state is relaxed toward the cycle, read off there and mapped back
/// with `θ - ωt` and `ψ e^{-κt}`.
pub fn phase_isostable_of(model: &OscillatorModel, orbit: &PeriodicOrbit, resp: &ResponseSet, x: &[f64]) -> Result<(f64, f64)> {
    let ode = Dopri5::new(1e-12, 1e-12);
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| model.field.eval(y, dy);
    let mut y = x.to_vec();
    let mut t = 0.0;
    let t_max = 200.0 * orbit.period;
    loop {
        let (th, psi) = invert_near(orbit, resp, &y);
        if psi.abs() <= NEAR_PSI {
            return Ok(((th - orbit.omega * t).rem_euclid(2.0 * PI), psi * (-orbit.kappa * t).exp()));
        }
        if t >= t_max || !model.in_bounds(&y) {
            return Err(Error::Domain(format!("state {x:?} does not relax onto the cycle")));
        }
        y = ode.integrate(&mut f, t, &y, t + 0.25)?;
        t += 0.25;
    }
}

/// Node state with asymptotic phase `θ` and isostable coordinate `ψ`: a
/// point near the cycle with coordinates `(θ + ωt, ψ e^{κt})` integrated
/// backward for time `t`.
pub fn embed_phase_isostable(model: &OscillatorModel, orbit: &PeriodicOrbit, resp: &ResponseSet, theta: f64, psi: f64) -> Result<Vec<f64>> {
    let t = if psi.abs() > NEAR_PSI { (psi.abs() / NEAR_PSI).ln() / -orbit.kappa } else { 0.0 };
    let x = near_cycle(orbit, resp, theta + orbit.omega * t, psi * (orbit.kappa * t).exp());
    if t == 0.0 {
        return Ok(x);
    }
    let mut back = |_t: f64, y: &[f64], dy: &mut [f64]| {
        model.field.eval(y, dy);
        dy.iter_mut().for_each(|v| *v = -*v);
    };
    let y = Dopri5::new(1e-12, 1e-12).integrate(&mut back, 0.0, &x, t)?;
    if !model.in_bounds(&y) {
        return Err(Error::Domain(format!("(θ, ψ) = ({theta}, {psi}) lies outside the basin")));
    }
    Ok(y)
}

/// Phases and isostables drawn uniformly from the given ranges.
pub fn random_box(n: usize, theta: (f64, f64), psi: (f64, f64), seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |(a, b): (f64, f64)| if b > a { rng.gen_range(a..b) } else { a };
    let th: Vec<f64> = (0..n).map(|_| draw(theta)).collect();
    let ps: Vec<f64> = (0..n).map(|_| draw(psi)).collect();
    (th, ps)
}

/// Kuramoto order parameter `R e^{iΘ}` at sample `k`, as `(R, Θ)`.
pub fn order_parameter(traj: &Trajectory, k: usize) -> Result<(f64, f64)> {
    if !traj.is_reduced() {
        return Err(Error::Config("order parameter needs a phase-isostable trajectory".into()));
    }
    let z: Complex64 = traj.theta_unwrapped(k).iter().map(|&t| Complex64::from_polar(1.0, t)).sum::<Complex64>() / traj.n() as f64;
    Ok((z.norm(), z.arg()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterClass {
    Synchrony,
    Splay,
    /// `M` clusters.
    Clusters(usize),
    Incoherent,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterSummary {
    /// Node indices, largest cluster first.
    pub clusters: Vec<Vec<usize>>,
    /// Circular mean phase of each cluster relative to node 0.
    pub phases: Vec<f64>,
    /// Mean isostable value of each cluster (reduced runs only).
    pub psi: Vec<Option<f64>>,
    /// Phase of each cluster relative to the first, in `[0, 2π)`.
    pub gaps: Vec<f64>,
    pub class: ClusterClass,
}

impl ClusterSummary {
    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Relative phase of every node to node 0, from upward threshold crossings
/// of the first state component over the window.
fn spike_phases(traj: &Trajectory, k0: usize, k1: usize) -> Vec<f64> {
    let n = traj.n();
    let count = (k1 - k0 + 1) as f64;
    let thr = (k0..=k1).map(|k| (0..n).map(|i| traj.node(k, i)[0]).sum::<f64>() / n as f64).sum::<f64>() / count;
    let spikes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut out = Vec::new();
            for k in k0..k1 {
                let (a, b) = (traj.node(k, i)[0] - thr, traj.node(k + 1, i)[0] - thr);
                if a < 0.0 && b >= 0.0 {
                    let s = a / (a - b);
                    out.push(traj.times[k] + s * (traj.times[k + 1] - traj.times[k]));
                }
            }
            out
        })
        .collect();
    let reference = &spikes[0];
    (0..n)
        .map(|i| {
            let mut z = Complex64::new(0.0, 0.0);
            for win in reference.windows(2) {
                let (s, e) = (win[0], win[1]);
                if let Some(&t) = spikes[i].iter().find(|&&t| t >= s && t < e) {
                    z += Complex64::from_polar(1.0, -2.0 * PI * (t - s) / (e - s));
                }
            }
            if z.norm() == 0.0 {
                f64::NAN
            } else {
                z.arg().rem_euclid(2.0 * PI)
            }
        })
        .collect()
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = i;
    while parent[c] != r {
        let next = parent[c];
        parent[c] = r;
        c = next;
    }
    r
}

/// Group nodes by window-averaged phase difference and isostable value.
pub fn detect_clusters(traj: &Trajectory, window: (f64, f64), tol_phase: f64, tol_psi: f64) -> ClusterSummary {
    let n = traj.n();
    let k0 = traj.index_at(window.0.min(window.1));
    let k1 = traj.index_at(window.0.max(window.1)).max(k0);
    let (phase, psi): (Vec<f64>, Vec<Option<f64>>) = if traj.is_reduced() {
        let count = (k1 - k0 + 1) as f64;
        let ph = (0..n)
            .map(|i| {
                let z: Complex64 = (k0..=k1)
                    .map(|k| {
                        let t = traj.theta_unwrapped(k);
                        Complex64::from_polar(1.0, t[i] - t[0])
                    })
                    .sum();
                z.arg().rem_euclid(2.0 * PI)
            })
            .collect();
        let ps = (0..n).map(|i| Some((k0..=k1).map(|k| traj.psi(k)[i]).sum::<f64>() / count)).collect();
        (ph, ps)
    } else if k1 > k0 {
        (spike_phases(traj, k0, k1), vec![None; n])
    } else {
        (vec![f64::NAN; n], vec![None; n])
    };
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let close_phase = circ_dist(phase[i], phase[j]) < tol_phase;
            let close_psi = match (psi[i], psi[j]) {
                (Some(a), Some(b)) => (a - b).abs() < tol_psi,
                _ => true,
            };
            if close_phase && close_psi {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_of[r]].push(i);
    }
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let phases: Vec<f64> = groups
        .iter()
        .map(|g| {
            let z: Complex64 = g.iter().filter(|&&i| phase[i].is_finite()).map(|&i| Complex64::from_polar(1.0, phase[i])).sum();
            if z.norm() == 0.0 {
                f64::NAN
            } else {
                z.arg().rem_euclid(2.0 * PI)
            }
        })
        .collect();
    let cpsi: Vec<Option<f64>> = groups
        .iter()
        .map(|g| {
            let vals: Option<Vec<f64>> = g.iter().map(|&i| psi[i]).collect();
            vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    let gaps: Vec<f64> = phases.iter().map(|p| (p - phases[0]).rem_euclid(2.0 * PI)).collect();
    let m = groups.len();
    let spaced = {
        let mut g = gaps.clone();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        (0..m).all(|k| circ_dist(g[k], 2.0 * PI * k as f64 / m as f64) < tol_phase)
    };
    let class = if phase.iter().any(|p| !p.is_finite()) {
        ClusterClass::Incoherent
    } else if m == 1 {
        ClusterClass::Synchrony
    } else if m == n {
        if spaced {
            ClusterClass::Splay
        } else {
            ClusterClass::Incoherent
        }
    } else {
        ClusterClass::Clusters(m)
    };
    ClusterSummary { clusters: groups, phases, psi: cpsi, gaps, class }
}
