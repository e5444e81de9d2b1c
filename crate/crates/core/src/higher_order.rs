//! Higher-order phase reduction: the filtered kernels `q1..q3`, the averaged
//! non-pairwise functions `H̄1..H̄8`, and stability of locked states under the
//! second and third order truncations.
//!
//! Multivariate trigonometric polynomials are stored sparsely as maps from
//! mode vectors over the four phases `(θ_i, θ_j, θ_k, θ_l)` to coefficients.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::RawKernelSet;
use crate::linalg::eigen::eigenvalues;
use crate::linalg::poly::Poly;
use crate::locked::StabilityReport;

pub type Mode = [i32; 4];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const COEFF_TOL: f64 = 1e-9;
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Sparse trigonometric polynomial `Σ c_m e^{i m·θ}` in up to four phases.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trig {
    pub terms: BTreeMap<Mode, Complex64>,
}

impl Trig {
    pub fn constant(c: f64) -> Self {
        let mut t = Self::default();
        t.add_term([0; 4], Complex64::new(c, 0.0));
        t
    }

    pub fn add_term(&mut self, m: Mode, c: Complex64) {
        *self.terms.entry(m).or_insert(ZERO) += c;
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Kernel `k` (0-based) of `raw` in slots 0 and 1, keeping `|a|, |b| ≤ kmax`
    /// and dropping coefficients below `tol` times the largest.
    pub fn from_kernel(raw: &RawKernelSet, k: usize, kmax: usize, tol: f64) -> Self {
        let kmax = kmax.min(raw.m / 2 - 1) as i64;
        let mut all = Vec::new();
        for a in -kmax..=kmax {
            for b in -kmax..=kmax {
                all.push(([a as i32, b as i32, 0, 0], raw.coeff(k, a, b)));
            }
        }
        let max = all.iter().fold(0.0f64, |x, (_, c)| x.max(c.norm()));
        let mut t = Self::default();
        if max == 0.0 {
            return t;
        }
        for (m, c) in all {
            if c.norm() > tol * max {
                t.add_term(m, c);
            }
        }
        t
    }

    /// Substitute variables: slot `s` of `self` becomes slot `to[s]`.
    pub fn place(&self, to: &[usize]) -> Self {
        let mut t = Self::default();
        for (m, c) in &self.terms {
            let mut out = [0; 4];
            for (s, &d) in to.iter().enumerate() {
                out[d] += m[s];
            }
            debug_assert!(m[to.len()..].iter().all(|&x| x == 0));
            t.add_term(out, *c);
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut t = Self::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                t.add_term([ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2], ma[3] + mb[3]], ca * cb);
            }
        }
        t
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut t = self.clone();
        for (m, c) in &o.terms {
            t.add_term(*m, *c);
        }
        t
    }

    /// `∫_0^∞ e^{κs} f(θ - ωs) ds` with every phase retarded together.
    pub fn filter(&self, omega: f64, kappa: f64) -> Result<Self> {
        if kappa >= 0.0 {
            return Err(Error::UnsupportedSpectrum(format!("exponential filter needs κ < 0, got {kappa}")));
        }
        let mut t = Self::default();
        for (m, c) in &self.terms {
            let total: i32 = m.iter().sum();
            t.add_term(*m, c / Complex64::new(-kappa, total as f64 * omega));
        }
        Ok(t)
    }

    pub fn eval_complex(&self, th: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let arg: f64 = th.iter().enumerate().map(|(s, x)| m[s] as f64 * x).sum();
                c * Complex64::from_polar(1.0, arg)
            })
            .sum()
    }

    pub fn eval(&self, th: &[f64]) -> f64 {
        self.eval_complex(th).re
    }

    /// `(1/2π)∫ f(u, u+χ, u+η, u+ξ) du`.
    pub fn average(&self) -> Hbar {
        let mut h = Hbar::default();
        for (m, c) in &self.terms {
            if m.iter().sum::<i32>() == 0 {
                h.add_term([m[1], m[2], m[3]], *c);
            }
        }
        h
    }

    /// Average of the product `self * o` without forming the product.
    pub fn mul_average(&self, o: &Self) -> Hbar {
        let mut by_sum: BTreeMap<i32, Vec<(&Mode, &Complex64)>> = BTreeMap::new();
        for (m, c) in &o.terms {
            by_sum.entry(m.iter().sum()).or_default().push((m, c));
        }
        let mut h = Hbar::default();
        for (ma, ca) in &self.terms {
            let need = -ma.iter().sum::<i32>();
            if let Some(list) = by_sum.get(&need) {
                for (mb, cb) in list {
                    h.add_term([ma[1] + mb[1], ma[2] + mb[2], ma[3] + mb[3]], ca * *cb);
                }
            }
        }
        h
    }
}

/// Averaged function of the phase differences `(χ, η, ξ)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Hbar {
    pub terms: BTreeMap<[i32; 3], Complex64>,
}

impl Hbar {
    fn add_term(&mut self, m: [i32; 3], c: Complex64) {
        *self.terms.entry(m).or_insert(ZERO) += c;
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut t = self.clone();
        for (m, c) in &o.terms {
            t.add_term(*m, *c);
        }
        t
    }

    /// Number of arguments the function actually depends on.
    pub fn arity(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.iter().rposition(|&x| x != 0).map_or(0, |p| p + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        let mut s = ZERO;
        for (m, c) in &self.terms {
            let arg: f64 = args.iter().enumerate().map(|(r, x)| m[r] as f64 * x).sum();
            s += c * Complex64::from_polar(1.0, arg);
        }
        s.re
    }

    /// Partial derivatives with respect to each argument.
    pub fn grad(&self, args: &[f64]) -> [f64; 3] {
        let mut g = [ZERO; 3];
        for (m, c) in &self.terms {
            let arg: f64 = args.iter().enumerate().map(|(r, x)| m[r] as f64 * x).sum();
            let e = c * Complex64::from_polar(1.0, arg) * I;
            for r in 0..3 {
                g[r] += e * m[r] as f64;
            }
        }
        [g[0].re, g[1].re, g[2].re]
    }

    pub fn max_mode(&self) -> usize {
        self.terms.keys().flat_map(|m| m.iter().map(|x| x.unsigned_abs() as usize)).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct HigherOrderOptions {
    /// Largest mode kept per argument of each raw kernel.
    pub kmax: usize,
    /// Relative magnitude below which raw kernel modes are dropped.
    pub tol: f64,
}

impl Default for HigherOrderOptions {
    fn default() -> Self {
        Self { kmax: 8, tol: 1e-12 }
    }
}

/// `q1(θ_i, θ_k)`, `q2, q3(θ_i, θ_k, θ_l)` and `H̄1..H̄8`.
#[derive(Clone, Debug)]
pub struct HigherOrderKernels {
    pub omega: f64,
    pub kappa: f64,
    /// Raw kernels `h_1..h_9` in slots 0 and 1.
    pub h: Vec<Trig>,
    pub q1: Trig,
    pub q2: Trig,
    pub q3: Trig,
    /// `hbar[m - 1] = H̄_m`.
    pub hbar: Vec<Hbar>,
}

/// Filtered kernels only; `hbar` is left empty.
pub fn compute_q_kernels(raw: &RawKernelSet, opts: &HigherOrderOptions) -> Result<HigherOrderKernels> {
    let (omega, kappa) = (raw.omega, raw.kappa);
    let h: Vec<Trig> = (0..raw.spectra.len()).map(|k| Trig::from_kernel(raw, k, opts.kmax, opts.tol)).collect();
    let q1 = h[3].filter(omega, kappa)?;
    // q2: q1(θ_i, θ_l) h5(θ_i, θ_k); q3: q1(θ_k, θ_l) h6(θ_i, θ_k), in slots (i, k, l) = (0, 1, 2)
    let q2 = q1.place(&[0, 2]).mul(&h[4]).filter(omega, kappa)?;
    let q3 = q1.place(&[1, 2]).mul(&h[5]).filter(omega, kappa)?;
    Ok(HigherOrderKernels { omega, kappa, h, q1, q2, q3, hbar: Vec::new() })
}

/// Assemble `h̄1..h̄8` in slots `(i, j, k, l) = (0, 1, 2, 3)` and average them.
pub fn compute_hbar(mut q: HigherOrderKernels) -> HigherOrderKernels {
    let h = &q.h;
    let q1 = |a: usize, b: usize| q.q1.place(&[a, b]);
    let q2 = |a: usize, b: usize, c: usize| q.q2.place(&[a, b, c]);
    let q3 = |a: usize, b: usize, c: usize| q.q3.place(&[a, b, c]);
    let (h2, h3, h7, h8, h9) = (&h[1], &h[2], &h[6], &h[7], &h[8]);
    let hbar = vec![
        h[0].average(),
        q1(0, 2).mul_average(h2),
        q1(1, 2).mul_average(h3),
        q2(0, 2, 3).mul_average(h2).add(&q1(0, 2).mul(&q1(0, 3)).mul_average(h7)),
        q3(0, 2, 3).mul_average(h2),
        q2(1, 2, 3).mul_average(h3).add(&q1(1, 2).mul(&q1(1, 3)).mul_average(h8)),
        q3(1, 2, 3).mul_average(h3),
        q1(0, 2).mul(&q1(1, 3)).mul_average(h9),
    ];
    q.hbar = hbar;
    q
}

pub fn higher_order_kernels(raw: &RawKernelSet, opts: &HigherOrderOptions) -> Result<HigherOrderKernels> {
    Ok(compute_hbar(compute_q_kernels(raw, opts)?))
}

impl HigherOrderKernels {
    /// `G_1 = H̄1`, `G_2 = H̄2 + H̄3`, `G_3 = H̄4 + ... + H̄8`: with uniform
    /// weights every order collapses to a single function.
    pub fn orders(&self) -> [Hbar; 3] {
        let sum = |r: std::ops::Range<usize>| r.fold(Hbar::default(), |acc, m| acc.add(&self.hbar[m]));
        [sum(0..1), sum(1..3), sum(3..8)]
    }

    /// Time-domain value of `q1` by direct quadrature, for cross-checks.
    pub fn q1_quadrature(&self, ti: f64, tk: f64, steps: usize) -> f64 {
        let h4 = &self.h[3];
        retarded_quadrature(self.kappa, steps, |s| h4.eval(&[ti - self.omega * s, tk - self.omega * s]))
    }

    /// Time-domain `q2`, with the inner `q1` taken from the spectral form.
    pub fn q2_quadrature(&self, ti: f64, tk: f64, tl: f64, steps: usize) -> f64 {
        let w = self.omega;
        retarded_quadrature(self.kappa, steps, |s| {
            self.q1.eval(&[ti - w * s, tl - w * s]) * self.h[4].eval(&[ti - w * s, tk - w * s])
        })
    }

    /// Time-domain `q3`, with the inner `q1` taken from the spectral form.
    pub fn q3_quadrature(&self, ti: f64, tk: f64, tl: f64, steps: usize) -> f64 {
        let w = self.omega;
        retarded_quadrature(self.kappa, steps, |s| {
            self.q1.eval(&[tk - w * s, tl - w * s]) * self.h[5].eval(&[ti - w * s, tk - w * s])
        })
    }
}

/// Composite Simpson rule for `∫_0^S e^{κs} f(s) ds` with `e^{κS} = 1e-14`.
fn retarded_quadrature(kappa: f64, steps: usize, f: impl Fn(f64) -> f64) -> f64 {
    let s_end = 14.0 * std::f64::consts::LN_10 / -kappa;
    let n = steps + steps % 2;
    let dx = s_end / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let s = k as f64 * dx;
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * (kappa * s).exp() * f(s);
    }
    acc * dx / 3.0
}

/// Per-order pieces of the vector field and Jacobian of the higher-order
/// phase equations with global coupling `w_ij = 1/N`.
pub struct HopNetwork<'a> {
    pub omega: f64,
    pub g: [&'a Hbar; 3],
}

impl<'a> HopNetwork<'a> {
    pub fn new(omega: f64, g: &'a [Hbar; 3]) -> Self {
        Self { omega, g: [&g[0], &g[1], &g[2]] }
    }

    fn sums(theta: &[f64], kmax: i32) -> BTreeMap<i32, Complex64> {
        (-kmax..=kmax).map(|a| (a, theta.iter().map(|&t| Complex64::from_polar(1.0, a as f64 * t)).sum())).collect()
    }

    /// `dθ_i/dt - ω` split by order: `out[o][i]` multiplies `ε^{o+1}`.
    pub fn rhs_terms(&self, theta: &[f64]) -> [Vec<f64>; 3] {
        let n = theta.len();
        let kmax = self.g.iter().map(|g| g.max_mode()).max().unwrap_or(0) as i32;
        let s = Self::sums(theta, 3 * kmax);
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (o, g) in self.g.iter().enumerate() {
            let norm = (n as f64).powi(o as i32 + 1);
            for (m, c) in &g.terms {
                let prod = (0..=o).fold(Complex64::new(1.0, 0.0), |p, r| p * s[&m[r]]);
                let total: i32 = m.iter().sum();
                for i in 0..n {
                    out[o][i] += (c * prod * Complex64::from_polar(1.0, -total as f64 * theta[i])).re / norm;
                }
            }
        }
        out
    }

    /// Row `i` of each order's Jacobian.
    fn jacobian_row(&self, s: &BTreeMap<i32, Complex64>, theta: &[f64], i: usize) -> [Vec<f64>; 3] {
        let n = theta.len();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (o, g) in self.g.iter().enumerate() {
            let norm = (n as f64).powi(o as i32 + 1);
            for (m, c) in &g.terms {
                let total: i32 = m.iter().sum();
                let ei = c * Complex64::from_polar(1.0, -total as f64 * theta[i]);
                let full = (0..=o).fold(Complex64::new(1.0, 0.0), |p, r| p * s[&m[r]]);
                // products of the moment sums with one factor left out
                let partial: Vec<Complex64> =
                    (0..=o).map(|r| (0..=o).filter(|&q| q != r).fold(Complex64::new(1.0, 0.0), |p, q| p * s[&m[q]])).collect();
                out[o][i] += (ei * full * (-I * total as f64)).re / norm;
                for p in 0..n {
                    let mut d = ZERO;
                    for r in 0..=o {
                        d += partial[r] * I * m[r] as f64 * Complex64::from_polar(1.0, m[r] as f64 * theta[p]);
                    }
                    out[o][p] += (ei * d).re / norm;
                }
            }
        }
        out
    }

    fn moment_sums(&self, theta: &[f64]) -> BTreeMap<i32, Complex64> {
        let kmax = self.g.iter().map(|g| g.max_mode()).max().unwrap_or(0) as i32;
        Self::sums(theta, 3 * kmax)
    }

    /// Jacobian split by order, `J(ε) = Σ_o ε^{o+1} J_o`.
    pub fn jacobian_terms(&self, theta: &[f64]) -> [DMatrix<f64>; 3] {
        let n = theta.len();
        let s = self.moment_sums(theta);
        let mut out = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
        for i in 0..n {
            let row = self.jacobian_row(&s, theta, i);
            for o in 0..3 {
                for p in 0..n {
                    out[o][(i, p)] = row[o][p];
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HopState {
    Synchrony,
    /// `θ_i = 2πi/N`.
    Splay,
    /// `(0, π)` for two nodes.
    Antisynchrony,
}

/// Stability spectrum of a locked state as polynomials in `ε`.
#[derive(Clone, Debug, Serialize)]
pub struct HopSpectrum {
    pub state: HopState,
    pub n: usize,
    /// One entry per mode `p`: ascending ε-coefficients `[0, c1, c2, c3]`.
    pub modes: Vec<(usize, [Complex64; 4])>,
}

impl HopSpectrum {
    pub fn eigenvalues(&self, eps: f64, order: usize) -> Vec<Complex64> {
        self.modes
            .iter()
            .map(|(_, c)| (1..=order.min(3)).map(|k| c[k] * eps.powi(k as i32)).sum())
            .collect()
    }

    /// Real roots of `Re λ_p(ε) / ε` over every non-rotational mode, sorted and deduplicated.
    pub fn boundaries(&self, order: usize) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (p, c) in &self.modes {
            if *p == 0 {
                continue;
            }
            let mut coeffs: Vec<f64> = (1..=order.min(3)).map(|k| c[k].re).collect();
            let scale = coeffs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if scale < 1e-13 {
                continue;
            }
            // coefficients at the level of the reduction error are structural zeros
            for x in coeffs.iter_mut() {
                if x.abs() < COEFF_TOL * scale {
                    *x = 0.0;
                }
            }
            let poly = Poly::new(&coeffs);
            out.extend(poly.real_roots(1e-9)?);
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
        Ok(out)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Config("higher-order stability needs N >= 2".into()));
    }
    Ok(())
}

/// Spectrum of a symmetric locked state under the higher-order phase equations.
pub fn hop_spectrum(q: &HigherOrderKernels, state: HopState, n: usize) -> Result<HopSpectrum> {
    check_n(n)?;
    let g = q.orders();
    let net = HopNetwork::new(q.omega, &g);
    let modes = match state {
        HopState::Synchrony => {
            // J = -ξ L with L the global Laplacian: eigenvalue -ξ, N - 1 times
            let mut xi = [Complex64::new(0.0, 0.0); 4];
            for (o, go) in g.iter().enumerate() {
                let d = go.grad(&[0.0; 3]);
                xi[o + 1] = Complex64::new(-(d[0] + d[1] + d[2]), 0.0);
            }
            let mut v = vec![(0usize, [ZERO; 4])];
            v.extend((1..n).map(|p| (p, xi)));
            v
        }
        HopState::Splay => {
            let theta: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
            let row0 = net.jacobian_row(&net.moment_sums(&theta), &theta, 0);
            (0..n)
                .map(|p| {
                    let mut c = [ZERO; 4];
                    for (o, row) in row0.iter().enumerate() {
                        c[o + 1] = row.iter().enumerate().map(|(j, a)| a * Complex64::from_polar(1.0, 2.0 * PI * (j * p) as f64 / n as f64)).sum();
                    }
                    (p, c)
                })
                .collect()
        }
        HopState::Antisynchrony => {
            if n != 2 {
                return Err(Error::Config("antisynchrony is a two-node state".into()));
            }
            let j = net.jacobian_terms(&[0.0, PI]);
            // one zero eigenvalue, so the other is the trace
            let mut c = [ZERO; 4];
            for (o, m) in j.iter().enumerate() {
                c[o + 1] = Complex64::new(m.trace(), 0.0);
            }
            vec![(0, [ZERO; 4]), (1, c)]
        }
    };
    Ok(HopSpectrum { state, n, modes })
}

/// Stability report for `state` at coupling `eps`, truncated at `order` (1, 2 or 3).
pub fn hop_stability(q: &HigherOrderKernels, state: HopState, order: usize, n: usize, eps: f64) -> Result<StabilityReport> {
    if !(1..=3).contains(&order) {
        return Err(Error::Order(order));
    }
    let spec = hop_spectrum(q, state, n)?;
    let eigs = spec.eigenvalues(eps, order);
    StabilityReport::from_eigenvalues(eigs, None)
}

/// Eigenvalues of the full `N x N` Jacobian at arbitrary phases, for cross-checks.
pub fn hop_jacobian_eigenvalues(q: &HigherOrderKernels, theta: &[f64], order: usize, eps: f64) -> Result<Vec<Complex64>> {
    check_n(theta.len())?;
    let g = q.orders();
    let net = HopNetwork::new(q.omega, &g);
    let terms = net.jacobian_terms(theta);
    let mut j = DMatrix::zeros(theta.len(), theta.len());
    for (o, t) in terms.iter().enumerate().take(order) {
        j += t * eps.powi(o as i32 + 1);
    }
    eigenvalues(&j)
}
