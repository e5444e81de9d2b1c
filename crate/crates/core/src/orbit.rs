//! Periodic orbits by Newton iteration on a Poincaré return map.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{grid, FourierSeries, PeriodicVectorFunction};
use crate::linalg::eigen::{eigenvalues, real_null_vector};
use crate::model::{Anchor, OscillatorModel};
use crate::ode::{Control, Dopri5, Step};

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    /// Samples per period on the uniform phase grid.
    pub m: usize,
    /// Closure tolerance `|φ_T(x0) - x0|` for the Newton iteration.
    pub tol: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_newton: usize,
    /// Periods of free integration before the search starts.
    pub transient_periods: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { m: 512, tol: 1e-10, rtol: 1e-11, atol: 1e-12, max_newton: 50, transient_periods: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub period: f64,
    pub omega: f64,
    /// States at `θ_j = 2πj/M`, with `θ = 0` on the section.
    pub samples: Vec<Vec<f64>>,
    pub series: PeriodicVectorFunction,
    pub monodromy: DMatrix<f64>,
    /// Floquet multipliers, trivial one first, the rest by decreasing modulus.
    pub multipliers: Vec<Complex64>,
    /// `ln|λ_j| / T` in the same order as `multipliers`.
    pub exponents: Vec<f64>,
    pub kappa: f64,
    /// Right eigenvector of the slowest decaying multiplier, unit length.
    pub v: Vec<f64>,
    /// Matching left eigenvector with `w·v = 1`.
    pub w: Vec<f64>,
    pub newton_iterations: usize,
    pub closure: f64,
    pub resolution_warning: Option<String>,
}

#[derive(Serialize)]
struct OrbitMeta<'a> {
    period: f64,
    omega: f64,
    kappa: f64,
    exponents: &'a [f64],
    multipliers_re: Vec<f64>,
    multipliers_im: Vec<f64>,
    samples: usize,
    newton_iterations: usize,
    closure: f64,
}

impl PeriodicOrbit {
    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn m(&self) -> usize {
        self.samples.len()
    }

    pub fn theta_grid(&self) -> Vec<f64> {
        grid(self.m())
    }

    /// Orbit point at arbitrary phase from the Fourier interpolant.
    pub fn at(&self, theta: f64) -> Vec<f64> {
        self.series.eval(theta)
    }

    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut s = String::from("theta");
        for c in 0..n {
            s.push_str(&format!(",x{}", c + 1));
        }
        s.push('\n');
        for (t, x) in self.theta_grid().iter().zip(&self.samples) {
            s.push_str(&format!("{t:.12e}"));
            for v in x {
                s.push_str(&format!(",{v:.15e}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::to_value(OrbitMeta {
            period: self.period,
            omega: self.omega,
            kappa: self.kappa,
            exponents: &self.exponents,
            multipliers_re: self.multipliers.iter().map(|z| z.re).collect(),
            multipliers_im: self.multipliers.iter().map(|z| z.im).collect(),
            samples: self.m(),
            newton_iterations: self.newton_iterations,
            closure: self.closure,
        })
        .expect("serialisable")
    }
}

struct Section {
    normal: Vec<f64>,
    point: Vec<f64>,
}

impl Section {
    fn g(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).zip(&self.point).map(|((n, a), b)| n * (a - b)).sum()
    }
}

struct Return {
    x: Vec<f64>,
    time: f64,
    phi: DMatrix<f64>,
}

fn variational_rhs<'a>(model: &'a OscillatorModel) -> impl FnMut(f64, &[f64], &mut [f64]) + 'a {
    let n = model.dim();
    move |_t, y, dy| {
        model.field.eval(&y[..n], &mut dy[..n]);
        let j = model.field.jacobian(&y[..n]);
        for c in 0..n {
            for r in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += j[(r, k)] * y[n + c * n + k];
                }
                dy[n + c * n + r] = s;
            }
        }
    }
}

fn with_identity(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = x.to_vec();
    y.resize(n + n * n, 0.0);
    for i in 0..n {
        y[n + i * n + i] = 1.0;
    }
    y
}

/// Integrate from `x0` (on the section) to the next upward crossing.
fn return_map(model: &OscillatorModel, sec: &Section, x0: &[f64], t_guess: f64, solver: &Dopri5, variational: bool) -> Result<Return> {
    let n = model.dim();
    let mut y = if variational { with_identity(x0) } else { x0.to_vec() };
    let mut rhs_var = variational_rhs(model);
    let mut rhs_plain = |_t: f64, y: &[f64], dy: &mut [f64]| model.field.eval(y, dy);
    let mut seen_negative = false;
    let mut hit: Option<(f64, f64, Vec<f64>)> = None;
    let mut domain_error = None;
    let mut buf = vec![0.0; y.len()];
    let mut observer = |s: &Step| {
        if !model.in_bounds(&s.y1[..n]) {
            domain_error = Some(s.t1);
            return Control::Stop;
        }
        let g1 = sec.g(&s.y1[..n]);
        if g1 < 0.0 {
            seen_negative = true;
            return Control::Continue;
        }
        if seen_negative && sec.g(&s.y0[..n]) < 0.0 {
            // bracketed crossing: bisect on the dense output
            let (mut a, mut b) = (s.t0, s.t1);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                s.eval(mid, &mut buf);
                if sec.g(&buf[..n]) < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-15 * b.abs().max(1.0) {
                    break;
                }
            }
            hit = Some((s.t0, 0.5 * (a + b), s.y0.to_vec()));
            return Control::Stop;
        }
        Control::Continue
    };
    let t_max = 20.0 * t_guess;
    if variational {
        solver.integrate_observed(&mut rhs_var, 0.0, &mut y, t_max, &mut observer)?;
    } else {
        solver.integrate_observed(&mut rhs_plain, 0.0, &mut y, t_max, &mut observer)?;
    }
    if let Some(t) = domain_error {
        return Err(Error::Domain(format!("orbit search left the bounding box at t = {t:.4}")));
    }
    let (t_start, mut t_hit, y_start) = hit.ok_or(Error::NonConvergence { iterations: 0, residual: f64::NAN })?;
    // refine by integrating exactly to the crossing, then Newton in time
    let mut state = if variational {
        solver.integrate(&mut rhs_var, t_start, &y_start, t_hit)?
    } else {
        solver.integrate(&mut rhs_plain, t_start, &y_start, t_hit)?
    };
    for _ in 0..3 {
        let mut f = vec![0.0; n];
        model.field.eval(&state[..n], &mut f);
        let gdot: f64 = sec.normal.iter().zip(&f).map(|(a, b)| a * b).sum();
        let dt = -sec.g(&state[..n]) / gdot;
        if dt.abs() < 1e-16 * t_hit {
            break;
        }
        state = if variational {
            solver.integrate(&mut rhs_var, t_hit, &state, t_hit + dt)?
        } else {
            solver.integrate(&mut rhs_plain, t_hit, &state, t_hit + dt)?
        };
        t_hit += dt;
    }
    let phi = if variational { DMatrix::from_column_slice(n, n, &state[n..]) } else { DMatrix::identity(n, n) };
    state.truncate(n);
    Ok(Return { x: state, time: t_hit, phi })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Orthonormal basis of the hyperplane orthogonal to `normal`.
fn tangent_basis(normal: &[f64]) -> DMatrix<f64> {
    let n = normal.len();
    let nv = DVector::from_column_slice(normal);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for e in 0..n {
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        v -= &nv * nv.dot(&v);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        if v.norm() > 1e-8 {
            v /= v.norm();
            basis.push(v);
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    DMatrix::from_columns(&basis)
}

/// Locate the attracting periodic orbit through the basin point `guess`.
pub fn find_periodic_orbit(model: &OscillatorModel, guess: &[f64], t_guess: f64, opts: &OrbitOptions) -> Result<PeriodicOrbit> {
    match model.anchor {
        Anchor::Flow => solve_orbit(model, guess, t_guess, opts, None),
        Anchor::Crossing { index, value } => solve_orbit(model, guess, t_guess, opts, Some((index, value))),
        Anchor::Peak { index } => {
            let first = solve_orbit(model, guess, t_guess, opts, None)?;
            let peak = first.at(peak_phase(&first, index));
            let again = OrbitOptions { transient_periods: 0.0, ..opts.clone() };
            solve_orbit(model, &peak, first.period, &again, None)
        }
    }
}

/// Phase of the maximum of component `index`, polished by Newton on the
/// Fourier interpolant.
pub fn peak_phase(orbit: &PeriodicOrbit, index: usize) -> f64 {
    let xs: Vec<f64> = orbit.samples.iter().map(|x| x[index]).collect();
    let k = xs.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).map(|(k, _)| k).unwrap_or(0);
    let d1 = FourierSeries::from_samples(&xs).derivative();
    let d2 = d1.derivative();
    let mut th = 2.0 * PI * k as f64 / xs.len() as f64;
    for _ in 0..20 {
        let step = d1.eval(th) / d2.eval(th);
        th -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    th.rem_euclid(2.0 * PI)
}

fn solve_orbit(model: &OscillatorModel, guess: &[f64], t_guess: f64, opts: &OrbitOptions, crossing: Option<(usize, f64)>) -> Result<PeriodicOrbit> {
    let n = model.dim();
    if guess.len() != n || guess.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("orbit guess must be a finite state of the model dimension".into()));
    }
    if !(t_guess > 0.0 && t_guess.is_finite()) {
        return Err(Error::Config("period guess must be positive".into()));
    }
    if opts.m < 8 || !opts.m.is_multiple_of(2) {
        return Err(Error::Config("sample count must be even and at least 8".into()));
    }
    if !model.in_bounds(guess) {
        return Err(Error::Domain(format!("guess {guess:?} outside the bounding box")));
    }
    let solver = Dopri5::new(opts.rtol, opts.atol);
    let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| model.field.eval(y, dy);
    let mut start = guess.to_vec();
    if opts.transient_periods > 0.0 {
        start = solver.integrate(&mut rhs, 0.0, &start, opts.transient_periods * t_guess)?;
    }
    let section = match crossing {
        Some((idx, value)) => {
            let mut normal = vec![0.0; n];
            normal[idx] = 1.0;
            let mut point = start.clone();
            point[idx] = value;
            Section { normal, point }
        }
        None => {
            let mut f = vec![0.0; n];
            model.field.eval(&start, &mut f);
            let nf = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nf < 1e-12 {
                return Err(Error::Config("guess is an equilibrium".into()));
            }
            Section { normal: f.iter().map(|v| v / nf).collect(), point: start.clone() }
        }
    };
    let mut f0 = vec![0.0; n];
    model.field.eval(&start, &mut f0);
    let on_section = section.g(&start).abs() < 1e-13 && section.normal.iter().zip(&f0).map(|(a, b)| a * b).sum::<f64>() > 0.0;
    let mut x0 = if on_section {
        start.clone()
    } else {
        // flow onto the section first; a downward-then-upward crossing is required
        let mut sec_probe = return_map(model, &section, &start, t_guess, &solver, false);
        if sec_probe.is_err() {
            let later = solver.integrate(&mut rhs, 0.0, &start, 0.5 * t_guess)?;
            sec_probe = return_map(model, &section, &later, t_guess, &solver, false);
        }
        sec_probe?.x
    };

    let basis = tangent_basis(&section.normal);
    let mut iterations = 0;
    let mut ret = return_map(model, &section, &x0, t_guess, &solver, true)?;
    let mut residual = dist(&ret.x, &x0);
    while residual > opts.tol {
        if iterations >= opts.max_newton {
            return Err(Error::NonConvergence { iterations, residual });
        }
        iterations += 1;
        let mut fx = vec![0.0; n];
        model.field.eval(&ret.x, &mut fx);
        let fxv = DVector::from_column_slice(&fx);
        let nv = DVector::from_column_slice(&section.normal);
        let proj = DMatrix::identity(n, n) - &fxv * nv.transpose() / nv.dot(&fxv);
        let dp = basis.transpose() * proj * &ret.phi * &basis;
        let resid_vec = basis.transpose() * (DVector::from_column_slice(&ret.x) - DVector::from_column_slice(&x0));
        let lhs = dp - DMatrix::identity(n - 1, n - 1);
        let step = lhs.lu().solve(&(-resid_vec)).ok_or_else(|| Error::Numerical("singular shooting Jacobian".into()))?;
        let mut accepted = false;
        let mut lambda = 1.0;
        for _ in 0..8 {
            let cand: Vec<f64> = (DVector::from_column_slice(&x0) + &basis * (&step * lambda)).iter().copied().collect();
            if let Ok(r) = return_map(model, &section, &cand, t_guess, &solver, true) {
                let res = dist(&r.x, &cand);
                if res < residual {
                    x0 = cand;
                    ret = r;
                    residual = res;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            // plain return-map iteration contracts onto a stable orbit
            x0 = ret.x.clone();
            ret = return_map(model, &section, &x0, t_guess, &solver, true)?;
            residual = dist(&ret.x, &x0);
        }
    }
    let period = ret.time;
    let omega = 2.0 * PI / period;

    // monodromy over exactly one period and the uniform-phase samples
    let mut var = variational_rhs(model);
    let yend = solver.integrate(&mut var, 0.0, &with_identity(&x0), period)?;
    let monodromy = DMatrix::from_column_slice(n, n, &yend[n..]);
    let closure = dist(&yend[..n], &x0);
    let times: Vec<f64> = (0..opts.m).map(|j| period * j as f64 / opts.m as f64).collect();
    let samples = solver.integrate_to_times(&mut rhs, 0.0, &x0, &times)?;

    let mut ev = eigenvalues(&monodromy)?;
    let trivial = ev
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).norm().partial_cmp(&(b.1 - 1.0).norm()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let lam0 = ev.remove(trivial);
    ev.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    let mut multipliers = vec![lam0];
    multipliers.extend(ev);
    let slow = multipliers.get(1).copied().ok_or_else(|| Error::UnsupportedSpectrum("one-dimensional state".into()))?;
    // a planar multiplier below rounding level is recovered from the trace
    let underflow = n == 2 && slow.norm() < 1e-10;
    if slow.im.abs() > 1e-10 * slow.norm().max(1e-300) && !underflow {
        return Err(Error::UnsupportedSpectrum(format!("complex slowest multiplier {slow}")));
    }
    if slow.re <= 0.0 && !underflow {
        return Err(Error::UnsupportedSpectrum(format!("non-positive slowest multiplier {}", slow.re)));
    }
    let mut exponents: Vec<f64> = multipliers.iter().map(|z| z.norm().ln() / period).collect();
    let mut kappa = slow.re.ln() / period;
    if n == 2 {
        // Liouville: ln det M = ∫ tr J dt, and the trivial multiplier is 1.
        // The grid mean is spectrally accurate, unlike ln of a tiny multiplier.
        let mean_trace = samples.iter().map(|x| model.field.jacobian(x).trace()).sum::<f64>() / opts.m as f64;
        kappa = mean_trace;
        exponents = vec![0.0, kappa];
    }
    let lam = if underflow { (kappa * period).exp() } else { slow.re };

    let vmat = real_null_vector(&monodromy, lam);
    let mut v: Vec<f64> = vmat.iter().copied().collect();
    let orient = outward_normal(&samples, &f0_at(model, &x0));
    let sgn = match &orient {
        Some(nout) => nout.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>(),
        None => *v.iter().max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap()).unwrap(),
    };
    if sgn < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    let wmat = real_null_vector(&monodromy.transpose(), lam);
    let wv: f64 = wmat.iter().zip(&v).map(|(a, b)| a * b).sum();
    let w: Vec<f64> = wmat.iter().map(|c| c / wv).collect();

    let series = PeriodicVectorFunction::from_grid(&samples);
    let tail = series.tail_ratio();
    let resolution_warning = (tail > 1e-8).then(|| format!("orbit Fourier tail {tail:.2e} exceeds 1e-8"));
    Ok(PeriodicOrbit {
        period,
        omega,
        samples,
        series,
        monodromy,
        multipliers,
        exponents,
        kappa,
        v,
        w,
        newton_iterations: iterations,
        closure,
        resolution_warning,
    })
}

fn f0_at(model: &OscillatorModel, x: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; x.len()];
    model.field.eval(x, &mut f);
    f
}

/// Outward unit normal at the first sample of a planar closed curve.
pub fn outward_normal(samples: &[Vec<f64>], f0: &[f64]) -> Option<Vec<f64>> {
    if f0.len() != 2 {
        return None;
    }
    let m = samples.len();
    let area: f64 = (0..m)
        .map(|j| {
            let (a, b) = (&samples[j], &samples[(j + 1) % m]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5;
    let nf = (f0[0] * f0[0] + f0[1] * f0[1]).sqrt();
    if area > 0.0 {
        Some(vec![f0[1] / nf, -f0[0] / nf])
    } else {
        Some(vec![-f0[1] / nf, f0[0] / nf])
    }
}

/// Signed area enclosed by a planar orbit (positive when counter-clockwise).
pub fn signed_area(samples: &[Vec<f64>]) -> f64 {
    let m = samples.len();
    (0..m)
        .map(|j| {
            let (a, b) = (&samples[j], &samples[(j + 1) % m]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_mfcgl_node, make_morris_lecar_node, MorrisLecarParams};

    #[test]
    fn mfcgl_exact_orbit() {
        let m = make_mfcgl_node(0.0, 0.5).unwrap();
        let o = find_periodic_orbit(&m, &[1.0, 0.0], 4.0 * PI, &OrbitOptions { m: 64, ..Default::default() }).unwrap();
        assert_eq!(o.newton_iterations, 0);
        assert!((o.period - 4.0 * PI).abs() < 1e-8, "{}", o.period);
        assert!((o.kappa + 2.0).abs() < 1e-7, "{}", o.kappa);
        for x in &o.samples {
            assert!(((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs() < 1e-9);
        }
        // outward-pointing slow direction
        assert!(o.v[0] > 0.0);
    }

    #[test]
    fn mfcgl_from_offset_guess() {
        let m = make_mfcgl_node(0.0, 1.1).unwrap();
        let o = find_periodic_orbit(&m, &[0.7, 0.2], 5.0, &OrbitOptions { m: 64, ..Default::default() }).unwrap();
        assert!((o.period - 2.0 * PI / 1.1).abs() < 1e-8);
        assert!(o.closure < 1e-8);
    }

    #[test]
    fn morris_lecar_period_and_kappa() {
        let m = make_morris_lecar_node(MorrisLecarParams::default()).unwrap();
        let o = find_periodic_orbit(&m, &m.guess, 8.0, &OrbitOptions { m: 128, ..Default::default() }).unwrap();
        assert!((o.period - 8.1654).abs() < 1e-3, "T = {}", o.period);
        assert!((o.kappa + 0.4094).abs() < 1e-3, "kappa = {}", o.kappa);
    }
}
