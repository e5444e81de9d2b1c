//! Floquet and isostable response functions up to second order.
//!
//! Each periodic solve is a Fourier collocation on the orbit's phase grid:
//! `ω D y - A(θ) y = f`. Orders whose homogeneous problem has a periodic
//! solution are pinned by a normalisation row in a bordered system.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{diff_matrix, grid, PeriodicVectorFunction};
use crate::model::{derivative, DerivTensor, OscillatorModel};
use crate::orbit::PeriodicOrbit;

/// A response function on the phase grid and as a Fourier series.
#[derive(Clone, Debug)]
pub struct ResponseFunction {
    pub grid: Vec<Vec<f64>>,
    pub series: PeriodicVectorFunction,
}

impl ResponseFunction {
    fn from_grid(grid: Vec<Vec<f64>>) -> Self {
        let series = PeriodicVectorFunction::from_grid(&grid);
        Self { grid, series }
    }

    pub fn at(&self, theta: f64) -> Vec<f64> {
        self.series.eval(theta)
    }
}

#[derive(Clone, Debug)]
pub struct ResponseSet {
    pub omega: f64,
    pub kappa: f64,
    pub g1: ResponseFunction,
    pub g2: ResponseFunction,
    pub z0: ResponseFunction,
    pub z1: ResponseFunction,
    pub z2: ResponseFunction,
    pub i0: ResponseFunction,
    pub i1: ResponseFunction,
    pub i2: ResponseFunction,
    /// Sup-norm ODE residual per function name.
    pub residuals: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct HierarchyOptions {
    /// Relative distance to resonance below which a periodic solve is
    /// treated as singular.
    pub resonance_tol: f64,
    /// Tail ratio above which a resolution warning is recorded.
    pub tail_tol: f64,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self { resonance_tol: 1e-10, tail_tol: 1e-8 }
    }
}

/// Grid data shared by all solves.
pub struct OrbitJets {
    pub x: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub jac: Vec<DMatrix<f64>>,
    pub hess: Vec<DerivTensor>,
    pub third: Vec<DerivTensor>,
}

impl OrbitJets {
    pub fn new(model: &OscillatorModel, orbit: &PeriodicOrbit) -> Result<Self> {
        let n = model.dim();
        let x = orbit.samples.clone();
        let mut f = Vec::with_capacity(x.len());
        let mut jac = Vec::with_capacity(x.len());
        let mut hess = Vec::with_capacity(x.len());
        let mut third = Vec::with_capacity(x.len());
        for xj in &x {
            let mut fj = vec![0.0; n];
            model.field.eval(xj, &mut fj);
            f.push(fj);
            jac.push(model.field.jacobian(xj));
            hess.push(derivative(model.field.as_ref(), xj, 2)?);
            third.push(derivative(model.field.as_ref(), xj, 3)?);
        }
        Ok(Self { x, f, jac, hess, third })
    }
}

/// `α^{(k)}` for `k = 2`: `α_q = ½ g1ᵀ F_q^{(2)} g1` at each grid point.
pub fn assemble_alpha(jets: &OrbitJets, g1: &[Vec<f64>]) -> Vec<Vec<f64>> {
    jets.hess
        .iter()
        .zip(g1)
        .map(|(h, g)| (0..h.n).map(|q| 0.5 * h.bilinear(q, g, g)).collect())
        .collect()
}

/// `b^{(1)}_q = F_q^{(2)} g1` and
/// `b^{(2)}_q = F_q^{(2)} g2 + ½ F_q^{(3)} (g1 ⊗ g1)` at each grid point,
/// indexed `[j][q][component]`.
pub fn assemble_b(jets: &OrbitJets, g1: &[Vec<f64>], g2: Option<&[Vec<f64>]>) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
    let m = jets.x.len();
    let mut b1 = Vec::with_capacity(m);
    let mut b2 = Vec::with_capacity(m);
    for j in 0..m {
        let h = &jets.hess[j];
        let n = h.n;
        b1.push((0..n).map(|q| h.apply2(q, &g1[j])).collect::<Vec<_>>());
        if let Some(g2) = g2 {
            let t = &jets.third[j];
            b2.push(
                (0..n)
                    .map(|q| {
                        let a = h.apply2(q, &g2[j]);
                        let c = t.apply3(q, &g1[j], &g1[j]);
                        a.iter().zip(&c).map(|(x, y)| x + 0.5 * y).collect()
                    })
                    .collect::<Vec<_>>(),
            );
        }
    }
    (b1, b2)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// `y' = (J - s) y + f`
    Forward,
    /// `y' = -(Jᵀ + s) y + f`
    Adjoint,
}

struct Constraint {
    /// Row applied to `y(θ = 0)`.
    row: Vec<f64>,
    value: f64,
}

struct Solver<'a> {
    jets: &'a OrbitJets,
    omega: f64,
    exponents: &'a [f64],
    d: DMatrix<f64>,
    tol: f64,
}

impl Solver<'_> {
    fn resonance_distance(&self, kind: Kind, shift: f64) -> f64 {
        let scale = self.exponents.iter().fold(self.omega.max(shift.abs()), |m, e| m.max(e.abs()));
        let d = self
            .exponents
            .iter()
            .map(|e| match kind {
                Kind::Forward => (e - shift).abs(),
                Kind::Adjoint => (e + shift).abs(),
            })
            .fold(f64::INFINITY, f64::min);
        d / scale
    }

    fn solve(&self, order: usize, kind: Kind, shift: f64, rhs: &[Vec<f64>], constraint: Option<Constraint>) -> Result<Vec<Vec<f64>>> {
        let m = self.jets.x.len();
        let n = self.jets.x[0].len();
        let size = n * m;
        let resonant = self.resonance_distance(kind, shift) < self.tol;
        if resonant && constraint.is_none() {
            return Err(Error::Resonance { order, distance: self.resonance_distance(kind, shift) });
        }
        let bordered = constraint.is_some();
        let dim = size + usize::from(bordered);
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        for c in 0..n {
            for j in 0..m {
                for k in 0..m {
                    a[(c * m + j, c * m + k)] = self.omega * self.d[(j, k)];
                }
            }
        }
        for j in 0..m {
            let jac = &self.jets.jac[j];
            for r in 0..n {
                for c in 0..n {
                    let coef = match kind {
                        Kind::Forward => -jac[(r, c)] + if r == c { shift } else { 0.0 },
                        Kind::Adjoint => jac[(c, r)] + if r == c { shift } else { 0.0 },
                    };
                    a[(r * m + j, c * m + j)] += coef;
                }
            }
        }
        let mut b = DVector::<f64>::zeros(dim);
        for j in 0..m {
            for r in 0..n {
                b[r * m + j] = rhs[j][r];
            }
        }
        if let Some(con) = constraint {
            let scale = self.omega * m as f64 / 2.0 + 1.0;
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            let mut u: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let un = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            u.iter_mut().for_each(|v| *v *= scale / un);
            for (i, ui) in u.iter().enumerate() {
                a[(i, size)] = *ui;
            }
            for c in 0..n {
                a[(size, c * m)] = con.row[c] * scale;
            }
            b[size] = con.value * scale;
        }
        let lu = a.lu();
        let sol = lu.solve(&b).ok_or(Error::Resonance { order, distance: 0.0 })?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Resonance { order, distance: 0.0 });
        }
        Ok((0..m).map(|j| (0..n).map(|c| sol[c * m + j]).collect()).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matvec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| a[(r, c)] * v[c]).sum()).collect()
}

/// `-Σ_q y_q b_q` at each grid point.
fn contract_forcing(ys: &[(&[Vec<f64>], &[Vec<Vec<f64>>])]) -> Vec<Vec<f64>> {
    let m = ys[0].0.len();
    let n = ys[0].0[0].len();
    (0..m)
        .map(|j| {
            let mut out = vec![0.0; n];
            for (y, b) in ys {
                for q in 0..n {
                    for c in 0..n {
                        out[c] -= y[j][q] * b[j][q][c];
                    }
                }
            }
            out
        })
        .collect()
}

/// Solve the full hierarchy `g¹, g², Z⁰..Z², I⁰..I²` on the orbit grid.
pub fn solve_hierarchy(model: &OscillatorModel, orbit: &PeriodicOrbit, opts: &HierarchyOptions) -> Result<ResponseSet> {
    let jets = OrbitJets::new(model, orbit)?;
    solve_hierarchy_with(&jets, orbit, opts)
}

pub fn solve_hierarchy_with(jets: &OrbitJets, orbit: &PeriodicOrbit, opts: &HierarchyOptions) -> Result<ResponseSet> {
    let m = orbit.m();
    let omega = orbit.omega;
    let kappa = orbit.kappa;
    let solver = Solver { jets, omega, exponents: &orbit.exponents, d: diff_matrix(m), tol: opts.resonance_tol };
    let zero = vec![vec![0.0; orbit.dim()]; m];

    let mut g1 = solver.solve(1, Kind::Forward, kappa, &zero, Some(Constraint { row: orbit.v.clone(), value: 1.0 }))?;
    let g0n = dot(&g1[0], &g1[0]).sqrt();
    for g in g1.iter_mut() {
        g.iter_mut().for_each(|v| *v /= g0n);
    }
    let z0 = solver.solve(0, Kind::Adjoint, 0.0, &zero, Some(Constraint { row: jets.f[0].clone(), value: omega }))?;
    let i0 = solver.solve(0, Kind::Adjoint, -kappa, &zero, Some(Constraint { row: g1[0].clone(), value: 1.0 }))?;

    let alpha = assemble_alpha(jets, &g1);
    let g2 = solver.solve(2, Kind::Forward, 2.0 * kappa, &alpha, None)?;
    let (b1, b2) = assemble_b(jets, &g1, Some(&g2));

    let f_z1 = contract_forcing(&[(&z0, &b1)]);
    let z1 = solver.solve(1, Kind::Adjoint, kappa, &f_z1, None)?;
    let f_i1 = contract_forcing(&[(&i0, &b1)]);
    let i1_value = kappa - dot(&i0[0], &matvec(&jets.jac[0], &g1[0]));
    let i1 = solver.solve(1, Kind::Adjoint, 0.0, &f_i1, Some(Constraint { row: jets.f[0].clone(), value: i1_value }))?;

    let f_z2 = contract_forcing(&[(&z0, &b2), (&z1, &b1)]);
    let z2 = solver.solve(2, Kind::Adjoint, 2.0 * kappa, &f_z2, None)?;
    let f_i2 = contract_forcing(&[(&i0, &b2), (&i1, &b1)]);
    let i2 = solver.solve(2, Kind::Adjoint, kappa, &f_i2, None)?;

    let mut set = ResponseSet {
        omega,
        kappa,
        g1: ResponseFunction::from_grid(g1),
        g2: ResponseFunction::from_grid(g2),
        z0: ResponseFunction::from_grid(z0),
        z1: ResponseFunction::from_grid(z1),
        z2: ResponseFunction::from_grid(z2),
        i0: ResponseFunction::from_grid(i0),
        i1: ResponseFunction::from_grid(i1),
        i2: ResponseFunction::from_grid(i2),
        residuals: BTreeMap::new(),
        warnings: Vec::new(),
    };
    if let Some(w) = &orbit.resolution_warning {
        set.warnings.push(w.clone());
    }
    let tails: Vec<String> = set
        .named()
        .into_iter()
        .filter_map(|(name, f)| {
            let t = f.series.tail_ratio();
            (t > opts.tail_tol).then(|| format!("{name}: Fourier tail {t:.2e} exceeds {:.0e}", opts.tail_tol))
        })
        .collect();
    set.warnings.extend(tails);
    set.residuals = ode_residuals(&set, jets, orbit);
    Ok(set)
}

impl ResponseSet {
    pub fn named(&self) -> Vec<(&'static str, &ResponseFunction)> {
        vec![
            ("g1", &self.g1),
            ("g2", &self.g2),
            ("Z0", &self.z0),
            ("Z1", &self.z1),
            ("Z2", &self.z2),
            ("I0", &self.i0),
            ("I1", &self.i1),
            ("I2", &self.i2),
        ]
    }

    /// Normalisation identities on the grid, sup-norm of each defect.
    pub fn normalization_defects(&self, jets: &OrbitJets) -> BTreeMap<String, f64> {
        let m = jets.x.len();
        let g1 = &self.g1.grid;
        let g2 = &self.g2.grid;
        let alpha = assemble_alpha(jets, g1);
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: f64| {
            let e = out.entry(k.to_string()).or_insert(0.0f64);
            *e = e.max(v.abs());
        };
        for j in 0..m {
            let jg1 = matvec(&jets.jac[j], &g1[j]);
            let jg2 = matvec(&jets.jac[j], &g2[j]);
            let f = &jets.f[j];
            let (z0, z1, z2) = (&self.z0.grid[j], &self.z1.grid[j], &self.z2.grid[j]);
            let (i0, i1, i2) = (&self.i0.grid[j], &self.i1.grid[j], &self.i2.grid[j]);
            put("Z0", dot(z0, f) - self.omega);
            put("Z1", dot(z1, f) + dot(z0, &jg1));
            put("Z2", dot(z2, f) + dot(z0, &jg2) + dot(z1, &jg1) + dot(z0, &alpha[j]));
            put("I0", dot(i0, f));
            put("I1", dot(i1, f) + dot(i0, &jg1) - self.kappa);
            put("I2", dot(i2, f) + dot(i0, &jg2) + dot(i1, &jg1) + dot(i0, &alpha[j]));
        }
        put("I0g1", dot(&self.i0.grid[0], &g1[0]) - 1.0);
        put("g1norm", dot(&g1[0], &g1[0]).sqrt() - 1.0);
        out
    }

    pub fn to_csv(&self) -> String {
        let named = self.named();
        let n = self.g1.grid[0].len();
        let mut s = String::from("theta");
        for (name, _) in &named {
            for c in 0..n {
                s.push_str(&format!(",{name}_{}", c + 1));
            }
        }
        s.push('\n');
        for (j, t) in grid(self.g1.grid.len()).iter().enumerate() {
            s.push_str(&format!("{t:.12e}"));
            for (_, f) in &named {
                for v in &f.grid[j] {
                    s.push_str(&format!(",{v:.15e}"));
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out<'a> {
            omega: f64,
            kappa: f64,
            functions: BTreeMap<&'a str, &'a PeriodicVectorFunction>,
            residuals: &'a BTreeMap<String, f64>,
            warnings: &'a [String],
        }
        serde_json::to_value(Out {
            omega: self.omega,
            kappa: self.kappa,
            functions: self.named().into_iter().map(|(k, f)| (k, &f.series)).collect(),
            residuals: &self.residuals,
            warnings: &self.warnings,
        })
        .expect("serialisable")
    }
}

/// Sup-norm of `dy/dt - rhs` using a centred difference of the Fourier
/// interpolant at each grid point.
fn ode_residuals(set: &ResponseSet, jets: &OrbitJets, orbit: &PeriodicOrbit) -> BTreeMap<String, f64> {
    let m = orbit.m();
    let kappa = set.kappa;
    let g1 = &set.g1.grid;
    let alpha = assemble_alpha(jets, g1);
    let (b1, b2) = assemble_b(jets, g1, Some(&set.g2.grid));
    let rhs_of = |name: &str, j: usize, y: &[f64]| -> Vec<f64> {
        let jac = &jets.jac[j];
        let n = y.len();
        let fwd = |s: f64| -> Vec<f64> { (0..n).map(|r| (0..n).map(|c| jac[(r, c)] * y[c]).sum::<f64>() - s * y[r]).collect() };
        let adj = |s: f64| -> Vec<f64> { (0..n).map(|r| -(0..n).map(|c| jac[(c, r)] * y[c]).sum::<f64>() - s * y[r]).collect() };
        let forcing = |pairs: &[(&Vec<f64>, &Vec<Vec<f64>>)]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (yy, b) in pairs {
                for q in 0..n {
                    for c in 0..n {
                        out[c] -= yy[q] * b[q][c];
                    }
                }
            }
            out
        };
        let add = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<f64>>();
        match name {
            "g1" => fwd(kappa),
            "g2" => add(fwd(2.0 * kappa), alpha[j].clone()),
            "Z0" => adj(0.0),
            "Z1" => add(adj(kappa), forcing(&[(&set.z0.grid[j], &b1[j])])),
            "Z2" => add(adj(2.0 * kappa), forcing(&[(&set.z0.grid[j], &b2[j]), (&set.z1.grid[j], &b1[j])])),
            "I0" => adj(-kappa),
            "I1" => add(adj(0.0), forcing(&[(&set.i0.grid[j], &b1[j])])),
            "I2" => add(adj(kappa), forcing(&[(&set.i0.grid[j], &b2[j]), (&set.i1.grid[j], &b1[j])])),
            _ => unreachable!(),
        }
    };
    // sixth-order central stencil on the interpolant
    let delta = 1e-3;
    let mut out = BTreeMap::new();
    for (name, f) in set.named() {
        let mut worst: f64 = 0.0;
        for (j, theta) in grid(m).iter().enumerate() {
            let at = |k: f64| f.series.eval(theta + k * delta);
            let (p1, m1, p2, m2, p3, m3) = (at(1.0), at(-1.0), at(2.0), at(-2.0), at(3.0), at(-3.0));
            let r = rhs_of(name, j, &f.grid[j]);
            for c in 0..p1.len() {
                let d = 45.0 * (p1[c] - m1[c]) - 9.0 * (p2[c] - m2[c]) + (p3[c] - m3[c]);
                let dydt = set.omega * d / (60.0 * delta);
                worst = worst.max((dydt - r[c]).abs());
            }
        }
        out.insert(name.to_string(), worst);
    }
    out
}
