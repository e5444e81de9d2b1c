//! Real polynomials with ascending coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::eigen::eigenvalues;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// The polynomial `x`.
    pub fn x() -> Self {
        Poly(vec![0.0, 1.0])
    }

    /// `c0 + c1 x + ...` from ascending coefficients.
    pub fn new(coeffs: &[f64]) -> Self {
        Poly(coeffs.to_vec())
    }

    pub fn degree(&self) -> usize {
        let scale = self.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut d = self.0.len().saturating_sub(1);
        while d > 0 && self.0[d].abs() <= 1e-14 * scale {
            d -= 1;
        }
        d
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_c(&self, x: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    pub fn powi(&self, k: u32) -> Poly {
        (0..k).fold(Poly::constant(1.0), |acc, _| &acc * self)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// Roots from the eigenvalues of the companion matrix, each polished by
    /// a few Newton steps.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let d = self.degree();
        if d == 0 {
            return Ok(Vec::new());
        }
        let lead = self.0[d];
        let mut c = DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            c[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            c[(i, d - 1)] = -self.0[i] / lead;
        }
        let mut roots = eigenvalues(&c)?;
        let dp = self.derivative();
        for r in roots.iter_mut() {
            for _ in 0..3 {
                let fv = self.eval_c(*r);
                let dv = dp.eval_c(*r);
                if dv.norm() == 0.0 {
                    break;
                }
                let next = *r - fv / dv;
                if self.eval_c(next).norm() < fv.norm() {
                    *r = next;
                } else {
                    break;
                }
            }
        }
        Ok(roots)
    }

    /// Real roots (imaginary part below `tol` relative to magnitude), ascending.
    pub fn real_roots(&self, tol: f64) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = self
            .roots()?
            .into_iter()
            .filter(|r| r.im.abs() <= tol * r.norm().max(1.0))
            .map(|r| r.re)
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }

    /// Simultaneous-iteration root finder, independent of the eigenvalue engine.
    pub fn roots_durand_kerner(&self, tol: f64, max_iter: usize) -> Vec<Complex64> {
        let d = self.degree();
        if d == 0 {
            return Vec::new();
        }
        let lead = self.0[d];
        let monic: Vec<f64> = self.0[..=d].iter().map(|c| c / lead).collect();
        let p = Poly(monic);
        let radius = 1.0 + p.0[..d].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let seed = Complex64::new(0.4, 0.9);
        let mut z: Vec<Complex64> = (0..d).map(|k| seed.powu(k as u32) * radius * 0.5).collect();
        for _ in 0..max_iter {
            let mut delta: f64 = 0.0;
            for i in 0..d {
                let mut den = Complex64::new(1.0, 0.0);
                for j in 0..d {
                    if i != j {
                        den *= z[i] - z[j];
                    }
                }
                let step = p.eval_c(z[i]) / den;
                z[i] -= step;
                delta = delta.max(step.norm());
            }
            if delta < tol {
                break;
            }
        }
        z
    }

    /// Characteristic polynomial `det(xI - A)` by Faddeev–LeVerrier.
    pub fn characteristic(a: &DMatrix<f64>) -> Poly {
        let n = a.nrows();
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        let mut m = DMatrix::<f64>::zeros(n, n);
        let id = DMatrix::<f64>::identity(n, n);
        for k in 1..=n {
            m = a * &m + &id * c[n - k + 1];
            let am = a * &m;
            c[n - k] = -am.trace() / k as f64;
        }
        Poly(c)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly((0..n).map(|i| self.0.get(i).unwrap_or(&0.0) + o.0.get(i).unwrap_or(&0.0)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        self + &(-o)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

macro_rules! by_value {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, o: Poly) -> Poly {
                (&self).$m(&o)
            }
        }
    };
}
by_value!(Add, add);
by_value!(Sub, sub);
by_value!(Mul, mul);

/// All roots of `x^3 + a2 x^2 + a1 x + a0` have negative real part.
pub fn routh_cubic(a2: f64, a1: f64, a0: f64) -> bool {
    a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0
}
