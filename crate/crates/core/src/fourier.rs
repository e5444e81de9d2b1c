//! Truncated Fourier series on `[0, 2π)` and grid transforms.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Uniform grid `θ_j = 2πj/M`.
pub fn grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
}

/// Forward DFT normalised by `1/M`: `c_k = (1/M) Σ_j f_j e^{-ikθ_j}`.
pub fn dft(samples: &[Complex64]) -> Vec<Complex64> {
    let m = samples.len();
    let mut buf = samples.to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let s = 1.0 / m as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Inverse of [`dft`].
pub fn idft(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

/// Normalised 2-D DFT of a row-major `m x m` array (`a[i*m + j]`).
pub fn dft2(a: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut buf = a.to_vec();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    for row in buf.chunks_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        for i in 0..m {
            col[i] = buf[i * m + j];
        }
        fft.process(&mut col);
        for i in 0..m {
            buf[i * m + j] = col[i];
        }
    }
    let s = 1.0 / (m * m) as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Signed frequency of DFT bin `k` for length `m`.
pub fn freq(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// Real-valued function stored as `Σ_{|k|≤K} c_k e^{ikθ}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierSeries {
    /// `coeffs[k + K]` holds `c_k`.
    pub coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn zero(k: usize) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); 2 * k + 1] }
    }

    pub fn max_mode(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// Interpolating series through uniform samples; an even-length Nyquist
    /// bin is split evenly between `±M/2`.
    pub fn from_samples(samples: &[f64]) -> Self {
        let c = dft(&samples.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>());
        Self::from_dft(&c)
    }

    /// From normalised DFT bins (see [`dft`]).
    pub fn from_dft(c: &[Complex64]) -> Self {
        let m = c.len();
        let k = m / 2;
        let mut out = Self::zero(k);
        for (bin, v) in c.iter().enumerate() {
            let f = freq(bin, m);
            if m.is_multiple_of(2) && bin == m / 2 {
                out.coeffs[k + k] += v * 0.5;
                out.coeffs[0] += v * 0.5;
            } else {
                out.coeffs[(f + k as i64) as usize] += v;
            }
        }
        out
    }

    pub fn from_coeffs(k: usize, f: impl Fn(i64) -> Complex64) -> Self {
        Self { coeffs: (-(k as i64)..=k as i64).map(f).collect() }
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        let kk = self.max_mode() as i64;
        if k.abs() > kk {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + kk) as usize]
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_complex(theta).re
    }

    pub fn eval_complex(&self, theta: f64) -> Complex64 {
        let k = self.max_mode();
        let e = Complex64::from_polar(1.0, theta);
        let mut acc = self.coeffs[k];
        let mut p = Complex64::new(1.0, 0.0);
        for m in 1..=k {
            p *= e;
            if m % 16 == 0 {
                p = Complex64::from_polar(1.0, m as f64 * theta);
            }
            acc += self.coeffs[k + m] * p + self.coeffs[k - m] * p.conj();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let k = self.max_mode() as i64;
        Self::from_coeffs(k as usize, |m| self.coeff(m) * Complex64::new(0.0, m as f64))
    }

    /// Values on the uniform `m`-point grid (requires `m > 2K` for exactness).
    pub fn samples(&self, m: usize) -> Vec<f64> {
        let mut bins = vec![Complex64::new(0.0, 0.0); m];
        let k = self.max_mode() as i64;
        for f in -k..=k {
            let bin = f.rem_euclid(m as i64) as usize;
            bins[bin] += self.coeff(f);
        }
        idft(&bins).iter().map(|c| c.re).collect()
    }

    /// Coefficients with `|k| > kmax` dropped.
    pub fn truncated(&self, kmax: usize) -> Self {
        let k = kmax.min(self.max_mode());
        Self::from_coeffs(k, |m| self.coeff(m))
    }

    /// Largest coefficient magnitude in the top tenth of retained modes,
    /// relative to the largest coefficient overall.
    pub fn tail_ratio(&self) -> f64 {
        let k = self.max_mode();
        let max = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if max == 0.0 || k == 0 {
            return 0.0;
        }
        let start = (k * 9) / 10;
        let tail = (start..=k)
            .map(|m| self.coeff(m as i64).norm().max(self.coeff(-(m as i64)).norm()))
            .fold(0.0f64, f64::max);
        tail / max
    }

    /// Sup over a fine grid of `|self - other|`.
    pub fn sup_distance(&self, other: &Self, m: usize) -> f64 {
        grid(m).iter().map(|&t| (self.eval(t) - other.eval(t)).abs()).fold(0.0, f64::max)
    }
}

/// Vector of Fourier series, one per state component.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicVectorFunction {
    pub components: Vec<FourierSeries>,
}

impl PeriodicVectorFunction {
    /// Build from grid samples `values[j][c]` at `θ_j = 2πj/M`.
    pub fn from_grid(values: &[Vec<f64>]) -> Self {
        let n = values.first().map_or(0, |v| v.len());
        let components = (0..n)
            .map(|c| FourierSeries::from_samples(&values.iter().map(|v| v[c]).collect::<Vec<_>>()))
            .collect();
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, theta: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(theta)).collect()
    }

    pub fn derivative(&self) -> Self {
        Self { components: self.components.iter().map(FourierSeries::derivative).collect() }
    }

    pub fn tail_ratio(&self) -> f64 {
        self.components.iter().map(FourierSeries::tail_ratio).fold(0.0, f64::max)
    }

    /// Grid values `out[j][c]`.
    pub fn on_grid(&self, m: usize) -> Vec<Vec<f64>> {
        let cols: Vec<Vec<f64>> = self.components.iter().map(|c| c.samples(m)).collect();
        (0..m).map(|j| cols.iter().map(|c| c[j]).collect()).collect()
    }
}

/// Fourier collocation differentiation matrix on the even `m`-point grid.
pub fn diff_matrix(m: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / m as f64;
    DMatrix::from_fn(m, m, |j, k| {
        if j == k {
            0.0
        } else {
            let d = j as f64 - k as f64;
            let s = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            0.5 * s / (0.5 * d * h).tan()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_trig_polynomial() {
        let f = |t: f64| 1.0 + 2.0 * (3.0 * t).cos() - 0.5 * (t).sin();
        let s: Vec<f64> = grid(32).iter().map(|&t| f(t)).collect();
        let fs = FourierSeries::from_samples(&s);
        for t in [0.1, 1.7, 4.0] {
            assert!((fs.eval(t) - f(t)).abs() < 1e-13);
            let d = -6.0 * (3.0 * t).sin() - 0.5 * t.cos();
            assert!((fs.derivative().eval(t) - d).abs() < 1e-12);
        }
        let back = fs.samples(32);
        for (a, b) in back.iter().zip(&s) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(fs.tail_ratio() < 1e-14);
    }

    #[test]
    fn nyquist_split_keeps_grid_values() {
        let s: Vec<f64> = (0..8).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let fs = FourierSeries::from_samples(&s);
        for (j, t) in grid(8).iter().enumerate() {
            assert!((fs.eval(*t) - s[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn collocation_derivative() {
        let m = 16;
        let d = diff_matrix(m);
        let g = grid(m);
        let v = nalgebra::DVector::from_iterator(m, g.iter().map(|t| (2.0 * t).sin()));
        let dv = &d * v;
        for (j, t) in g.iter().enumerate() {
            assert!((dv[j] - 2.0 * (2.0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn dft2_separable() {
        let m = 8;
        let g = grid(m);
        let a: Vec<Complex64> = (0..m * m).map(|idx| Complex64::new((g[idx / m]).cos() * (2.0 * g[idx % m]).sin(), 0.0)).collect();
        let c = dft2(&a, m);
        // cos(x) sin(2y) = (e^{ix}+e^{-ix})(e^{2iy}-e^{-2iy})/(4i)
        let at = |i: i64, j: i64| c[(i.rem_euclid(m as i64) as usize) * m + j.rem_euclid(m as i64) as usize];
        assert!((at(1, 2) - Complex64::new(0.0, -0.25)).norm() < 1e-14);
        assert!((at(-1, -2) - Complex64::new(0.0, 0.25)).norm() < 1e-14);
        assert!(at(0, 0).norm() < 1e-14);
    }
}
