//! Adaptive Dormand–Prince 5(4) integrator with continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step together with its dense-output polynomial.
pub struct Step<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    rcont: &'a [Vec<f64>; 5],
}

impl Step<'_> {
    /// Interpolated state at `t` inside `[t0, t1]`.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
    }
}

/// Observer verdict after each accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_max: f64::INFINITY, max_steps: 5_000_000 }
    }
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    /// Integrate to `t1` and return the final state.
    pub fn integrate<F>(&self, f: &mut F, t0: f64, y0: &[f64], t1: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut y = y0.to_vec();
        self.run(f, t0, &mut y, t1, None, &mut |_| Control::Continue)?;
        Ok(y)
    }

    /// States at each of the increasing `times`; steps land exactly on them.
    pub fn integrate_to_times<F>(&self, f: &mut F, t0: f64, y0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut y = y0.to_vec();
        let mut t = t0;
        let mut h = None;
        let mut out = Vec::with_capacity(times.len());
        for &tk in times {
            if tk > t {
                let (_, hl) = self.run(f, t, &mut y, tk, h, &mut |_| Control::Continue)?;
                h = Some(hl);
                t = tk;
            }
            out.push(y.clone());
        }
        Ok(out)
    }

    /// Integrate toward `t1` calling `observer` after every accepted step.
    /// The state is updated in place; the returned time is where integration
    /// stopped (either `t1` or the step at which the observer asked to stop).
    pub fn integrate_observed<F, O>(&self, f: &mut F, t0: f64, y: &mut [f64], t1: f64, observer: &mut O) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(&Step) -> Control,
    {
        self.run(f, t0, y, t1, None, observer).map(|(t, _)| t)
    }

    fn run<F, O>(&self, f: &mut F, t0: f64, y: &mut [f64], t1: f64, h0: Option<f64>, observer: &mut O) -> Result<(f64, f64)>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(&Step) -> Control,
    {
        let n = y.len();
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return Ok((t0, h0.unwrap_or(0.0)));
        }
        let mut k = [(); 7].map(|_| vec![0.0; n]);
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut rcont: [Vec<f64>; 5] = [(); 5].map(|_| vec![0.0; n]);
        let mut t = t0;
        f(t, y, &mut k[0]);
        let mut h = match h0 {
            Some(h) if h > 0.0 => h.min(span),
            _ => self.initial_step(f, t, y, &k[0], dir, &mut ytmp, &mut ynew).min(span),
        };
        h = h.min(self.h_max);
        let mut facold: f64 = 1e-4;
        let mut reject = false;
        let mut last_h = h;
        let h_min = 1e-14 * span.max(t0.abs()).max(1.0);

        for _ in 0..self.max_steps {
            let remaining = (t1 - t) * dir;
            if remaining <= 1e-15 * span {
                return Ok((t1, last_h));
            }
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            let hs = h * dir;
            for i in 0..n {
                ytmp[i] = y[i] + hs * A21 * k[0][i];
            }
            let (k0, rest) = k.split_at_mut(1);
            f(t + C2 * hs, &ytmp, &mut rest[0]);
            for i in 0..n {
                ytmp[i] = y[i] + hs * (A31 * k0[0][i] + A32 * rest[0][i]);
            }
            f(t + C3 * hs, &ytmp, &mut rest[1]);
            for i in 0..n {
                ytmp[i] = y[i] + hs * (A41 * k0[0][i] + A42 * rest[0][i] + A43 * rest[1][i]);
            }
            f(t + C4 * hs, &ytmp, &mut rest[2]);
            for i in 0..n {
                ytmp[i] = y[i]
                    + hs * (A51 * k0[0][i] + A52 * rest[0][i] + A53 * rest[1][i] + A54 * rest[2][i]);
            }
            f(t + C5 * hs, &ytmp, &mut rest[3]);
            for i in 0..n {
                ytmp[i] = y[i]
                    + hs * (A61 * k0[0][i]
                        + A62 * rest[0][i]
                        + A63 * rest[1][i]
                        + A64 * rest[2][i]
                        + A65 * rest[3][i]);
            }
            let tph = if last { t1 } else { t + hs };
            f(tph, &ytmp, &mut rest[4]);
            for i in 0..n {
                ynew[i] = y[i]
                    + hs * (A71 * k0[0][i]
                        + A73 * rest[1][i]
                        + A74 * rest[2][i]
                        + A75 * rest[3][i]
                        + A76 * rest[4][i]);
            }
            f(tph, &ynew, &mut rest[5]);

            let mut err = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * k0[0][i]
                        + E3 * rest[1][i]
                        + E4 * rest[2][i]
                        + E5 * rest[3][i]
                        + E6 * rest[4][i]
                        + E7 * rest[5][i]);
                let sk = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sk) * (e / sk);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                if h <= h_min {
                    return Err(Error::Integration(format!("non-finite state near t = {t}")));
                }
                h *= 0.1;
                reject = true;
                continue;
            }

            let expo = 0.2 - 0.04 * 0.75;
            let fac11 = err.powf(expo);
            if err <= 1.0 {
                let mut fac = fac11 / facold.powf(0.04);
                fac = (fac / 0.9).clamp(0.1, 5.0);
                let mut hnew = h / fac;
                facold = err.max(1e-4);
                for i in 0..n {
                    let ydiff = ynew[i] - y[i];
                    let bspl = hs * k0[0][i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - hs * rest[5][i] - bspl;
                    rcont[4][i] = hs
                        * (D1 * k0[0][i]
                            + D3 * rest[1][i]
                            + D4 * rest[2][i]
                            + D5 * rest[3][i]
                            + D6 * rest[4][i]
                            + D7 * rest[5][i]);
                }
                let step = Step { t0: t, t1: tph, y0: y, y1: &ynew, rcont: &rcont };
                let ctl = observer(&step);
                t = tph;
                y.copy_from_slice(&ynew);
                k0[0].copy_from_slice(&rest[5]);
                if !last {
                    last_h = h;
                }
                if ctl == Control::Stop {
                    return Ok((t, last_h));
                }
                if last {
                    return Ok((t1, last_h));
                }
                if reject {
                    hnew = hnew.min(h);
                }
                reject = false;
                h = hnew.min(self.h_max);
            } else {
                h /= (fac11 / 0.9).min(5.0);
                reject = true;
            }
            if h < h_min {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        Err(Error::Integration(format!("step limit {} exceeded", self.max_steps)))
    }

    #[allow(clippy::too_many_arguments)]
    fn initial_step<F>(&self, f: &mut F, t: f64, y: &[f64], f0: &[f64], dir: f64, y1: &mut [f64], f1: &mut [f64]) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len() as f64;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..y.len() {
            let sk = self.atol + self.rtol * y[i].abs();
            dnf += (f0[i] / sk).powi(2);
            dny += (y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
        h = h.min(self.h_max);
        for i in 0..y.len() {
            y1[i] = y[i] + dir * h * f0[i];
        }
        f(t + dir * h, y1, f1);
        let mut der2 = 0.0;
        for i in 0..y.len() {
            let sk = self.atol + self.rtol * y[i].abs();
            der2 += ((f1[i] - f0[i]) / sk).powi(2);
        }
        let der2 = (der2 / n).sqrt() / h;
        let der12 = der2.max((dnf / n).sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
        (100.0 * h).min(h1).min(self.h_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let mut f = |_t: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let y = Dopri5::default().integrate(&mut f, 0.0, &[1.0, 0.0], 2.0 * std::f64::consts::PI).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9, "{y:?}");
    }

    #[test]
    fn dense_output_matches_exact() {
        let mut f = |_t: f64, y: &[f64], d: &mut [f64]| d[0] = -0.7 * y[0];
        let mut y = vec![1.0];
        let mut worst: f64 = 0.0;
        let solver = Dopri5::new(1e-11, 1e-12);
        solver
            .integrate_observed(&mut f, 0.0, &mut y, 5.0, &mut |s: &Step| {
                let mut o = [0.0];
                for j in 0..=8 {
                    let t = s.t0 + (s.t1 - s.t0) * j as f64 / 8.0;
                    s.eval(t, &mut o);
                    worst = worst.max((o[0] - (-0.7 * t).exp()).abs());
                }
                Control::Continue
            })
            .unwrap();
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn lands_on_requested_times() {
        let mut f = |t: f64, _y: &[f64], d: &mut [f64]| d[0] = t.cos();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.37).collect();
        let ys = Dopri5::default().integrate_to_times(&mut f, 0.0, &[0.0], &times).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_integration() {
        let mut f = |_t: f64, y: &[f64], d: &mut [f64]| d[0] = y[0];
        let y = Dopri5::default().integrate(&mut f, 1.0, &[1.0], 0.0).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }
}
