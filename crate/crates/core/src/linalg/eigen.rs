//! Dense real eigenvalues: balancing, Householder reduction to upper
//! Hessenberg form, then Francis double-shift QR with deflation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITS: usize = 60;

/// All eigenvalues of a real square matrix, sorted by decreasing real part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Config(format!("eigenvalues of a {}x{} matrix", n, a.ncols())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let mut ev = hqr(h)?;
    sort_by_real_desc(&mut ev);
    Ok(ev)
}

pub fn sort_by_real_desc(ev: &mut [Complex64]) {
    ev.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap_or(std::cmp::Ordering::Equal).then(y.im.partial_cmp(&x.im).unwrap_or(std::cmp::Ordering::Equal)));
}

/// Eigenvalues of a complex 2x2 matrix `[[a, b], [c, d]]`.
pub fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 2] {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let s = disc.sqrt();
    let (l1, l2) = (half_tr + s, half_tr - s);
    // recompute the smaller root from the determinant to avoid cancellation
    let det = a * d - b * c;
    if l1.norm() >= l2.norm() && l1.norm() > 0.0 {
        [l1, det / l1]
    } else if l2.norm() > 0.0 {
        [det / l2, l2]
    } else {
        [l1, l2]
    }
}

fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let gi = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= gi;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let mut alpha = 0.0;
        for i in k + 1..n {
            alpha += a[(i, k)] * a[(i, k)];
        }
        let alpha = alpha.sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= beta;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // left: rows k+1.., columns k..
        for j in k..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum::<f64>() * tau;
            for i in k + 1..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // right: all rows, columns k+1..
        for i in 0..n {
            let s: f64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum::<f64>() * tau;
            for j in k + 1..n {
                a[(i, j)] -= s * v[j];
            }
        }
        a[(k + 1, k)] = beta;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (1-based internally).
fn hqr(h: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut a = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let eps = f64::EPSILON;
    let mut nn = n as isize;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let nnu = nn as usize;
            let mut l = nnu;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nnu][nnu];
            if l == nnu {
                wr[nnu] = x + t;
                wi[nnu] = 0.0;
                nn -= 1;
                break;
            }
            y = a[nnu - 1][nnu - 1];
            w = a[nnu][nnu - 1] * a[nnu - 1][nnu];
            if l == nnu - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nnu - 1] = x + z;
                    wr[nnu] = x + z;
                    if z != 0.0 {
                        wr[nnu] = x - w / z;
                    }
                    wi[nnu - 1] = 0.0;
                    wi[nnu] = 0.0;
                } else {
                    wr[nnu - 1] = x + p;
                    wr[nnu] = x + p;
                    wi[nnu - 1] = -z;
                    wi[nnu] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_ITS {
                return Err(Error::NonConvergence { iterations: its, residual: a[nnu][nnu - 1].abs() });
            }
            if its == 10 || its == 20 || its == 40 {
                t += x;
                for i in 1..=nnu {
                    a[i][i] -= x;
                }
                let s = a[nnu][nnu - 1].abs() + a[nnu - 1][nnu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nnu - 2;
            loop {
                z = a[m][m];
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s0;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nnu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nnu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nnu - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nnu {
                        p = a[k][j] + q * a[k + 1][j];
                        if k != nnu - 1 {
                            p += r * a[k + 2][j];
                            a[k + 2][j] -= p * z;
                        }
                        a[k + 1][j] -= p * y;
                        a[k][j] -= p * x;
                    }
                    let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                    for i in l..=mmin {
                        p = x * a[i][k] + y * a[i][k + 1];
                        if k != nnu - 1 {
                            p += z * a[i][k + 2];
                            a[i][k + 2] -= p * r;
                        }
                        a[i][k + 1] -= p * q;
                        a[i][k] -= p;
                    }
                }
                k += 1;
            }
            if l >= nnu - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Null vector of `a - lambda I` for a real eigenvalue, unit length.
pub fn real_null_vector(a: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let shifted = a - DMatrix::<f64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    let v = vt.row(imin).transpose();
    let nv = v.norm();
    DMatrix::from_column_slice(n, 1, (v / nv).as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::poly::Poly;

    fn close_sets(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        let mut used = vec![false; b.len()];
        a.iter().all(|x| {
            let best = b
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|p, q| (p.1 - x).norm().partial_cmp(&(q.1 - x).norm()).unwrap());
            match best {
                Some((i, y)) if (y - x).norm() < tol => {
                    used[i] = true;
                    true
                }
                _ => false,
            }
        })
    }

    #[test]
    fn rotation_block() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let ev = eigenvalues(&a).unwrap();
        assert!(close_sets(&ev, &[Complex64::new(0.0, 2.0), Complex64::new(0.0, -2.0)], 1e-14));
    }

    #[test]
    fn matches_characteristic_polynomial_small() {
        let mut seed = 7u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for n in 1..=4 {
            for _ in 0..50 {
                let a = DMatrix::from_fn(n, n, |_, _| rnd());
                let ev = eigenvalues(&a).unwrap();
                let cp = Poly::characteristic(&a);
                let roots = cp.roots_durand_kerner(1e-14, 500);
                assert!(close_sets(&ev, &roots, 1e-8), "n={n} {ev:?} {roots:?}");
            }
        }
    }

    #[test]
    fn triangular_and_defective() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 5.0, 3.0, 0.0, 1.0, 2.0, 0.0, 0.0, -4.0]);
        let ev = eigenvalues(&a).unwrap();
        let want = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(-4.0, 0.0)];
        assert!(close_sets(&ev, &want, 1e-7));
    }

    #[test]
    fn complex2_closed_form() {
        let i = Complex64::i();
        let [l1, l2] = eig2(Complex64::new(1.0, 0.0), i, -i, Complex64::new(3.0, 0.0));
        // trace 4, det 3 - 1 = 2
        assert!(((l1 + l2) - 4.0).norm() < 1e-14);
        assert!((l1 * l2 - 2.0).norm() < 1e-13);
    }
}
