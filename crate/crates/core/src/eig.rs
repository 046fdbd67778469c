//! Dense eigenvalue routines: balanced Hessenberg-QR (Francis double shift)
//! for nonsymmetric spectra and cyclic Jacobi for symmetric ones.
//!
//! Both are deterministic and handle the degenerate inputs that show up in
//! this domain (zero dynamics, nilpotent closed loops). The Hessenberg-QR
//! path follows the classic EISPACK/Numerical-Recipes `balanc`/`elmhes`/
//! `hqr` sequence, eigenvalues only.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;

/// Diagonal similarity scaling to even out row/column norms.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
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
                let mut f = 1.0;
                let s = c + r;
                let mut c = c;
                let mut g = r / RADIX;
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
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            return;
        }
    }
}

/// Reduction to upper Hessenberg form by stabilized elementary similarity
/// transformations.
fn elmhes(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for m in 1..(n - 1) {
        let mut x = 0.0f64;
        let mut i = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..n {
                a.swap((i, j), (m, j));
            }
            for j in 0..n {
                a.swap((j, i), (j, m));
            }
        }
        if x != 0.0 {
            for i2 in (m + 1)..n {
                let mut y = a[(i2, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i2, m - 1)] = y;
                    for j in m..n {
                        let t = y * a[(m, j)];
                        a[(i2, j)] -= t;
                    }
                    for j in 0..n {
                        let t = y * a[(j, i2)];
                        a[(j, m)] += t;
                    }
                }
            }
        }
    }
    // hqr only reads the Hessenberg part; clear the multipliers stored below.
    for i in 2..n {
        for j in 0..(i - 1) {
            a[(i, j)] = 0.0;
        }
    }
}

fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// QR iteration with Francis double shifts on an upper Hessenberg matrix;
/// returns all eigenvalues.
fn hqr(a: &mut DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = a.nrows();
    let mut eig = vec![Complex::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0f64;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // Look for a single negligible subdiagonal element.
            let mut l = nn;
            while l >= 1 {
                let s = {
                    let s = a[((l - 1) as usize, (l - 1) as usize)].abs()
                        + a[(l as usize, l as usize)].abs();
                    if s == 0.0 {
                        anorm
                    } else {
                        s
                    }
                };
                if a[(l as usize, (l - 1) as usize)].abs() <= f64::EPSILON * s {
                    a[(l as usize, (l - 1) as usize)] = 0.0;
                    break;
                }
                l -= 1;
            }

            let x = a[(nn as usize, nn as usize)];
            if l == nn {
                // One root found.
                eig[nn as usize] = Complex::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let y = a[((nn - 1) as usize, (nn - 1) as usize)];
            let w = a[(nn as usize, (nn - 1) as usize)] * a[((nn - 1) as usize, nn as usize)];
            if l == nn - 1 {
                // Two roots found.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    let z = p + sign_of(z, p);
                    let first = x + z;
                    let second = if z != 0.0 { x - w / z } else { first };
                    eig[(nn - 1) as usize] = Complex::new(first, 0.0);
                    eig[nn as usize] = Complex::new(second, 0.0);
                } else {
                    eig[(nn - 1) as usize] = Complex::new(x + p, -z);
                    eig[nn as usize] = Complex::new(x + p, z);
                }
                nn -= 2;
                break;
            }

            // No root yet: one double-shift QR sweep on rows l..=nn.
            if its == 100 {
                return Err(Error::Numerical(
                    "Hessenberg QR iteration did not converge".into(),
                ));
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its > 0 && its.is_multiple_of(10) {
                // Exceptional shift.
                t += x;
                for i in 0..=(nn as usize) {
                    a[(i, i)] -= x;
                }
                let s = a[(nn as usize, (nn - 1) as usize)].abs()
                    + a[((nn - 1) as usize, (nn - 2) as usize)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // Find two consecutive small subdiagonals.
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m as usize, m as usize)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[((m + 1) as usize, m as usize)] + a[(m as usize, (m + 1) as usize)];
                q = a[((m + 1) as usize, (m + 1) as usize)] - z - rr - ss;
                r = a[((m + 2) as usize, (m + 1) as usize)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m as usize, (m - 1) as usize)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (a[((m - 1) as usize, (m - 1) as usize)].abs()
                        + z.abs()
                        + a[((m + 1) as usize, (m + 1) as usize)].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[(i as usize, (i - 2) as usize)] = 0.0;
                if i != m + 2 {
                    a[(i as usize, (i - 3) as usize)] = 0.0;
                }
            }

            for k in m..=(nn - 1) {
                if k != m {
                    p = a[(k as usize, (k - 1) as usize)];
                    q = a[((k + 1) as usize, (k - 1) as usize)];
                    r = if k != nn - 1 {
                        a[((k + 2) as usize, (k - 1) as usize)]
                    } else {
                        0.0
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(k as usize, (k - 1) as usize)] = -a[(k as usize, (k - 1) as usize)];
                        }
                    } else {
                        a[(k as usize, (k - 1) as usize)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in (k as usize)..=(nn as usize) {
                        let mut pp = a[(k as usize, j)] + q * a[((k + 1) as usize, j)];
                        if k != nn - 1 {
                            pp += r * a[((k + 2) as usize, j)];
                            a[((k + 2) as usize, j)] -= pp * z;
                        }
                        a[((k + 1) as usize, j)] -= pp * y;
                        a[(k as usize, j)] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in (l as usize)..=(mmin as usize) {
                        let mut pp = x * a[(i, k as usize)] + y * a[(i, (k + 1) as usize)];
                        if k != nn - 1 {
                            pp += z * a[(i, (k + 2) as usize)];
                            a[(i, (k + 2) as usize)] -= pp * r;
                        }
                        a[(i, (k + 1) as usize)] -= pp * q;
                        a[(i, k as usize)] -= pp;
                    }
                }
            }
        }
    }
    Ok(eig)
}

/// All eigenvalues of a general real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    if n == 1 {
        return Ok(vec![Complex::new(a[(0, 0)], 0.0)]);
    }
    let mut h = a.clone();
    balance(&mut h);
    elmhes(&mut h);
    hqr(&mut h)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigenvalues come
/// out unsorted, paired with the columns of the optional rotation product.
pub fn jacobi_eigen(
    s: &DMatrix<f64>,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let n = s.nrows();
    debug_assert_eq!(n, s.ncols());
    let mut a = s.clone();
    let mut v = if want_vectors {
        Some(DMatrix::<f64>::identity(n, n))
    } else {
        None
    };
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 || n < 2 {
        return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= f64::EPSILON * frob {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                let tau = sn / (1.0 + c);

                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[(r, p)];
                        let arq = a[(r, q)];
                        a[(r, p)] = arp - sn * (arq + tau * arp);
                        a[(p, r)] = a[(r, p)];
                        a[(r, q)] = arq + sn * (arp - tau * arq);
                        a[(q, r)] = a[(r, q)];
                    }
                }
                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = vrp - sn * (vrq + tau * vrp);
                        v[(r, q)] = vrq + sn * (vrp - tau * vrq);
                    }
                }
            }
        }
    }
    Err(Error::Numerical(
        "Jacobi iteration did not converge in 100 sweeps".into(),
    ))
}
