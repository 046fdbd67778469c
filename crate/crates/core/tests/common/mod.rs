//! Shared oracles and deterministic generators for the integration suites.
//!
//! Everything here is deliberately independent of the library's own
//! computational paths: series truncation instead of the Kronecker solve,
//! characteristic-polynomial roots instead of Hessenberg-QR, the staircase
//! test instead of PBH, and plain finite differences for every derivative.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use gainopt_core::{max_abs, point_data, Plant};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let x: f64 = rng.sample(StandardNormal);
        scale * x
    })
}

/// Random matrix rescaled to a prescribed spectral radius.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DMatrix<f64> {
    loop {
        let a = random_matrix(rng, n, n, 1.0);
        let rho = gainopt_core::spectral_radius(&a).unwrap();
        if rho > 1e-6 {
            return a * (radius / rho);
        }
    }
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n, 1.0);
    &m * m.transpose() + DMatrix::identity(n, n) * 0.1
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n, 1.0);
    &m * m.transpose() * 0.5
}

/// Random validated plant with stable open loop; `sigma2_psd` switches the
/// metric weight between zero and a random PSD matrix.
pub fn random_plant(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    radius: f64,
    sigma2_psd: bool,
) -> Plant {
    loop {
        let a = random_stable(rng, n, radius);
        let b = random_matrix(rng, n, m, 1.0);
        let sigma2 = if sigma2_psd {
            Some(random_psd(rng, m))
        } else {
            None
        };
        if let Ok(p) = Plant::new(
            a,
            b,
            None,
            random_psd(rng, n) + DMatrix::identity(n, n) * 0.05,
            random_spd(rng, m),
            Some(random_spd(rng, n)),
            sigma2,
        ) {
            return p;
        }
    }
}

/// Random (A, B) with identity cost weights, the shape used by the random
/// ensembles.
pub fn identity_cost_plant(rng: &mut ChaCha8Rng, n: usize, m: usize, radius: f64) -> Plant {
    loop {
        let a = random_stable(rng, n, radius);
        let b = random_matrix(rng, n, m, 1.0);
        if let Ok(p) = Plant::new(
            a,
            b,
            None,
            DMatrix::identity(n, n),
            DMatrix::identity(m, m),
            Some(DMatrix::identity(n, n)),
            None,
        ) {
            return p;
        }
    }
}

/// Small random gain kept stabilizing by rejection.
pub fn random_stabilizing_k(rng: &mut ChaCha8Rng, plant: &Plant) -> DMatrix<f64> {
    let (m, n) = (plant.input_dim(), plant.state_dim());
    for _ in 0..200 {
        let k = random_matrix(rng, m, n, 0.15);
        if gainopt_core::spectral_radius(&plant.closed_loop(&k)).unwrap() < 1.0 {
            return k;
        }
    }
    DMatrix::zeros(m, n)
}

/// The two-state worked example used throughout the suites:
/// upper-triangular dynamics, anti-diagonal input map, Q = diag(10, 1/2),
/// R = I/10, Sigma1 = diag(1, 5).
pub fn example2_plant() -> Plant {
    Plant::new(
        DMatrix::from_row_slice(2, 2, &[0.8, 1.0, 0.0, 0.9]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        None,
        DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 0.5]),
        DMatrix::<f64>::identity(2, 2) * 0.1,
        Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 5.0])),
        None,
    )
    .unwrap()
}

/// Same plant with the output map `C = [1, 1]` attached.
pub fn example2_plant_with_output() -> Plant {
    Plant::new(
        DMatrix::from_row_slice(2, 2, &[0.8, 1.0, 0.0, 0.9]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        Some(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])),
        DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 0.5]),
        DMatrix::<f64>::identity(2, 2) * 0.1,
        Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 5.0])),
        None,
    )
    .unwrap()
}

/// Truncated-series Lyapunov oracle: `sum_{i<terms} A^i Z (A^T)^i`.
pub fn dlyap_series(a: &DMatrix<f64>, z: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut pow = DMatrix::<f64>::identity(n, n);
    for _ in 0..terms {
        acc += &pow * z * pow.transpose();
        pow = a * pow;
    }
    acc
}

/// Series oracle for the LQR cost: `sum tr((A_cl^i)^T (Q + K^T R K) A_cl^i Sigma1) / 2`.
pub fn cost_series(plant: &Plant, k: &DMatrix<f64>, terms: usize) -> f64 {
    let a_cl = plant.closed_loop(k);
    let w = &plant.q + k.transpose() * &plant.r * k;
    let p = dlyap_series(&a_cl.transpose(), &w, terms);
    0.5 * (p * &plant.sigma1).trace()
}

/// Characteristic polynomial coefficients by Faddeev-LeVerrier:
/// `lambda^n + c[0] lambda^{n-1} + ... + c[n-1]`.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs: Vec<f64> = Vec::with_capacity(n);
    let mut m = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        if k > 1 {
            m = a * &m;
            let c = coeffs[k - 2];
            for i in 0..n {
                m[(i, i)] += c;
            }
        }
        coeffs.push(-(a * &m).trace() / k as f64);
    }
    coeffs
}

/// Durand-Kerner root finder for a monic polynomial with the given
/// trailing coefficients.
pub fn durand_kerner(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    let eval = |x: Complex<f64>| {
        let mut v = Complex::new(1.0, 0.0);
        for &c in coeffs {
            v = v * x + Complex::new(c, 0.0);
        }
        v
    };
    // Start from a non-real spread of points on a circle of radius set by
    // the coefficient bound.
    let radius = 1.0 + coeffs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let mut roots: Vec<Complex<f64>> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.354) / n as f64;
            Complex::new(radius * th.cos(), radius * th.sin())
        })
        .collect();
    for _ in 0..500 {
        let mut worst = 0.0f64;
        let old = roots.clone();
        for i in 0..n {
            let mut denom = Complex::new(1.0, 0.0);
            for (j, &r) in old.iter().enumerate() {
                if j != i {
                    denom *= old[i] - r;
                }
            }
            let delta = eval(old[i]) / denom;
            roots[i] = old[i] - delta;
            worst = worst.max(delta.norm());
        }
        if worst < 1e-13 * radius {
            break;
        }
    }
    roots
}

/// Spectral radius via characteristic polynomial roots.
pub fn spectral_radius_oracle(a: &DMatrix<f64>) -> f64 {
    durand_kerner(&char_poly(a))
        .iter()
        .fold(0.0f64, |acc, r| acc.max(r.norm()))
}

/// Staircase-style stabilizability oracle: build an orthonormal basis of
/// the controllable subspace from the controllability matrix, change basis,
/// and check that the uncontrollable diagonal block is Schur stable.
pub fn staircase_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let m = b.ncols();
    let mut ctrb = DMatrix::<f64>::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        ctrb.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    let svd = ctrb.svd(true, false);
    let u = svd.u.as_ref().unwrap();
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-11 * smax.max(1.0))
        .count();
    if rank == n {
        return true;
    }
    // Columns of U beyond the rank span the uncontrollable directions.
    let w = u.columns(rank, n - rank);
    let a22 = w.transpose() * a * w;
    gainopt_core::spectral_radius(&a22.clone_owned()).unwrap() < 1.0
}

/// Central finite difference of a scalar function of the gain.
pub fn central_diff<F: Fn(&DMatrix<f64>) -> f64>(
    f: F,
    k: &DMatrix<f64>,
    dir: &DMatrix<f64>,
    step: f64,
) -> f64 {
    (f(&(k + dir * step)) - f(&(k - dir * step))) / (2.0 * step)
}

/// Second central difference along one direction.
pub fn second_diff<F: Fn(&DMatrix<f64>) -> f64>(
    f: F,
    k: &DMatrix<f64>,
    dir: &DMatrix<f64>,
    step: f64,
) -> f64 {
    (f(&(k + dir * step)) - 2.0 * f(k) + f(&(k - dir * step))) / (step * step)
}

/// Mixed second difference along two directions (2-D stencil).
pub fn mixed_diff<F: Fn(&DMatrix<f64>) -> f64>(
    f: F,
    k: &DMatrix<f64>,
    e1: &DMatrix<f64>,
    e2: &DMatrix<f64>,
    step: f64,
) -> f64 {
    (f(&(k + e1 * step + e2 * step)) - f(&(k + e1 * step - e2 * step))
        - f(&(k - e1 * step + e2 * step))
        + f(&(k - e1 * step - e2 * step)))
        / (4.0 * step * step)
}

/// Finite-difference step scaled as the derivative oracles expect.
pub fn fd_step(k: &DMatrix<f64>) -> f64 {
    1e-6 * max_abs(k).max(1.0)
}

/// Wider step for second differences, where the h^2 division amplifies
/// function roundoff.
pub fn fd_step2(k: &DMatrix<f64>) -> f64 {
    1e-4 * max_abs(k).max(1.0)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// The LQR cost as a plain function of the gain, for difference stencils.
pub fn cost_fn(plant: &Plant) -> impl Fn(&DMatrix<f64>) -> f64 + '_ {
    move |k: &DMatrix<f64>| point_data(plant, k).unwrap().cost
}
