//! The Riemannian metric on the set of stabilizing gains and its second
//! order data.
//!
//! At a stabilizing `K` the metric weighs tangent matrices by
//! `Y_K = L(A_cl, Sigma_K)` through `<V, W> = tr(V^T W Y_K)`, with
//! `Sigma_K = Sigma1 + K^T Sigma2 K`. This module computes the per-point
//! cache (`PointData`), the derivative matrices `dY_K(p,q)` and the
//! Christoffel symbols of the metric in the global coordinate frame.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{dlyap, max_abs, spectral_radius, Plant};
use crate::tol::Tolerances;

/// Cached quantities at a stabilizing point `K`.
#[derive(Debug, Clone)]
pub struct PointData {
    pub k: DMatrix<f64>,
    /// `A + B K`.
    pub a_cl: DMatrix<f64>,
    /// `Sigma1 + K^T Sigma2 K`.
    pub sigma_k: DMatrix<f64>,
    /// Metric coordinate matrix `Y = L(A_cl, Sigma_K)`.
    pub y: DMatrix<f64>,
    pub y_inv: DMatrix<f64>,
    /// Condition estimate of `Y` (ratio of extreme eigenvalues).
    pub y_cond: f64,
    /// Cost matrix `P = L(A_cl^T, Q + K^T R K)`.
    pub p: DMatrix<f64>,
    /// `R K + B^T P A_cl`.
    pub grad: DMatrix<f64>,
    /// `tr(P Sigma1) / 2`.
    pub cost: f64,
}

impl PointData {
    pub fn input_dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.k.ncols()
    }

    /// True when `Y` is so ill-conditioned that metric solves are suspect.
    pub fn y_ill_conditioned(&self) -> bool {
        self.y_cond > Tolerances::default().y_condition_warn
    }
}

/// Builds the per-point cache, rejecting non-stabilizing gains.
pub fn point_data(plant: &Plant, k: &DMatrix<f64>) -> Result<PointData> {
    if k.nrows() != plant.input_dim() || k.ncols() != plant.state_dim() {
        return Err(Error::Dimension(format!(
            "gain must be {}x{}, got {}x{}",
            plant.input_dim(),
            plant.state_dim(),
            k.nrows(),
            k.ncols()
        )));
    }
    let a_cl = plant.closed_loop(k);
    let rho = spectral_radius(&a_cl)?;
    if rho >= 1.0 {
        return Err(Error::NotStabilizing { rho });
    }

    let sigma_k = &plant.sigma1 + k.transpose() * &plant.sigma2 * k;
    let y = dlyap(&a_cl, &sigma_k)?;
    let y_inv = y
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("metric matrix Y is singular".into()))?;
    let (eigs, _) = crate::eig::jacobi_eigen(&((&y + y.transpose()) * 0.5), false)?;
    let (lo, hi) = eigs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
            (lo.min(l), hi.max(l))
        });
    let y_cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    let p = dlyap(
        &a_cl.transpose(),
        &(&plant.q + k.transpose() * &plant.r * k),
    )?;
    let grad = &plant.r * k + plant.b.transpose() * &p * &a_cl;
    let cost = 0.5 * (&p * &plant.sigma1).trace();

    Ok(PointData {
        k: k.clone(),
        a_cl,
        sigma_k,
        y,
        y_inv,
        y_cond,
        p,
        grad,
        cost,
    })
}

/// Metric inner product `tr(V^T W Y_K)` of two tangent matrices at `pd`.
///
/// Panics on dimension mismatch.
pub fn metric_inner(pd: &PointData, v: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let (m, n) = (pd.input_dim(), pd.state_dim());
    assert!(
        v.nrows() == m && v.ncols() == n && w.nrows() == m && w.ncols() == n,
        "tangent matrices must be {m}x{n}"
    );
    (v.transpose() * w * &pd.y).trace()
}

/// Metric norm `sqrt(<V, V>)`.
pub fn metric_norm(pd: &PointData, v: &DMatrix<f64>) -> f64 {
    metric_inner(pd, v, v).max(0.0).sqrt()
}

fn elementary(m: usize, n: usize, p: usize, q: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(m, n);
    e[(p, q)] = 1.0;
    e
}

/// Directional derivatives of `K -> Y_K` along each coordinate direction:
/// `dY_K(p,q) = L(A_cl, B e_pq Y A_cl^T + A_cl Y e_pq^T B^T
///              + e_pq^T Sigma2 K + K^T Sigma2 e_pq)`.
///
/// Entries are indexed row-major (`p * n + q`).
pub fn dy_table(plant: &Plant, pd: &PointData) -> Result<Vec<DMatrix<f64>>> {
    let (m, n) = (pd.input_dim(), pd.state_dim());
    let mut out = Vec::with_capacity(m * n);
    let sigma2_zero = plant.sigma2_is_zero();
    for p in 0..m {
        for q in 0..n {
            let e = elementary(m, n, p, q);
            let mut arg = &plant.b * &e * &pd.y * pd.a_cl.transpose()
                + &pd.a_cl * &pd.y * e.transpose() * plant.b.transpose();
            if !sigma2_zero {
                arg += e.transpose() * &plant.sigma2 * &pd.k
                    + pd.k.transpose() * &plant.sigma2 * &e;
            }
            let sol = dlyap(&pd.a_cl, &arg)?;
            // The argument is symmetric, so the solution is too; symmetrize
            // to the bit so downstream index symmetries hold exactly.
            out.push((&sol + sol.transpose()) * 0.5);
        }
    }
    Ok(out)
}

/// Christoffel symbols of the metric at one point, in the global coordinate
/// frame, plus the `dY` table they are assembled from.
///
/// `gamma` is stored dense: all `(mn)^3` coefficients, indexed by
/// (upper, lower1, lower2) with each pair flattened row-major. The
/// documented zero pattern (three pairwise distinct row indices) is kept in
/// storage rather than exploited.
#[derive(Debug, Clone)]
pub struct ChristoffelTensor {
    m: usize,
    n: usize,
    dy: Vec<DMatrix<f64>>,
    gamma: Vec<f64>,
}

impl ChristoffelTensor {
    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn dy(&self, p: usize, q: usize) -> &DMatrix<f64> {
        &self.dy[p * self.n + q]
    }

    /// Coefficient with upper index `(i, j)` and lower indices
    /// `(k, l), (p, q)`.
    pub fn gamma(&self, upper: (usize, usize), lo1: (usize, usize), lo2: (usize, usize)) -> f64 {
        let mn = self.m * self.n;
        let a = upper.0 * self.n + upper.1;
        let b = lo1.0 * self.n + lo1.1;
        let c = lo2.0 * self.n + lo2.1;
        self.gamma[(a * mn + b) * mn + c]
    }
}

/// Evaluates the five-case coordinate formula for the Christoffel symbols.
pub fn christoffel(plant: &Plant, pd: &PointData) -> Result<ChristoffelTensor> {
    let (m, n) = (pd.input_dim(), pd.state_dim());
    let dy = dy_table(plant, pd)?;
    let mn = m * n;
    let mut gamma = vec![0.0; mn * mn * mn];

    // Precompute dY(p,q) * Y^{-1} for the two single-product cases.
    let dy_yinv: Vec<DMatrix<f64>> = dy.iter().map(|d| d * &pd.y_inv).collect();

    let at = |p: usize, q: usize| p * n + q;
    for i in 0..m {
        for j in 0..n {
            let a = at(i, j);
            for k in 0..m {
                for l in 0..n {
                    let b = at(k, l);
                    for p in 0..m {
                        for q in 0..n {
                            let c = at(p, q);
                            let value = if k == i && p == i {
                                let mut acc = 0.0;
                                for s in 0..n {
                                    acc += (dy[at(i, l)][(q, s)] + dy[at(i, q)][(l, s)]
                                        - dy[at(i, s)][(q, l)])
                                        * pd.y_inv[(s, j)];
                                }
                                0.5 * acc
                            } else if k == i {
                                0.5 * dy_yinv[at(p, q)][(l, j)]
                            } else if p == i {
                                0.5 * dy_yinv[at(k, l)][(q, j)]
                            } else if p == k {
                                let mut acc = 0.0;
                                for s in 0..n {
                                    acc += dy[at(i, s)][(q, l)] * pd.y_inv[(s, j)];
                                }
                                -0.5 * acc
                            } else {
                                0.0
                            };
                            gamma[(a * mn + b) * mn + c] = value;
                        }
                    }
                }
            }
        }
    }

    Ok(ChristoffelTensor { m, n, dy, gamma })
}

/// Contracts the Christoffel tensor with two tangent matrices:
/// the `(i, j)` entry of the result is
/// `sum_{k,l,p,q} [E]^{k,l} [F]^{p,q} Gamma^{(i,j)}_{(k,l)(p,q)}`.
///
/// Panics on dimension mismatch.
pub fn gamma_contract(
    ct: &ChristoffelTensor,
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (m, n) = ct.dims();
    assert!(
        e.nrows() == m && e.ncols() == n && f.nrows() == m && f.ncols() == n,
        "tangent matrices must be {m}x{n}"
    );
    let mn = m * n;
    // Contract the lower indices first; ev/fv follow the row-major flattening
    // used by the gamma storage.
    let mut ev = vec![0.0; mn];
    let mut fv = vec![0.0; mn];
    for p in 0..m {
        for q in 0..n {
            ev[p * n + q] = e[(p, q)];
            fv[p * n + q] = f[(p, q)];
        }
    }
    let mut out = DMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let a = i * n + j;
            let base = a * mn * mn;
            let mut acc = 0.0;
            for (b, &eb) in ev.iter().enumerate() {
                if eb == 0.0 {
                    continue;
                }
                let row = base + b * mn;
                for (c, &fc) in fv.iter().enumerate() {
                    if fc != 0.0 {
                        acc += eb * fc * ct.gamma[row + c];
                    }
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Verifies the cached invariants of a `PointData` (used by the `check`
/// battery and tests): symmetry, positivity and Lyapunov residuals.
pub fn verify_point_invariants(plant: &Plant, pd: &PointData) -> Result<()> {
    let tols = Tolerances::default();
    let sym_y = crate::kernels::asymmetry(&pd.y);
    if sym_y > 1e-9 * max_abs(&pd.y).max(1.0) {
        return Err(Error::Numerical(format!("Y asymmetry {sym_y:.3e}")));
    }
    let (eigs, _) = crate::eig::jacobi_eigen(&((&pd.y + pd.y.transpose()) * 0.5), false)?;
    if eigs.iter().any(|&l| l <= 0.0) {
        return Err(Error::NotPositiveDefinite {
            what: "Y",
            min_eig: eigs.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    let id_res = max_abs(&(&pd.y * &pd.y_inv - DMatrix::<f64>::identity(pd.y.nrows(), pd.y.nrows())));
    if id_res > 1e-9 * pd.y_cond.max(1.0) {
        return Err(Error::Numerical(format!("Y * Y^-1 deviates by {id_res:.3e}")));
    }
    let res_y = max_abs(&(&pd.y - &pd.a_cl * &pd.y * pd.a_cl.transpose() - &pd.sigma_k));
    let p_arg = &plant.q + pd.k.transpose() * &plant.r * &pd.k;
    let res_p = max_abs(&(&pd.p - pd.a_cl.transpose() * &pd.p * &pd.a_cl - &p_arg));
    let scale_y = tols.lyap_residual * max_abs(&pd.sigma_k).max(1.0);
    let scale_p = tols.lyap_residual * max_abs(&p_arg).max(1.0);
    if res_y > scale_y || res_p > scale_p {
        return Err(Error::Numerical(format!(
            "Lyapunov residuals too large: Y {res_y:.3e}, P {res_p:.3e}"
        )));
    }
    Ok(())
}
