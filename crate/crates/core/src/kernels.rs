//! Dense small-matrix kernels: spectral quantities, the discrete Lyapunov
//! map `L(A, Z)` solving `X = A X A^T + Z`, its differential, the PBH
//! stabilizability test and the Hewer fixed-point reference solver.
//!
//! Everything here targets desk-scale problems (n up to a dozen or so); the
//! Lyapunov equation is solved exactly through its Kronecker-vectorized
//! linear system rather than iteratively, trading flops for determinism.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// Max-absolute-entry norm.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, &x| acc.max(x.abs()))
}

/// Largest absolute difference between a matrix and its transpose.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Exact spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Spectral radius of a square matrix via the Hessenberg-QR eigensolve.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let eigs = crate::eig::eigenvalues(m)?;
    Ok(eigs.iter().fold(0.0f64, |acc, l| acc.max(l.norm())))
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
///
/// The input must be symmetric to `tol.sym_eig_asymmetry`; the symmetrized
/// matrix `(S + S^T)/2` is what gets decomposed.
pub fn sym_extreme_eigs(s: &DMatrix<f64>) -> Result<(f64, f64)> {
    let tols = Tolerances::default();
    if s.nrows() != s.ncols() {
        return Err(Error::Dimension(format!(
            "symmetric eigenvalues need a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let asym = asymmetry(s);
    if asym > tols.sym_eig_asymmetry {
        return Err(Error::NotSymmetric {
            what: "eigenvalue input",
            asymmetry: asym,
            tol: tols.sym_eig_asymmetry,
        });
    }
    let sym = (s + s.transpose()) * 0.5;
    let (eigs, _) = crate::eig::jacobi_eigen(&sym, false)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &l in eigs.iter() {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    Ok((lo, hi))
}

/// Discrete Lyapunov map: the unique `X` with `X = A X A^T + Z` for Schur
/// stable `A`, solved exactly via the `n^2 x n^2` Kronecker system.
pub fn dlyap(a: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let tols = Tolerances::default();
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "Lyapunov A must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if z.nrows() != n || z.ncols() != n {
        return Err(Error::Dimension(format!(
            "Lyapunov Z must be {n}x{n}, got {}x{}",
            z.nrows(),
            z.ncols()
        )));
    }
    let rho = spectral_radius(a)?;
    if rho >= 1.0 {
        return Err(Error::UnstableMatrix { rho });
    }

    // Column-major vec: vec(A X A^T) = (A (x) A) vec(X).
    let kron = a.kronecker(a);
    let mut system = DMatrix::<f64>::identity(n * n, n * n);
    system -= &kron;
    let rhs = DVector::from_column_slice(z.as_slice());
    let lu = system.lu();
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("vectorized Lyapunov system is singular".into()))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());

    let residual = max_abs(&(&x - a * &x * a.transpose() - z));
    let bound = tols.lyap_residual * max_abs(z).max(1.0);
    if residual > bound {
        return Err(Error::Numerical(format!(
            "Lyapunov residual {residual:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(x)
}

/// Differential of the Lyapunov map at `(A, Z)` applied to `(E, F)`:
/// `L(A, E X A^T + A X E^T + F)` with `X = L(A, Z)`.
pub fn dlyap_differential(
    a: &DMatrix<f64>,
    z: &DMatrix<f64>,
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let x = dlyap(a, z)?;
    let arg = e * &x * a.transpose() + a * &x * e.transpose() + f;
    dlyap(a, &arg)
}

/// Does the complex matrix `[lambda I - A, B]` have full row rank?
///
/// Works on the real 2n x 2(n+m) embedding of the complex block so only a
/// real SVD is needed; complex rank r becomes real rank 2r.
fn pbh_full_rank_at(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lambda: Complex<f64>,
    rank_rel: f64,
) -> bool {
    let n = a.nrows();
    let m = b.ncols();
    let cols = n + m;
    let mut re = DMatrix::<f64>::zeros(n, cols);
    let mut im = DMatrix::<f64>::zeros(n, cols);
    for i in 0..n {
        for j in 0..n {
            re[(i, j)] = -a[(i, j)];
            if i == j {
                re[(i, j)] += lambda.re;
                im[(i, j)] = lambda.im;
            }
        }
        for j in 0..m {
            re[(i, n + j)] = b[(i, j)];
        }
    }
    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * cols);
    emb.view_mut((0, 0), (n, cols)).copy_from(&re);
    emb.view_mut((0, cols), (n, cols)).copy_from(&(-&im));
    emb.view_mut((n, 0), (n, cols)).copy_from(&im);
    emb.view_mut((n, cols), (n, cols)).copy_from(&re);

    let sv = emb.singular_values();
    let cutoff = rank_rel * sv.max();
    sv.iter().filter(|&&s| s > cutoff).count() == 2 * n
}

fn check_pair_dims(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "A must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "B must have {} rows, got {}",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(())
}

/// PBH stabilizability test: every eigenvalue of `A` with `|lambda| >= 1`
/// must leave `[lambda I - A, B]` with full row rank.
pub fn pbh_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    let tols = Tolerances::default();
    check_pair_dims(a, b)?;
    let eigs = crate::eig::eigenvalues(a)?;
    for l in eigs {
        if l.norm() >= 1.0 && !pbh_full_rank_at(a, b, l, tols.rank_rel) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// PBH controllability test: full row rank of `[lambda I - A, B]` at every
/// eigenvalue of `A`.
pub fn pbh_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    let tols = Tolerances::default();
    check_pair_dims(a, b)?;
    let eigs = crate::eig::eigenvalues(a)?;
    for l in eigs {
        if !pbh_full_rank_at(a, b, l, tols.rank_rel) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_psd(m: &DMatrix<f64>, what: &'static str, strict: bool, slack: f64) -> Result<()> {
    let (lo, hi) = sym_extreme_eigs(m)?;
    if strict {
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite { what, min_eig: lo });
        }
    } else if lo < -slack * hi.abs().max(1.0) {
        return Err(Error::NotPositiveSemidefinite { what, min_eig: lo });
    }
    Ok(())
}

/// System and cost data for a discrete-time plant.
///
/// Holds `x_{k+1} = A x_k + B u_k` with LQR weights `Q`, `R`, initial-state
/// covariance `Sigma1` and the metric weight `Sigma2`; `C` is the optional
/// output map used by output-feedback constraints.
#[derive(Debug, Clone)]
pub struct Plant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: Option<DMatrix<f64>>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub sigma1: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
}

impl Plant {
    /// Validates and builds a plant. `sigma1` defaults to the identity and
    /// `sigma2` to zero when `None`.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: Option<DMatrix<f64>>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        sigma1: Option<DMatrix<f64>>,
        sigma2: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let tols = Tolerances::default();
        check_pair_dims(&a, &b)?;
        let n = a.nrows();
        let m = b.ncols();
        let sigma1 = sigma1.unwrap_or_else(|| DMatrix::identity(n, n));
        let sigma2 = sigma2.unwrap_or_else(|| DMatrix::zeros(m, m));

        for (mat, name, rows, cols) in [
            (&q, "Q", n, n),
            (&r, "R", m, m),
            (&sigma1, "Sigma1", n, n),
            (&sigma2, "Sigma2", m, m),
        ] {
            if mat.nrows() != rows || mat.ncols() != cols {
                return Err(Error::Dimension(format!(
                    "{name} must be {rows}x{cols}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            let asym = asymmetry(mat);
            if asym > tols.plant_symmetry {
                return Err(Error::NotSymmetric {
                    what: name,
                    asymmetry: asym,
                    tol: tols.plant_symmetry,
                });
            }
        }
        check_psd(&r, "R", true, tols.psd_slack)?;
        check_psd(&sigma1, "Sigma1", true, tols.psd_slack)?;
        check_psd(&q, "Q", false, tols.psd_slack)?;
        check_psd(&sigma2, "Sigma2", false, tols.psd_slack)?;

        if !pbh_stabilizable(&a, &b)? {
            return Err(Error::NotStabilizable);
        }

        if let Some(ref cm) = c {
            let d = cm.nrows();
            if cm.ncols() != n || d > n || d == 0 {
                return Err(Error::Dimension(format!(
                    "C must be d x {n} with 0 < d <= {n}, got {}x{}",
                    cm.nrows(),
                    cm.ncols()
                )));
            }
            let sv = cm.clone().singular_values();
            let cutoff = tols.rank_rel * sv.max();
            if sv.iter().filter(|&&s| s > cutoff).count() < d {
                return Err(Error::Contract("C does not have full row rank".into()));
            }
        }

        Ok(Self {
            a,
            b,
            c,
            q,
            r,
            sigma1,
            sigma2,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.c.as_ref().map(|c| c.nrows())
    }

    /// `A + B K`.
    pub fn closed_loop(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a + &self.b * k
    }

    pub fn sigma2_is_zero(&self) -> bool {
        self.sigma2.iter().all(|&x| x == 0.0)
    }
}

/// A feedback gain together with a verification flag; the flag is only set
/// by checking `rho(A + B K) < 1` against a concrete plant.
#[derive(Debug, Clone)]
pub struct Gain {
    pub matrix: DMatrix<f64>,
    stabilizing: bool,
}

impl Gain {
    pub fn unverified(matrix: DMatrix<f64>) -> Self {
        Self {
            matrix,
            stabilizing: false,
        }
    }

    pub fn verified(plant: &Plant, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != plant.input_dim() || matrix.ncols() != plant.state_dim() {
            return Err(Error::Dimension(format!(
                "gain must be {}x{}, got {}x{}",
                plant.input_dim(),
                plant.state_dim(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let rho = spectral_radius(&plant.closed_loop(&matrix))?;
        if rho >= 1.0 {
            return Err(Error::NotStabilizing { rho });
        }
        Ok(Self {
            matrix,
            stabilizing: true,
        })
    }

    pub fn is_verified_stabilizing(&self) -> bool {
        self.stabilizing
    }
}

/// Result of the Hewer fixed-point iteration.
#[derive(Debug, Clone)]
pub struct HewerSolution {
    pub p: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub iterations: usize,
}

/// Hewer's quasi-Newton iteration for the unconstrained discrete LQR:
/// `K_{t+1} = -(B^T P_t B + R)^{-1} B^T P_t A` with
/// `P_t = L(A_cl^T, Q + K_t^T R K_t)`, run to a fixed point.
pub fn hewer_solve(plant: &Plant, k0: &DMatrix<f64>) -> Result<HewerSolution> {
    let tols = Tolerances::default();
    let rho = spectral_radius(&plant.closed_loop(k0))?;
    if rho >= 1.0 {
        return Err(Error::InfeasibleStart(format!(
            "Hewer needs a stabilizing start, rho(A+BK0) = {rho:.6}"
        )));
    }

    let mut k = k0.clone();
    for it in 0..tols.hewer_max_iters {
        let a_cl = plant.closed_loop(&k);
        let p = dlyap(&a_cl.transpose(), &(&plant.q + k.transpose() * &plant.r * &k))?;
        let lhs = plant.b.transpose() * &p * &plant.b + &plant.r;
        let rhs = plant.b.transpose() * &p * &plant.a;
        let k_next = -lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("Hewer update system is singular".into()))?;
        let step = max_abs(&(&k_next - &k));
        k = k_next;
        if step < tols.hewer_step {
            let a_cl = plant.closed_loop(&k);
            let rho = spectral_radius(&a_cl)?;
            if rho >= 1.0 {
                return Err(Error::Numerical(format!(
                    "Hewer fixed point is not stabilizing (rho = {rho:.6})"
                )));
            }
            let p = dlyap(&a_cl.transpose(), &(&plant.q + k.transpose() * &plant.r * &k))?;
            return Ok(HewerSolution {
                p,
                k,
                iterations: it + 1,
            });
        }
    }
    Err(Error::NonConvergence {
        iters: tols.hewer_max_iters,
    })
}
