//! Newton-type policy iteration on a constrained set of stabilizing gains.
//!
//! One iteration solves the restricted Newton system in the constraint
//! frame, computes the stability certificate along the direction and steps
//! with `eta = min(certificate, 1)`. Because the constraint set is linear
//! and the certificate bounds the stepsize, every iterate stays feasible
//! and stabilizing without any retraction or line search.

use nalgebra::{DMatrix, DVector};

use crate::constraint::{restricted_gradient, restricted_hessian_matrix, Constraint};
use crate::error::{Error, Result};
use crate::geometry::{christoffel, metric_inner, metric_norm, point_data, PointData};
use crate::kernels::{dlyap, max_abs, spectral_norm, spectral_radius, sym_extreme_eigs, Gain, Plant};
use crate::objective::Connection;
use crate::tol::Tolerances;

/// Which iteration to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Newton with the metric-compatible connection.
    RcNewtonRiemannian,
    /// Newton with the flat connection.
    RcNewtonEuclidean,
    /// Constant-stepsize projected gradient baseline.
    ProjectedGradient,
    /// Hewer's quasi-Newton reference (unconstrained only).
    Hewer,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::RcNewtonRiemannian => "rcn_riemannian",
            Method::RcNewtonEuclidean => "rcn_euclidean",
            Method::ProjectedGradient => "projected_gradient",
            Method::Hewer => "hewer",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rcn_riemannian" => Ok(Method::RcNewtonRiemannian),
            "rcn_euclidean" => Ok(Method::RcNewtonEuclidean),
            "projected_gradient" => Ok(Method::ProjectedGradient),
            "hewer" => Ok(Method::Hewer),
            other => Err(Error::Contract(format!("unknown method '{other}'"))),
        }
    }
}

/// What to do when the restricted Hessian loses positive definiteness
/// mid-run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndefinitePolicy {
    /// Stop with `RunStatus::HessianNotPd` (default).
    #[default]
    FailFast,
    /// Keep solving the (indefinite) Newton system until the iteration cap.
    Continue,
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub method: Method,
    /// Stop when the metric norm of the restricted gradient drops below
    /// this.
    pub grad_tol: f64,
    /// Secondary stop on the max-abs difference of consecutive iterates.
    pub iterate_tol: f64,
    pub max_iters: usize,
    /// Ridge added to `Q + K^T R K` when `Q` is only semidefinite.
    pub qmap_epsilon: f64,
    /// Constant stepsize override for projected gradient; derived from the
    /// certificate at the start when absent.
    pub pg_stepsize: Option<f64>,
    pub on_indefinite: IndefinitePolicy,
}

impl RunSettings {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            grad_tol: 1e-10,
            iterate_tol: 1e-12,
            max_iters: 500,
            qmap_epsilon: 1e-8,
            pg_stepsize: None,
            on_indefinite: IndefinitePolicy::FailFast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIters,
    HessianNotPd,
    InfeasibleStart,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max_iters",
            RunStatus::HessianNotPd => "hessian_not_pd",
            RunStatus::InfeasibleStart => "infeasible_start",
        }
    }
}

/// One per-iterate row of a run. The trailing fields describe the step
/// taken FROM this iterate and are absent on the final row.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub t: usize,
    pub k: DMatrix<f64>,
    pub cost: f64,
    pub grad_norm_riem: f64,
    pub certificate: Option<f64>,
    pub stepsize: Option<f64>,
    pub hessian_min_eig: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
}

impl IterationTrace {
    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn final_k(&self) -> Option<&DMatrix<f64>> {
        self.records.last().map(|r| &r.k)
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.t)
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// The positive-definite weight used by the certificate:
/// `Q + K^T R K`, plus `epsilon I` when `Q` is singular or indefinite.
pub fn qmap(plant: &Plant, k: &DMatrix<f64>, epsilon: f64) -> DMatrix<f64> {
    let mut qk = &plant.q + k.transpose() * &plant.r * k;
    let (q_min, _) = sym_extreme_eigs(&plant.q).expect("plant Q was validated symmetric");
    if q_min <= 0.0 {
        for i in 0..qk.nrows() {
            qk[(i, i)] += epsilon;
        }
    }
    qk
}

/// The stability certificate along direction `g_dir`:
/// `s_K = min_eig(Q_K) / (2 max_eig(L(A_cl^T, Q_K)) ||B G||_2)`.
///
/// Any stepsize in `[0, s_K]` keeps `K + eta G` stabilizing. Returns
/// `+inf` when `B G` vanishes (the closed loop does not move).
pub fn stability_certificate(
    plant: &Plant,
    pd: &PointData,
    g_dir: &DMatrix<f64>,
    qmat: &DMatrix<f64>,
) -> Result<f64> {
    let (q_min, _) = sym_extreme_eigs(qmat)?;
    if q_min <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            what: "certificate weight Q_K",
            min_eig: q_min,
        });
    }
    let bg = spectral_norm(&(&plant.b * g_dir));
    if bg == 0.0 {
        return Ok(f64::INFINITY);
    }
    let p_q = dlyap(&pd.a_cl.transpose(), qmat)?;
    let (_, p_max) = sym_extreme_eigs(&p_q)?;
    Ok(q_min / (2.0 * p_max * bg))
}

/// A solved Newton step in the constraint frame.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub coords: DVector<f64>,
    pub matrix: DMatrix<f64>,
    pub min_eig: f64,
}

struct NewtonSystem {
    coords: DVector<f64>,
    min_eig: f64,
}

/// Solves `H c = -b` through a symmetric eigendecomposition of the
/// symmetrized `H`, so the minimum eigenvalue comes out of the same
/// factorization.
fn solve_newton_system(h: &DMatrix<f64>, b: &DVector<f64>) -> Result<NewtonSystem> {
    let tols = Tolerances::default();
    let h_sym = (h + h.transpose()) * 0.5;
    let (eigenvalues, vectors) = crate::eig::jacobi_eigen(&h_sym, true)?;
    let vectors = vectors.expect("vectors requested");
    let min_eig = eigenvalues.iter().fold(f64::INFINITY, |a, &l| a.min(l));
    let scale = eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    if eigenvalues.iter().any(|&l| l.abs() <= 1e-14 * scale.max(1e-300)) {
        return Err(Error::Numerical(
            "restricted Hessian is numerically singular".into(),
        ));
    }
    // c = -V diag(1/lambda) V^T b
    let vt_b = vectors.transpose() * b;
    let scaled = DVector::from_iterator(
        vt_b.len(),
        vt_b.iter().zip(eigenvalues.iter()).map(|(&x, &l)| -x / l),
    );
    let coords = &vectors * scaled;

    let residual = (h_sym * &coords + b).abs().max();
    let bound = tols.newton_residual * b.abs().max().max(1.0);
    if residual > bound {
        return Err(Error::Numerical(format!(
            "Newton system residual {residual:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(NewtonSystem { coords, min_eig })
}

/// Solves the restricted Newton equation `Hess h[G] = -grad h` in the
/// constraint frame. Fails with `HessianNotPd` when the restricted Hessian
/// is not positive definite.
pub fn newton_direction(
    plant: &Plant,
    constraint: &Constraint,
    pd: &PointData,
    ct: Option<&crate::geometry::ChristoffelTensor>,
    connection: Connection,
) -> Result<NewtonStep> {
    let h = restricted_hessian_matrix(plant, constraint, pd, ct, connection)?;
    let b = newton_rhs(constraint, pd)?;
    let system = solve_newton_system(&h, &b)?;
    if system.min_eig <= 0.0 {
        return Err(Error::HessianNotPd {
            min_eig: system.min_eig,
        });
    }
    let matrix = constraint.assemble(&system.coords);
    Ok(NewtonStep {
        coords: system.coords,
        matrix,
        min_eig: system.min_eig,
    })
}

fn newton_rhs(constraint: &Constraint, pd: &PointData) -> Result<DVector<f64>> {
    let (_, grad_h) = restricted_gradient(constraint, pd)?;
    let frame = constraint.frame();
    Ok(DVector::from_iterator(
        frame.len(),
        frame.iter().map(|e| metric_inner(pd, &grad_h, e)),
    ))
}

fn require_sigma2_zero(plant: &Plant) -> Result<()> {
    if !plant.sigma2_is_zero() {
        return Err(Error::Contract(
            "the LQR objective requires Sigma2 = 0".into(),
        ));
    }
    Ok(())
}

fn feasible_start(
    plant: &Plant,
    constraint: &Constraint,
    k0: &Gain,
) -> std::result::Result<DVector<f64>, IterationTrace> {
    let infeasible = || IterationTrace {
        records: Vec::new(),
        status: RunStatus::InfeasibleStart,
    };
    let rho = match spectral_radius(&plant.closed_loop(&k0.matrix)) {
        Ok(r) => r,
        Err(_) => return Err(infeasible()),
    };
    if rho >= 1.0 {
        return Err(infeasible());
    }
    match constraint.coords_of(&k0.matrix) {
        Ok(c) => Ok(c),
        Err(_) => Err(infeasible()),
    }
}

/// Newton iteration with the stability-certificate stepsize
/// `eta_t = min(s_{K_t}, 1)`; the connection is picked by
/// `settings.method`.
pub fn rc_newton(
    plant: &Plant,
    constraint: &Constraint,
    k0: &Gain,
    settings: &RunSettings,
) -> Result<IterationTrace> {
    require_sigma2_zero(plant)?;
    let connection = match settings.method {
        Method::RcNewtonRiemannian => Connection::Riemannian,
        Method::RcNewtonEuclidean => Connection::Euclidean,
        _ => {
            return Err(Error::Contract(
                "rc_newton drives the two Newton methods only".into(),
            ))
        }
    };
    let mut coords = match feasible_start(plant, constraint, k0) {
        Ok(c) => c,
        Err(trace) => return Ok(trace),
    };

    let mut records = Vec::new();
    let mut prev_k: Option<DMatrix<f64>> = None;
    let mut t = 0usize;
    loop {
        let k = constraint.assemble(&coords);
        let pd = point_data(plant, &k)?;
        let (_, grad_h) = restricted_gradient(constraint, &pd)?;
        let grad_norm = metric_norm(&pd, &grad_h);

        let mut record = IterationRecord {
            t,
            k: k.clone(),
            cost: pd.cost,
            grad_norm_riem: grad_norm,
            certificate: None,
            stepsize: None,
            hessian_min_eig: None,
        };

        if grad_norm < settings.grad_tol
            || prev_k
                .as_ref()
                .is_some_and(|p| max_abs(&(&k - p)) < settings.iterate_tol)
        {
            records.push(record);
            return Ok(IterationTrace {
                records,
                status: RunStatus::Converged,
            });
        }
        if t >= settings.max_iters {
            records.push(record);
            return Ok(IterationTrace {
                records,
                status: RunStatus::MaxIters,
            });
        }

        let ct = match connection {
            Connection::Riemannian => Some(christoffel(plant, &pd)?),
            Connection::Euclidean => None,
        };
        let h = restricted_hessian_matrix(plant, constraint, &pd, ct.as_ref(), connection)?;
        let b = newton_rhs(constraint, &pd)?;
        let system = solve_newton_system(&h, &b)?;
        record.hessian_min_eig = Some(system.min_eig);
        if system.min_eig <= 0.0 && settings.on_indefinite == IndefinitePolicy::FailFast {
            records.push(record);
            return Ok(IterationTrace {
                records,
                status: RunStatus::HessianNotPd,
            });
        }

        let direction = constraint.assemble(&system.coords);
        let qk = qmap(plant, &k, settings.qmap_epsilon);
        let certificate = stability_certificate(plant, &pd, &direction, &qk)?;
        let eta = certificate.min(1.0);
        record.certificate = Some(certificate);
        record.stepsize = Some(eta);
        records.push(record);

        coords += system.coords * eta;
        prev_k = Some(k);
        t += 1;
    }
}

/// Projected gradient with a constant stepsize derived from the certificate
/// at the start; the step is halved (and the step retried) whenever a trial
/// iterate is non-stabilizing or increases the cost, so accepted iterates
/// stay stabilizing with non-increasing cost.
pub fn projected_gradient(
    plant: &Plant,
    constraint: &Constraint,
    k0: &Gain,
    settings: &RunSettings,
) -> Result<IterationTrace> {
    require_sigma2_zero(plant)?;
    let mut coords = match feasible_start(plant, constraint, k0) {
        Ok(c) => c,
        Err(trace) => return Ok(trace),
    };

    let mut records = Vec::new();
    let mut eta: Option<f64> = settings.pg_stepsize;
    let mut pd = point_data(plant, &constraint.assemble(&coords))?;
    let mut prev_k: Option<DMatrix<f64>> = None;
    let mut t = 0usize;
    loop {
        let k = pd.k.clone();
        let (grad_coords, grad_h) = restricted_gradient(constraint, &pd)?;
        let grad_norm = metric_norm(&pd, &grad_h);

        let mut record = IterationRecord {
            t,
            k: k.clone(),
            cost: pd.cost,
            grad_norm_riem: grad_norm,
            certificate: None,
            stepsize: None,
            hessian_min_eig: None,
        };

        if grad_norm < settings.grad_tol
            || prev_k
                .as_ref()
                .is_some_and(|p| max_abs(&(&k - p)) < settings.iterate_tol)
        {
            records.push(record);
            return Ok(IterationTrace {
                records,
                status: RunStatus::Converged,
            });
        }
        if t >= settings.max_iters {
            records.push(record);
            return Ok(IterationTrace {
                records,
                status: RunStatus::MaxIters,
            });
        }

        let step = match eta {
            Some(e) => e,
            None => {
                let qk = qmap(plant, &k, settings.qmap_epsilon);
                let s = stability_certificate(plant, &pd, &(-&grad_h), &qk)?;
                (0.5 * s).min(1.0)
            }
        };
        let mut step = step;
        let accepted = loop {
            if step < 1e-300 {
                break None;
            }
            let trial = &coords - &grad_coords * step;
            let k_trial = constraint.assemble(&trial);
            if spectral_radius(&plant.closed_loop(&k_trial))? >= 1.0 {
                step *= 0.5;
                continue;
            }
            let pd_trial = point_data(plant, &k_trial)?;
            if pd_trial.cost > pd.cost {
                step *= 0.5;
                continue;
            }
            break Some((trial, pd_trial));
        };
        let Some((next_coords, next_pd)) = accepted else {
            records.push(record);
            return Ok(IterationTrace {
                records,
                status: RunStatus::MaxIters,
            });
        };
        eta = Some(step);
        record.stepsize = Some(step);
        records.push(record);

        coords = next_coords;
        prev_k = Some(k);
        pd = next_pd;
        t += 1;
    }
}

/// Hewer's update as a traced run (unconstrained problems only); the unit
/// stepsize is recorded explicitly.
pub fn hewer_trace(
    plant: &Plant,
    constraint: &Constraint,
    k0: &Gain,
    settings: &RunSettings,
) -> Result<IterationTrace> {
    require_sigma2_zero(plant)?;
    if !matches!(constraint, Constraint::Unconstrained { .. }) {
        return Err(Error::Contract(
            "the Hewer method only applies to unconstrained problems".into(),
        ));
    }
    let coords = match feasible_start(plant, constraint, k0) {
        Ok(c) => c,
        Err(trace) => return Ok(trace),
    };

    let mut records = Vec::new();
    let mut k = constraint.assemble(&coords);
    let mut prev_k: Option<DMatrix<f64>> = None;
    let mut t = 0usize;
    loop {
        let pd = point_data(plant, &k)?;
        let grad_norm = metric_norm(&pd, &pd.grad);
        let mut record = IterationRecord {
            t,
            k: k.clone(),
            cost: pd.cost,
            grad_norm_riem: grad_norm,
            certificate: None,
            stepsize: None,
            hessian_min_eig: None,
        };
        if grad_norm < settings.grad_tol
            || prev_k
                .as_ref()
                .is_some_and(|p| max_abs(&(&k - p)) < settings.iterate_tol)
        {
            records.push(record);
            return Ok(IterationTrace {
                records,
                status: RunStatus::Converged,
            });
        }
        if t >= settings.max_iters {
            records.push(record);
            return Ok(IterationTrace {
                records,
                status: RunStatus::MaxIters,
            });
        }

        let lhs = plant.b.transpose() * &pd.p * &plant.b + &plant.r;
        let rhs = plant.b.transpose() * &pd.p * &plant.a;
        let k_next = -lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("Hewer update system is singular".into()))?;
        record.stepsize = Some(1.0);
        records.push(record);
        prev_k = Some(k);
        k = k_next;
        t += 1;
    }
}

/// Dispatches on `settings.method`.
pub fn run(
    plant: &Plant,
    constraint: &Constraint,
    k0: &Gain,
    settings: &RunSettings,
) -> Result<IterationTrace> {
    match settings.method {
        Method::RcNewtonRiemannian | Method::RcNewtonEuclidean => {
            rc_newton(plant, constraint, k0, settings)
        }
        Method::ProjectedGradient => projected_gradient(plant, constraint, k0, settings),
        Method::Hewer => hewer_trace(plant, constraint, k0, settings),
    }
}
