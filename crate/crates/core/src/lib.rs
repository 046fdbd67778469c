//! Policy optimization over linearly constrained sets of Schur-stabilizing
//! static feedback gains.
//!
//! The set `S = {K : rho(A + B K) < 1}` carries a Riemannian metric
//! `<V, W>_K = tr(V^T W Y_K)` with `Y_K = L(A + B K, Sigma_K)` built from
//! the discrete Lyapunov map `L`. This crate computes that geometry (metric,
//! Christoffel symbols, restricted gradients and Hessians on linear
//! constraint sets such as sparsity patterns and static output feedback) and
//! runs a Newton-type iteration whose stepsize is bounded by a stability
//! certificate, so every iterate stays stabilizing and feasible without a
//! retraction or line search. Euclidean-connection Newton, projected
//! gradient and Hewer's quasi-Newton iteration are included as baselines.

pub mod constraint;
pub mod eig;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod objective;
pub mod optimizer;
pub mod tol;

pub use constraint::{
    frame_gram, restricted_gradient, restricted_hessian_matrix, tangential_projection, Constraint,
};
pub use error::{Error, Result};
pub use geometry::{
    christoffel, dy_table, gamma_contract, metric_inner, metric_norm, point_data,
    ChristoffelTensor, PointData,
};
pub use kernels::{
    dlyap, dlyap_differential, hewer_solve, max_abs, pbh_controllable, pbh_stabilizable,
    spectral_norm, spectral_radius, sym_extreme_eigs, Gain, HewerSolution, Plant,
};
pub use objective::{cost, gradient, hess_form, s_operator, Connection};
pub use optimizer::{
    hewer_trace, newton_direction, projected_gradient, qmap, rc_newton, run,
    stability_certificate, IndefinitePolicy, IterationRecord, IterationTrace, Method, NewtonStep,
    RunSettings, RunStatus,
};
pub use tol::Tolerances;
