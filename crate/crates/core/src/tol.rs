//! Centralized numeric tolerances.
//!
//! Every threshold used by the library lives in this one record so that the
//! contracts stay auditable in a single place. The defaults are what the rest
//! of the crate (and the test suites) assume.

#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Max absolute asymmetry accepted when validating plant cost matrices.
    pub plant_symmetry: f64,
    /// Max absolute asymmetry accepted by symmetric eigenvalue routines.
    pub sym_eig_asymmetry: f64,
    /// Relative residual bound for the discrete Lyapunov solve,
    /// scaled by `max(1, ||Z||_inf)`.
    pub lyap_residual: f64,
    /// Relative singular-value cutoff for rank decisions (PBH test, output
    /// matrix rank).
    pub rank_rel: f64,
    /// Slack allowed on eigenvalues when checking positive semidefiniteness.
    pub psd_slack: f64,
    /// Iterate-difference stop for the Hewer fixed-point iteration.
    pub hewer_step: f64,
    /// Iteration cap for the Hewer fixed-point iteration.
    pub hewer_max_iters: usize,
    /// Condition-number threshold above which the metric coordinate matrix
    /// `Y` is flagged as ill-conditioned.
    pub y_condition_warn: f64,
    /// Membership tolerance for linear constraint sets.
    pub feasibility: f64,
    /// Relative residual bound for the Newton linear solve.
    pub newton_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            plant_symmetry: 1e-12,
            sym_eig_asymmetry: 1e-10,
            lyap_residual: 1e-10,
            rank_rel: 1e-9,
            psd_slack: 1e-10,
            hewer_step: 1e-12,
            hewer_max_iters: 200,
            y_condition_warn: 1e12,
            feasibility: 1e-10,
            newton_residual: 1e-10,
        }
    }
}
