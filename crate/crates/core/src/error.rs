use thiserror::Error;

/// Errors surfaced by the kernels, geometry and optimizer layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} is not symmetric: max asymmetry {asymmetry:.3e} exceeds {tol:.1e}")]
    NotSymmetric {
        what: &'static str,
        asymmetry: f64,
        tol: f64,
    },

    #[error("{what} must be positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { what: &'static str, min_eig: f64 },

    #[error("{what} must be positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositiveSemidefinite { what: &'static str, min_eig: f64 },

    #[error("matrix is not Schur stable: spectral radius {rho:.6}")]
    UnstableMatrix { rho: f64 },

    #[error("gain is not stabilizing: spectral radius of A+BK is {rho:.6}")]
    NotStabilizing { rho: f64 },

    #[error("the pair (A, B) is not stabilizable")]
    NotStabilizable,

    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),

    #[error("iteration did not converge within {iters} iterations")]
    NonConvergence { iters: usize },

    #[error("restricted Hessian is not positive definite (min eigenvalue {min_eig:.3e})")]
    HessianNotPd { min_eig: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
