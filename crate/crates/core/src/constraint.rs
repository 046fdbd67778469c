//! Linear constraint sets over feedback gains, their tangent frames, the
//! metric-weighted tangential projection and the restricted Newton data.
//!
//! Three kinds are supported: unconstrained gains, a hard sparsity pattern
//! (nonzero entries only on a prescribed index set) and static output
//! feedback `K = L C`. All three share one code path: a global frame of
//! basis matrices plus a Gram solve in the metric at the current point.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{gamma_contract, metric_inner, ChristoffelTensor, PointData};
use crate::kernels::{max_abs, Plant};
use crate::objective::{euclidean_form_with, s_operator, Connection};
use crate::tol::Tolerances;

/// A linear submanifold descriptor for the admissible gains.
#[derive(Debug, Clone)]
pub enum Constraint {
    /// All of the m x n gain space.
    Unconstrained { m: usize, n: usize },
    /// Gains supported on the index set `pattern` (0-based, sorted
    /// row-major, no duplicates).
    Sparsity {
        m: usize,
        n: usize,
        pattern: Vec<(usize, usize)>,
    },
    /// Gains of the form `K = L C` for the prescribed full-row-rank `C`.
    OutputFeedback { m: usize, c: DMatrix<f64> },
}

impl Constraint {
    pub fn unconstrained(m: usize, n: usize) -> Self {
        Constraint::Unconstrained { m, n }
    }

    /// Validates index ranges and duplicates; the pattern is sorted
    /// row-major so frame ordering is deterministic.
    pub fn sparsity(m: usize, n: usize, mut pattern: Vec<(usize, usize)>) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Contract("sparsity pattern must be nonempty".into()));
        }
        pattern.sort();
        for w in pattern.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Contract(format!(
                    "duplicate sparsity index ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        if let Some(&(i, j)) = pattern.iter().find(|&&(i, j)| i >= m || j >= n) {
            return Err(Error::Contract(format!(
                "sparsity index ({i}, {j}) out of range for a {m}x{n} gain"
            )));
        }
        Ok(Constraint::Sparsity { m, n, pattern })
    }

    /// Validates that `C` has full row rank.
    pub fn output_feedback(m: usize, c: DMatrix<f64>) -> Result<Self> {
        let d = c.nrows();
        if d == 0 || d > c.ncols() {
            return Err(Error::Dimension(format!(
                "C must be d x n with 0 < d <= n, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        let sv = c.clone().singular_values();
        let cutoff = Tolerances::default().rank_rel * sv.max();
        if sv.iter().filter(|&&s| s > cutoff).count() < d {
            return Err(Error::Contract("C does not have full row rank".into()));
        }
        Ok(Constraint::OutputFeedback { m, c })
    }

    /// Gain dimensions `(m, n)`.
    pub fn gain_dims(&self) -> (usize, usize) {
        match self {
            Constraint::Unconstrained { m, n } => (*m, *n),
            Constraint::Sparsity { m, n, .. } => (*m, *n),
            Constraint::OutputFeedback { m, c } => (*m, c.ncols()),
        }
    }

    /// Dimension of the tangent frame: `mn`, `|D|` or `m d`.
    pub fn frame_dim(&self) -> usize {
        match self {
            Constraint::Unconstrained { m, n } => m * n,
            Constraint::Sparsity { pattern, .. } => pattern.len(),
            Constraint::OutputFeedback { m, c } => m * c.nrows(),
        }
    }

    /// The global frame basis, in deterministic row-major order.
    pub fn frame(&self) -> Vec<DMatrix<f64>> {
        let (m, n) = self.gain_dims();
        match self {
            Constraint::Unconstrained { .. } => (0..m * n)
                .map(|a| {
                    let mut e = DMatrix::zeros(m, n);
                    e[(a / n, a % n)] = 1.0;
                    e
                })
                .collect(),
            Constraint::Sparsity { pattern, .. } => pattern
                .iter()
                .map(|&(i, j)| {
                    let mut e = DMatrix::zeros(m, n);
                    e[(i, j)] = 1.0;
                    e
                })
                .collect(),
            Constraint::OutputFeedback { m, c } => {
                let d = c.nrows();
                (0..m * d)
                    .map(|a| {
                        let (i, j) = (a / d, a % d);
                        let mut out = DMatrix::zeros(*m, c.ncols());
                        out.row_mut(i).copy_from(&c.row(j));
                        out
                    })
                    .collect()
            }
        }
    }

    /// Expands frame coordinates into a gain matrix; membership is exact by
    /// construction.
    pub fn assemble(&self, coords: &DVector<f64>) -> DMatrix<f64> {
        assert_eq!(coords.len(), self.frame_dim(), "coordinate length");
        let (m, n) = self.gain_dims();
        match self {
            Constraint::Unconstrained { .. } => {
                DMatrix::from_row_slice(m, n, coords.as_slice())
            }
            Constraint::Sparsity { pattern, .. } => {
                let mut k = DMatrix::zeros(m, n);
                for (a, &(i, j)) in pattern.iter().enumerate() {
                    k[(i, j)] = coords[a];
                }
                k
            }
            Constraint::OutputFeedback { m, c } => {
                let d = c.nrows();
                let l = DMatrix::from_row_slice(*m, d, coords.as_slice());
                l * c
            }
        }
    }

    /// Extracts frame coordinates from a member gain, rejecting matrices
    /// outside the constraint set (to the feasibility tolerance).
    pub fn coords_of(&self, k: &DMatrix<f64>) -> Result<DVector<f64>> {
        let (m, n) = self.gain_dims();
        if k.nrows() != m || k.ncols() != n {
            return Err(Error::Dimension(format!(
                "gain must be {m}x{n}, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        let tol = Tolerances::default().feasibility * max_abs(k).max(1.0);
        match self {
            Constraint::Unconstrained { .. } => Ok(DVector::from_iterator(
                m * n,
                (0..m * n).map(|a| k[(a / n, a % n)]),
            )),
            Constraint::Sparsity { pattern, .. } => {
                for i in 0..m {
                    for j in 0..n {
                        if !pattern.contains(&(i, j)) && k[(i, j)].abs() > tol {
                            return Err(Error::Contract(format!(
                                "gain entry ({i}, {j}) = {:.3e} outside the sparsity pattern",
                                k[(i, j)]
                            )));
                        }
                    }
                }
                Ok(DVector::from_iterator(
                    pattern.len(),
                    pattern.iter().map(|&(i, j)| k[(i, j)]),
                ))
            }
            Constraint::OutputFeedback { m, c } => {
                // L = K C^T (C C^T)^{-1}, then check K = L C.
                let d = c.nrows();
                let gram = c * c.transpose();
                let l = gram
                    .lu()
                    .solve(&(c * k.transpose()))
                    .ok_or_else(|| Error::Numerical("C C^T is singular".into()))?
                    .transpose();
                if max_abs(&(k - &l * c)) > tol {
                    return Err(Error::Contract(
                        "gain is not of the form L C for the prescribed C".into(),
                    ));
                }
                Ok(DVector::from_iterator(
                    m * d,
                    (0..m * d).map(|a| l[(a / d, a % d)]),
                ))
            }
        }
    }

    /// Constraint membership to the feasibility tolerance.
    pub fn is_member(&self, k: &DMatrix<f64>) -> bool {
        self.coords_of(k).is_ok()
    }
}

/// Gram matrix `G_ab = <frame_a, frame_b>_Y` of a frame at a point.
pub fn frame_gram(pd: &PointData, frame: &[DMatrix<f64>]) -> DMatrix<f64> {
    let dim = frame.len();
    let mut g = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = metric_inner(pd, &frame[a], &frame[b]);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

fn gram_solve(
    pd: &PointData,
    frame: &[DMatrix<f64>],
    rhs: DVector<f64>,
) -> Result<DVector<f64>> {
    let gram = frame_gram(pd, frame);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("frame Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// Metric-orthogonal projection of an ambient tangent matrix onto the
/// constraint subspace: the unique frame combination `E*` with
/// `<E - E*, frame_a>_Y = 0` for every frame element.
pub fn tangential_projection(
    constraint: &Constraint,
    pd: &PointData,
    e: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    Ok(project_with_coords(constraint, pd, e)?.1)
}

fn project_with_coords(
    constraint: &Constraint,
    pd: &PointData,
    e: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (m, n) = constraint.gain_dims();
    if e.nrows() != m || e.ncols() != n {
        return Err(Error::Dimension(format!(
            "tangent matrix must be {m}x{n}, got {}x{}",
            e.nrows(),
            e.ncols()
        )));
    }
    if let Constraint::Unconstrained { .. } = constraint {
        return Ok((constraint.coords_of(e)?, e.clone()));
    }
    let frame = constraint.frame();
    let rhs = DVector::from_iterator(
        frame.len(),
        frame.iter().map(|b| metric_inner(pd, e, b)),
    );
    let coords = gram_solve(pd, &frame, rhs)?;
    let projected = constraint.assemble(&coords);
    Ok((coords, projected))
}

/// The restricted gradient: the projection of the ambient gradient onto the
/// constraint subspace, returned both as frame coordinates and as a matrix.
pub fn restricted_gradient(
    constraint: &Constraint,
    pd: &PointData,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    project_with_coords(constraint, pd, &pd.grad)
}

/// The restricted Hessian assembled in the frame basis. Euclidean entries
/// are the two shared inner-product terms; Riemannian entries subtract
/// `<grad h, Gamma(E_a, E_b)>` with the projected gradient.
pub fn restricted_hessian_matrix(
    plant: &Plant,
    constraint: &Constraint,
    pd: &PointData,
    ct: Option<&ChristoffelTensor>,
    connection: Connection,
) -> Result<DMatrix<f64>> {
    if connection == Connection::Riemannian && ct.is_none() {
        return Err(Error::Contract(
            "Riemannian restricted Hessian needs Christoffel data".into(),
        ));
    }
    let frame = constraint.frame();
    let dim = frame.len();
    let s_vals: Vec<DMatrix<f64>> = frame
        .iter()
        .map(|e| s_operator(pd, e))
        .collect::<Result<_>>()?;
    let grad_h = match connection {
        Connection::Riemannian => Some(restricted_gradient(constraint, pd)?.1),
        Connection::Euclidean => None,
    };

    let mut h = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let mut entry =
                euclidean_form_with(plant, pd, &s_vals[a], &s_vals[b], &frame[a], &frame[b]);
            if let (Some(ct), Some(gh)) = (ct, grad_h.as_ref()) {
                entry -= metric_inner(pd, gh, &gamma_contract(ct, &frame[a], &frame[b]));
            }
            h[(a, b)] = entry;
        }
    }
    Ok(h)
}
