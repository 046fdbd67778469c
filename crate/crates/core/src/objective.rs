//! The LQR cost `f(K) = tr(P_K Sigma1) / 2`, its gradient with respect to
//! the metric, and the ambient Hessian bilinear forms under the Riemannian
//! and Euclidean connections.
//!
//! The gradient/Hessian formulas assume `Sigma2 = 0` (the metric weight is
//! then `Y = L(A_cl, Sigma1)`); the optimizer enforces that restriction at
//! entry.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{gamma_contract, metric_inner, ChristoffelTensor, PointData};
use crate::kernels::{dlyap, Plant};

/// Which affine connection a Hessian form is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connection {
    /// The connection compatible with the metric (needs Christoffel data).
    Riemannian,
    /// The flat connection whose coefficients vanish in global coordinates.
    Euclidean,
}

/// `f(K) = tr(P_K Sigma1) / 2`, read off the point cache.
pub fn cost(pd: &PointData) -> f64 {
    pd.cost
}

/// The gradient `R K + B^T P_K A_cl`; with `Sigma2 = 0` this is the metric
/// gradient: directional derivatives satisfy `df(E) = <E, grad>`.
pub fn gradient(pd: &PointData) -> &DMatrix<f64> {
    &pd.grad
}

/// `S_K|_E = L(A_cl^T, E^T grad + grad^T E)`; symmetric and linear in `E`.
pub fn s_operator(pd: &PointData, e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let arg = e.transpose() * &pd.grad + pd.grad.transpose() * e;
    dlyap(&pd.a_cl.transpose(), &arg)
}

/// Ambient Hessian bilinear form `<Hess f[E], F>` at `pd`.
///
/// The Euclidean form is
/// `<B^T S_F A_cl, E> + <(R + B^T P B) E + B^T S_E A_cl, F>`;
/// the Riemannian form subtracts `<grad, Gamma(E, F)>` and therefore needs
/// the Christoffel tensor.
pub fn hess_form(
    plant: &Plant,
    pd: &PointData,
    ct: Option<&ChristoffelTensor>,
    connection: Connection,
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<f64> {
    let eu = euclidean_form_with(plant, pd, &s_operator(pd, e)?, &s_operator(pd, f)?, e, f);
    match connection {
        Connection::Euclidean => Ok(eu),
        Connection::Riemannian => {
            let ct = ct.ok_or_else(|| {
                Error::Contract("Riemannian Hessian form needs Christoffel data".into())
            })?;
            let correction = metric_inner(pd, &pd.grad, &gamma_contract(ct, e, f));
            Ok(eu - correction)
        }
    }
}

/// The two inner-product terms shared by both connections, with the
/// `S`-operator values supplied by the caller so that assemblies over a
/// frame can reuse them.
pub(crate) fn euclidean_form_with(
    plant: &Plant,
    pd: &PointData,
    s_e: &DMatrix<f64>,
    s_f: &DMatrix<f64>,
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> f64 {
    let bt = plant.b.transpose();
    let first = &bt * s_f * &pd.a_cl;
    let second = (&plant.r + &bt * &pd.p * &plant.b) * e + &bt * s_e * &pd.a_cl;
    metric_inner(pd, &first, e) + metric_inner(pd, &second, f)
}
