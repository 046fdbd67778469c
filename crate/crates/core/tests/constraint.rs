//! Tangential projection and restricted Newton-data tests: defining
//! equations, metric minimality, self-adjointness and difference stencils.

mod common;

use common::*;
use gainopt_core::{
    christoffel, frame_gram, hewer_solve, max_abs, metric_inner, metric_norm, point_data,
    restricted_gradient, restricted_hessian_matrix, tangential_projection, Connection, Constraint,
    Gain, Method, RunSettings,
};
use nalgebra::DMatrix;
use rand::RngCore;

#[test]
fn olqr_projection_satisfies_defining_equation_and_minimality() {
    let plant = example2_plant_with_output();
    let c = plant.c.clone().unwrap();
    let cons = Constraint::output_feedback(2, c.clone()).unwrap();
    let k0 = cons.assemble(&nalgebra::DVector::from_vec(vec![0.0, -0.6]));
    let pd = point_data(&plant, &k0).unwrap();
    let mut r = rng(401);
    for _ in 0..5 {
        let e = random_matrix(&mut r, 2, 2, 1.0);
        let proj = tangential_projection(&cons, &pd, &e).unwrap();
        // Defining equation: L* (C Y C^T) = E Y C^T with proj = L* C.
        let l = cons.coords_of(&proj).unwrap();
        let l = DMatrix::from_row_slice(2, 1, l.as_slice());
        let lhs = &l * (&c * &pd.y * c.transpose());
        let rhs = &e * &pd.y * c.transpose();
        assert!(max_abs(&(&lhs - &rhs)) < 1e-9 * max_abs(&rhs).max(1.0));
        // Metric minimality over random feasible candidates.
        let dist = |cand: &DMatrix<f64>| {
            let diff = &e - cand;
            metric_inner(&pd, &diff, &diff)
        };
        let best = dist(&proj);
        for _ in 0..100 {
            let cand = cons.assemble(&nalgebra::DVector::from_vec(vec![
                (r.next_u32() as f64 / u32::MAX as f64 - 0.5) * 4.0,
                (r.next_u32() as f64 / u32::MAX as f64 - 0.5) * 4.0,
            ]));
            assert!(dist(&cand) >= best - 1e-9 * best.max(1.0));
        }
    }
}

#[test]
fn projection_is_idempotent_and_self_adjoint() {
    let mut r = rng(402);
    for kind in 0..3 {
        let plant = random_plant(&mut r, 3, 2, 0.6, false);
        let cons = match kind {
            0 => Constraint::unconstrained(2, 3),
            1 => Constraint::sparsity(2, 3, vec![(0, 0), (1, 1), (1, 2)]).unwrap(),
            _ => Constraint::output_feedback(
                2,
                DMatrix::from_row_slice(1, 3, &[1.0, 0.4, -0.2]),
            )
            .unwrap(),
        };
        // Start from a feasible stabilizing point (zero gain is feasible for
        // all three kinds here since the plants are open-loop stable).
        let k = DMatrix::<f64>::zeros(2, 3);
        let pd = point_data(&plant, &k).unwrap();
        for _ in 0..5 {
            let e = random_matrix(&mut r, 2, 3, 1.0);
            let f = random_matrix(&mut r, 2, 3, 1.0);
            let pe = tangential_projection(&cons, &pd, &e).unwrap();
            let pf = tangential_projection(&cons, &pd, &f).unwrap();
            let twice = tangential_projection(&cons, &pd, &pe).unwrap();
            assert!(max_abs(&(&twice - &pe)) < 1e-10 * max_abs(&pe).max(1.0));
            let scale = metric_norm(&pd, &e) * metric_norm(&pd, &f);
            let lhs = metric_inner(&pd, &pe, &f);
            let rhs = metric_inner(&pd, &e, &pf);
            assert!((lhs - rhs).abs() <= 1e-9 * scale.max(1.0));
            // The residual is g-orthogonal to every frame element.
            let resid = &e - &pe;
            for basis in cons.frame() {
                assert!(metric_inner(&pd, &resid, &basis).abs() <= 1e-9 * scale.max(1.0));
            }
        }
    }
}

#[test]
fn projection_preserves_feasibility_exactly() {
    let mut r = rng(403);
    let plant = random_plant(&mut r, 3, 2, 0.6, false);
    let sparse = Constraint::sparsity(2, 3, vec![(0, 1), (1, 0)]).unwrap();
    let pd = point_data(&plant, &DMatrix::zeros(2, 3)).unwrap();
    let e = random_matrix(&mut r, 2, 3, 1.0);
    let proj = tangential_projection(&sparse, &pd, &e).unwrap();
    // Exact zeros off-pattern, not merely small.
    assert_eq!(proj[(0, 0)], 0.0);
    assert_eq!(proj[(0, 2)], 0.0);
    assert_eq!(proj[(1, 1)], 0.0);
    assert_eq!(proj[(1, 2)], 0.0);
}

#[test]
fn frame_gram_is_positive_definite_at_feasible_points() {
    let mut r = rng(404);
    for _ in 0..10 {
        let plant = random_plant(&mut r, 3, 2, 0.6, false);
        let cons = Constraint::sparsity(2, 3, vec![(0, 0), (0, 2), (1, 1)]).unwrap();
        let k = DMatrix::<f64>::zeros(2, 3);
        let pd = point_data(&plant, &k).unwrap();
        let gram = frame_gram(&pd, &cons.frame());
        let (lo, _) = gainopt_core::sym_extreme_eigs(&gram).unwrap();
        assert!(lo > 0.0, "Gram min eigenvalue {lo}");
    }
}

#[test]
fn restricted_gradient_unconstrained_is_ambient() {
    let mut r = rng(405);
    let plant = random_plant(&mut r, 3, 2, 0.6, false);
    let k = random_stabilizing_k(&mut r, &plant);
    let pd = point_data(&plant, &k).unwrap();
    let cons = Constraint::unconstrained(2, 3);
    let (_, mat) = restricted_gradient(&cons, &pd).unwrap();
    assert!(max_abs(&(&mat - &pd.grad)) < 1e-12 * max_abs(&pd.grad).max(1.0));
}

#[test]
fn restricted_gradient_support_and_orthogonality_for_diagonal_pattern() {
    let plant = example2_plant();
    let cons = Constraint::sparsity(2, 2, vec![(0, 0), (1, 1)]).unwrap();
    let pd = point_data(&plant, &DMatrix::zeros(2, 2)).unwrap();
    let (coords, mat) = restricted_gradient(&cons, &pd).unwrap();
    assert_eq!(mat[(0, 1)], 0.0);
    assert_eq!(mat[(1, 0)], 0.0);
    assert_eq!(coords.len(), 2);
    // g-orthogonality: the unprojected remainder is normal to the frame.
    let resid = &pd.grad - &mat;
    let scale = metric_norm(&pd, &pd.grad).max(1.0);
    for basis in cons.frame() {
        assert!(metric_inner(&pd, &resid, &basis).abs() <= 1e-9 * scale);
    }
}

#[test]
fn restricted_gradient_vanishes_at_an_optimizer_stationary_point() {
    let plant = example2_plant();
    let cons = Constraint::sparsity(2, 2, vec![(0, 0), (1, 1)]).unwrap();
    let k0 = Gain::verified(
        &plant,
        DMatrix::from_row_slice(2, 2, &[0.05, 0.0, 0.0, -0.97]),
    )
    .unwrap();
    let settings = RunSettings::new(Method::RcNewtonRiemannian);
    let trace = gainopt_core::rc_newton(&plant, &cons, &k0, &settings).unwrap();
    assert!(trace.converged(), "status {:?}", trace.status);
    let pd = point_data(&plant, trace.final_k().unwrap()).unwrap();
    let (_, mat) = restricted_gradient(&cons, &pd).unwrap();
    assert!(metric_norm(&pd, &mat) < 1e-10);
}

#[test]
fn restricted_hessian_is_symmetric() {
    let mut r = rng(406);
    let plant = random_plant(&mut r, 3, 2, 0.6, false);
    let cons = Constraint::sparsity(2, 3, vec![(0, 0), (0, 1), (1, 2)]).unwrap();
    let k = DMatrix::<f64>::zeros(2, 3);
    let pd = point_data(&plant, &k).unwrap();
    let ct = christoffel(&plant, &pd).unwrap();
    for (conn, ct_opt) in [
        (Connection::Euclidean, None),
        (Connection::Riemannian, Some(&ct)),
    ] {
        let h = restricted_hessian_matrix(&plant, &cons, &pd, ct_opt, conn).unwrap();
        let asym = max_abs(&(&h - h.transpose()));
        assert!(asym <= 1e-10 * max_abs(&h).max(1.0), "asymmetry {asym}");
    }
}

#[test]
fn connections_agree_at_the_unconstrained_minimum() {
    let plant = example2_plant();
    let sol = hewer_solve(&plant, &DMatrix::zeros(2, 2)).unwrap();
    let pd = point_data(&plant, &sol.k).unwrap();
    let cons = Constraint::unconstrained(2, 2);
    let ct = christoffel(&plant, &pd).unwrap();
    let hr =
        restricted_hessian_matrix(&plant, &cons, &pd, Some(&ct), Connection::Riemannian).unwrap();
    let he = restricted_hessian_matrix(&plant, &cons, &pd, None, Connection::Euclidean).unwrap();
    assert!(max_abs(&(&hr - &he)) <= 1e-8 * max_abs(&he).max(1.0));
}

#[test]
fn euclidean_restricted_entries_match_mixed_difference_stencil() {
    let plant = example2_plant();
    let cons = Constraint::sparsity(2, 2, vec![(0, 0), (1, 1)]).unwrap();
    let k = DMatrix::from_row_slice(2, 2, &[-0.1, 0.0, 0.0, -0.5]);
    let pd = point_data(&plant, &k).unwrap();
    let h = restricted_hessian_matrix(&plant, &cons, &pd, None, Connection::Euclidean).unwrap();
    let frame = cons.frame();
    let f = cost_fn(&plant);
    let step = fd_step2(&k);
    for a in 0..2 {
        for b in 0..2 {
            let fd = if a == b {
                second_diff(&f, &k, &frame[a], step)
            } else {
                mixed_diff(&f, &k, &frame[a], &frame[b], step)
            };
            assert!(
                (h[(a, b)] - fd).abs() < 1e-4 * fd.abs().max(1.0),
                "entry ({a},{b}): {} vs fd {fd}",
                h[(a, b)]
            );
        }
    }
}

#[test]
fn riemannian_restricted_hessian_uses_projected_gradient() {
    // The Gamma-term must pair with grad h, not the ambient gradient; at a
    // point where they differ the two assemblies disagree.
    let plant = example2_plant();
    let cons = Constraint::sparsity(2, 2, vec![(0, 0), (1, 1)]).unwrap();
    let k = DMatrix::from_row_slice(2, 2, &[-0.1, 0.0, 0.0, -0.5]);
    let pd = point_data(&plant, &k).unwrap();
    let ct = christoffel(&plant, &pd).unwrap();
    let frame = cons.frame();
    let h =
        restricted_hessian_matrix(&plant, &cons, &pd, Some(&ct), Connection::Riemannian).unwrap();
    let (_, grad_h) = restricted_gradient(&cons, &pd).unwrap();
    // Rebuild one entry by hand with the projected gradient.
    let e = &frame[0];
    let fcol = &frame[1];
    let euc = restricted_hessian_matrix(&plant, &cons, &pd, None, Connection::Euclidean).unwrap();
    let gamma_term = metric_inner(
        &pd,
        &grad_h,
        &gainopt_core::gamma_contract(&ct, e, fcol),
    );
    assert!((h[(0, 1)] - (euc[(0, 1)] - gamma_term)).abs() < 1e-10 * h[(0, 1)].abs().max(1.0));
    // And with the ambient gradient it would differ.
    let ambient_term = metric_inner(
        &pd,
        &pd.grad,
        &gainopt_core::gamma_contract(&ct, e, fcol),
    );
    assert!((gamma_term - ambient_term).abs() > 1e-6);
}
