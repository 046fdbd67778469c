//! The `check` subcommand: a quick self-test battery over the library's
//! contracts, one pass/fail line per invariant.

use gainopt_core::{
    christoffel, dlyap, gamma_contract, hewer_solve, max_abs, metric_inner, point_data, qmap,
    spectral_radius, stability_certificate, sym_extreme_eigs, tangential_projection, Constraint,
    Plant,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn sample(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn stable(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DMatrix<f64> {
    loop {
        let a = sample(rng, n, n);
        let rho = spectral_radius(&a).unwrap();
        if rho > 1e-9 {
            return a * (radius / rho);
        }
    }
}

fn random_plant(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Plant {
    Plant::new(
        stable(rng, n, 0.7),
        sample(rng, n, m),
        None,
        DMatrix::identity(n, n),
        DMatrix::identity(m, m),
        Some(DMatrix::identity(n, n)),
        None,
    )
    .unwrap()
}

struct Battery {
    failures: usize,
}

impl Battery {
    fn report(&mut self, name: &str, pass: bool) {
        println!("{} {}", if pass { "PASS" } else { "FAIL" }, name);
        if !pass {
            self.failures += 1;
        }
    }
}

/// Runs the invariant battery; returns the number of failures.
pub fn run_check() -> usize {
    let mut battery = Battery { failures: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);

    // Lyapunov residual + positivity.
    let mut ok = true;
    for _ in 0..50 {
        let n = 2 + (rng.gen_range(0..4usize));
        let a = stable(&mut rng, n, 0.85);
        let w = sample(&mut rng, n, n);
        let z = &w * w.transpose();
        match dlyap(&a, &z) {
            Ok(x) => {
                let resid = max_abs(&(&x - &a * &x * a.transpose() - &z));
                ok &= resid <= 1e-10 * max_abs(&z).max(1.0);
                let (lo, _) = sym_extreme_eigs(&((&x + x.transpose()) * 0.5)).unwrap();
                ok &= lo >= -1e-10 * gainopt_core::spectral_norm(&x);
            }
            Err(_) => ok = false,
        }
    }
    battery.report("lyapunov residual and positivity (50 instances)", ok);

    // Lyapunov-trace identity.
    let mut ok = true;
    for _ in 0..20 {
        let a = stable(&mut rng, 4, 0.8);
        let q = sample(&mut rng, 4, 4);
        let s = sample(&mut rng, 4, 4);
        let lhs = (dlyap(&a.transpose(), &q).unwrap() * &s).trace();
        let rhs = (dlyap(&a, &s).unwrap() * &q).trace();
        ok &= (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0);
    }
    battery.report("lyapunov trace identity (20 instances)", ok);

    // Metric positive-definiteness.
    let mut ok = true;
    for _ in 0..20 {
        let plant = random_plant(&mut rng, 3, 2);
        let pd = point_data(&plant, &DMatrix::zeros(2, 3)).unwrap();
        let v = sample(&mut rng, 2, 3);
        ok &= metric_inner(&pd, &v, &v) > 0.0;
    }
    battery.report("metric positive definiteness (20 points)", ok);

    // Christoffel lower-index symmetry, exactly.
    let mut ok = true;
    for _ in 0..3 {
        let plant = random_plant(&mut rng, 2, 2);
        let pd = point_data(&plant, &DMatrix::zeros(2, 2)).unwrap();
        let ct = christoffel(&plant, &pd).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        for p in 0..2 {
                            for q in 0..2 {
                                ok &= ct.gamma((i, j), (k, l), (p, q))
                                    == ct.gamma((i, j), (p, q), (k, l));
                            }
                        }
                    }
                }
            }
        }
        // And the contraction is symmetric in its arguments.
        let e = sample(&mut rng, 2, 2);
        let f = sample(&mut rng, 2, 2);
        let d = gamma_contract(&ct, &e, &f) - gamma_contract(&ct, &f, &e);
        ok &= max_abs(&d) < 1e-12;
    }
    battery.report("christoffel lower-index symmetry (3 points)", ok);

    // Projection idempotence.
    let mut ok = true;
    for _ in 0..10 {
        let plant = random_plant(&mut rng, 3, 2);
        let cons = Constraint::sparsity(2, 3, vec![(0, 0), (1, 1), (1, 2)]).unwrap();
        let pd = point_data(&plant, &DMatrix::zeros(2, 3)).unwrap();
        let e = sample(&mut rng, 2, 3);
        let p1 = tangential_projection(&cons, &pd, &e).unwrap();
        let p2 = tangential_projection(&cons, &pd, &p1).unwrap();
        ok &= max_abs(&(&p2 - &p1)) <= 1e-10 * max_abs(&p1).max(1.0);
    }
    battery.report("tangential projection idempotence (10 cases)", ok);

    // Certificate soundness.
    let mut ok = true;
    let mut cases = 0;
    while cases < 100 {
        let plant = random_plant(&mut rng, 3, 2);
        let k = sample(&mut rng, 2, 3) * 0.1;
        if spectral_radius(&plant.closed_loop(&k)).unwrap() >= 1.0 {
            continue;
        }
        let pd = point_data(&plant, &k).unwrap();
        let g = sample(&mut rng, 2, 3);
        let qk = qmap(&plant, &k, 1e-8);
        let s = stability_certificate(&plant, &pd, &g, &qk).unwrap();
        if !s.is_finite() {
            continue;
        }
        let eta = rng.gen_range(0.0..=1.0) * s;
        ok &= spectral_radius(&plant.closed_loop(&(&k + &g * eta))).unwrap() < 1.0;
        cases += 1;
    }
    battery.report("stability certificate soundness (100 cases)", ok);

    // Hewer fixed point kills the gradient.
    let plant = random_plant(&mut rng, 4, 2);
    let ok = match hewer_solve(&plant, &DMatrix::zeros(2, 4)) {
        Ok(sol) => {
            let pd = point_data(&plant, &sol.k).unwrap();
            max_abs(&pd.grad) < 1e-8
        }
        Err(_) => false,
    };
    battery.report("hewer fixed point is a critical point", ok);

    battery.failures
}
