//! Deterministic random-ensemble generation. Each plant index gets its own
//! ChaCha stream keyed by (seed, index), so per-plant sampling is
//! independent of execution order.

use gainopt_core::{
    max_abs, pbh_controllable, point_data, restricted_gradient, spectral_radius, Constraint, Plant,
};
use nalgebra::DMatrix;
use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::EnsembleSpec;

#[derive(Debug)]
pub struct GenerationError(pub String);

impl std::fmt::Display for GenerationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ensemble generation failed: {}", self.0)
    }
}

impl std::error::Error for GenerationError {}

/// The per-plant stream: stream 0 is reserved, plants use 1 + index.
pub fn plant_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + index);
    rng
}

fn sample_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major fill order, fixed for reproducibility.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Samples `(A, B)` with standard normal entries, rescales `A` to the
/// target spectral radius and retries until the pair is controllable.
/// Cost weights are the identity, the metric weight `Sigma2` zero.
pub fn random_plant(spec: &EnsembleSpec, index: u64) -> Result<(Plant, ChaCha8Rng), GenerationError> {
    let mut rng = plant_rng(spec.seed, index);
    for _ in 0..100 {
        let a_raw = sample_matrix(&mut rng, spec.n, spec.n);
        let b = sample_matrix(&mut rng, spec.n, spec.m);
        let rho = spectral_radius(&a_raw).map_err(|e| GenerationError(e.to_string()))?;
        if rho < 1e-9 {
            continue;
        }
        let a = a_raw * (spec.a_target_radius / rho);
        if !pbh_controllable(&a, &b).map_err(|e| GenerationError(e.to_string()))? {
            continue;
        }
        let plant = Plant::new(
            a,
            b,
            None,
            DMatrix::identity(spec.n, spec.n),
            DMatrix::identity(spec.m, spec.m),
            Some(DMatrix::identity(spec.n, spec.n)),
            None,
        )
        .map_err(|e| GenerationError(e.to_string()))?;
        return Ok((plant, rng));
    }
    Err(GenerationError(format!(
        "plant {index}: 100 consecutive resample failures"
    )))
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Uniform sample over all sparsity patterns with at least the prescribed
/// zero fraction (and at least one permitted entry), rejecting patterns
/// whose restricted gradient at `K0 = 0` vanishes.
pub fn random_sparsity(
    rng: &mut ChaCha8Rng,
    plant: &Plant,
    min_zero_fraction: f64,
) -> Result<Constraint, GenerationError> {
    let (m, n) = (plant.input_dim(), plant.state_dim());
    let mn = m * n;
    let min_zeros = (min_zero_fraction * mn as f64).ceil() as usize;
    let max_nonzero = mn.saturating_sub(min_zeros).max(1);
    let weights: Vec<f64> = (1..=max_nonzero).map(|k| binomial(mn, k)).collect();
    let total: f64 = weights.iter().sum();
    let pd0 = point_data(plant, &DMatrix::zeros(m, n))
        .map_err(|e| GenerationError(e.to_string()))?;

    for _ in 0..200 {
        // Pattern size k proportional to the number of patterns of that size.
        let mut u: f64 = rng.gen_range(0.0..total);
        let mut nonzeros = max_nonzero;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                nonzeros = i + 1;
                break;
            }
            u -= w;
        }
        // Uniform subset of the given size by partial shuffle.
        let mut cells: Vec<usize> = (0..mn).collect();
        for i in 0..nonzeros {
            let j = rng.gen_range(i..mn);
            cells.swap(i, j);
        }
        let pattern: Vec<(usize, usize)> =
            cells[..nonzeros].iter().map(|&c| (c / n, c % n)).collect();
        let constraint = Constraint::sparsity(m, n, pattern)
            .map_err(|e| GenerationError(e.to_string()))?;
        let (_, grad0) = restricted_gradient(&constraint, &pd0)
            .map_err(|e| GenerationError(e.to_string()))?;
        if max_abs(&grad0) > 1e-12 {
            return Ok(constraint);
        }
    }
    Err(GenerationError(
        "200 consecutive degenerate sparsity patterns".into(),
    ))
}

/// Random full-row-rank output matrix with non-degenerate restricted
/// gradient at `K0 = 0`.
pub fn random_output(
    rng: &mut ChaCha8Rng,
    plant: &Plant,
    d: usize,
) -> Result<Constraint, GenerationError> {
    let (m, n) = (plant.input_dim(), plant.state_dim());
    let pd0 = point_data(plant, &DMatrix::zeros(m, n))
        .map_err(|e| GenerationError(e.to_string()))?;
    for _ in 0..200 {
        let c = sample_matrix(rng, d, n);
        let Ok(constraint) = Constraint::output_feedback(m, c) else {
            continue;
        };
        let (_, grad0) = restricted_gradient(&constraint, &pd0)
            .map_err(|e| GenerationError(e.to_string()))?;
        if max_abs(&grad0) > 1e-12 {
            return Ok(constraint);
        }
    }
    Err(GenerationError(
        "200 consecutive degenerate output matrices".into(),
    ))
}

/// One sampled ensemble member.
pub fn sample_member(
    spec: &EnsembleSpec,
    index: u64,
) -> Result<(Plant, Constraint), GenerationError> {
    let (plant, mut rng) = random_plant(spec, index)?;
    let constraint = match spec.constraint_recipe.as_str() {
        "random_sparsity" => random_sparsity(&mut rng, &plant, spec.min_zero_fraction)?,
        "random_output" => random_output(&mut rng, &plant, spec.d.unwrap_or(0))?,
        other => return Err(GenerationError(format!("unknown recipe '{other}'"))),
    };
    Ok((plant, constraint))
}
