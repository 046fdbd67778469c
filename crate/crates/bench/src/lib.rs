//! Shared fixtures for the criterion benchmarks.

use gainopt_core::Plant;
use nalgebra::DMatrix;

/// The two-state example plant with the diagonal SLQR constraint.
pub fn example2_plant() -> Plant {
    Plant::new(
        DMatrix::from_row_slice(2, 2, &[0.8, 1.0, 0.0, 0.9]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        None,
        DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 0.5]),
        DMatrix::<f64>::identity(2, 2) * 0.1,
        Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 5.0])),
        None,
    )
    .unwrap()
}

/// A synthetic stable plant of the given size with identity weights.
pub fn synthetic_plant(n: usize, m: usize) -> Plant {
    // Deterministic pseudo-random entries; scaled companion-like structure
    // keeps the open loop stable without an eigensolve at build time.
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let x = ((i * 31 + j * 17 + 7) % 19) as f64 / 19.0 - 0.5;
            a[(i, j)] = 0.8 * x / n as f64;
        }
        if i + 1 < n {
            a[(i, i + 1)] = 0.6;
        }
    }
    let mut b = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            b[(i, j)] = (((i * 13 + j * 29 + 3) % 23) as f64 / 23.0) - 0.4;
        }
    }
    Plant::new(
        a,
        b,
        None,
        DMatrix::identity(n, n),
        DMatrix::identity(m, m),
        Some(DMatrix::identity(n, n)),
        None,
    )
    .unwrap()
}
