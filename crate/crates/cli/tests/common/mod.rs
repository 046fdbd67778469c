//! Fixtures shared by the CLI test targets.

#![allow(dead_code)]

use gainopt_core::Plant;
use nalgebra::DMatrix;

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

pub fn example2_plant_with_output() -> Plant {
    Plant::new(
        DMatrix::from_row_slice(2, 2, &[0.8, 1.0, 0.0, 0.9]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        Some(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])),
        DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 0.5]),
        DMatrix::<f64>::identity(2, 2) * 0.1,
        Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 5.0])),
        None,
    )
    .unwrap()
}

pub const EXAMPLE2_SLQR_JSON: &str = r#"{
  "plant": {
    "a": [[0.8, 1.0], [0.0, 0.9]],
    "b": [[0.0, 1.0], [1.0, 0.0]],
    "q": [[10.0, 0.0], [0.0, 0.5]],
    "r": [[0.1, 0.0], [0.0, 0.1]],
    "sigma1": [[1.0, 0.0], [0.0, 5.0]]
  },
  "constraint": {"kind": "sparsity", "pattern": [[1, 1], [2, 2]]},
  "k0": [[-0.3, 0.0], [0.0, -0.7]],
  "method": "rcn_riemannian",
  "seed": 7
}"#;

pub const EXAMPLE2_OLQR_JSON: &str = r#"{
  "plant": {
    "a": [[0.8, 1.0], [0.0, 0.9]],
    "b": [[0.0, 1.0], [1.0, 0.0]],
    "c": [[1.0, 1.0]],
    "q": [[10.0, 0.0], [0.0, 0.5]],
    "r": [[0.1, 0.0], [0.0, 0.1]],
    "sigma1": [[1.0, 0.0], [0.0, 5.0]]
  },
  "constraint": {"kind": "output_feedback"},
  "l0": [[-0.5], [-0.5]],
  "method": "rcn_riemannian",
  "seed": 7
}"#;

pub fn slqr_ensemble_spec(count: usize, seed: u64) -> String {
    format!(
        r#"{{"n": 6, "m": 3, "count": {count}, "seed": {seed}, "a_target_radius": 0.7, "constraint_recipe": "random_sparsity"}}"#
    )
}

pub fn olqr_ensemble_spec(count: usize, seed: u64) -> String {
    format!(
        r#"{{"n": 6, "m": 3, "d": 2, "count": {count}, "seed": {seed}, "a_target_radius": 0.7, "constraint_recipe": "random_output"}}"#
    )
}

pub fn gainopt_bin() -> &'static str {
    env!("CARGO_BIN_EXE_gainopt")
}
