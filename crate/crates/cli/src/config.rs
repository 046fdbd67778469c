//! JSON problem and ensemble descriptions, and their validation into core
//! types. Parse failures carry the offending field so the CLI can report
//! them precisely.

use gainopt_core::{Constraint, Gain, IndefinitePolicy, Method, Plant, RunSettings};
use nalgebra::DMatrix;
use serde::Deserialize;

/// A field-labelled configuration error (exit code 2 at the CLI).
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        field: field.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default)]
    pub c: Option<Vec<Vec<f64>>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    #[serde(default)]
    pub sigma1: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub sigma2: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub kind: String,
    /// 1-based (row, col) indices of permitted nonzero entries.
    #[serde(default)]
    pub pattern: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SettingsConfig {
    #[serde(default)]
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub iterate_tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub qmap_epsilon: Option<f64>,
    #[serde(default)]
    pub pg_stepsize: Option<f64>,
    #[serde(default)]
    pub on_indefinite_hessian: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub plant: PlantConfig,
    pub constraint: ConstraintConfig,
    #[serde(default)]
    pub k0: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub l0: Option<Vec<Vec<f64>>>,
    pub method: String,
    #[serde(default)]
    pub settings: Option<SettingsConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n: usize,
    pub m: usize,
    /// Output dimension for the random output-feedback recipe.
    #[serde(default)]
    pub d: Option<usize>,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    /// Spectral radius the sampled dynamics are rescaled to.
    #[serde(default = "default_radius")]
    pub a_target_radius: f64,
    /// "random_sparsity" or "random_output".
    pub constraint_recipe: String,
    /// Minimum fraction of forced-zero gain entries for random sparsity.
    #[serde(default = "default_zero_fraction")]
    pub min_zero_fraction: f64,
    #[serde(default)]
    pub settings: Option<SettingsConfig>,
}

fn default_radius() -> f64 {
    0.9
}

fn default_zero_fraction() -> f64 {
    0.5
}

pub fn matrix_from_rows(
    field: &str,
    rows: &[Vec<f64>],
    expect: Option<(usize, usize)>,
) -> Result<DMatrix<f64>, ConfigError> {
    if rows.is_empty() {
        return err(field, "matrix must have at least one row");
    }
    let cols = rows[0].len();
    if cols == 0 {
        return err(field, "matrix must have at least one column");
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return err(
                field,
                format!("row {} has {} entries, expected {}", i + 1, row.len(), cols),
            );
        }
        if row.iter().any(|x| !x.is_finite()) {
            return err(field, format!("row {} has a non-finite entry", i + 1));
        }
    }
    if let Some((er, ec)) = expect {
        if rows.len() != er || cols != ec {
            return err(
                field,
                format!("expected a {er}x{ec} matrix, got {}x{}", rows.len(), cols),
            );
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// A fully validated problem, ready to run.
#[derive(Debug)]
pub struct Problem {
    pub plant: Plant,
    pub constraint: Constraint,
    pub k0: Gain,
    pub settings: RunSettings,
    pub seed: u64,
}

pub fn apply_settings(
    base: &mut RunSettings,
    overrides: &Option<SettingsConfig>,
) -> Result<(), ConfigError> {
    if let Some(s) = overrides {
        if let Some(v) = s.grad_tol {
            if v <= 0.0 {
                return err("settings.grad_tol", "must be positive");
            }
            base.grad_tol = v;
        }
        if let Some(v) = s.iterate_tol {
            if v <= 0.0 {
                return err("settings.iterate_tol", "must be positive");
            }
            base.iterate_tol = v;
        }
        if let Some(v) = s.max_iters {
            if v == 0 {
                return err("settings.max_iters", "must be at least 1");
            }
            base.max_iters = v;
        }
        if let Some(v) = s.qmap_epsilon {
            if v <= 0.0 {
                return err("settings.qmap_epsilon", "must be positive");
            }
            base.qmap_epsilon = v;
        }
        if let Some(v) = s.pg_stepsize {
            if v <= 0.0 {
                return err("settings.pg_stepsize", "must be positive");
            }
            base.pg_stepsize = Some(v);
        }
        if let Some(ref v) = s.on_indefinite_hessian {
            base.on_indefinite = match v.as_str() {
                "fail_fast" => IndefinitePolicy::FailFast,
                "continue" => IndefinitePolicy::Continue,
                other => {
                    return err(
                        "settings.on_indefinite_hessian",
                        format!("unknown policy '{other}' (expected fail_fast or continue)"),
                    )
                }
            };
        }
    }
    Ok(())
}

impl ProblemConfig {
    pub fn parse_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError {
            field: "config".into(),
            message: e.to_string(),
        })
    }

    /// Validates everything into core types.
    pub fn build(&self) -> Result<Problem, ConfigError> {
        let a = matrix_from_rows("plant.a", &self.plant.a, None)?;
        let n = a.nrows();
        if a.ncols() != n {
            return err("plant.a", format!("must be square, got {}x{}", n, a.ncols()));
        }
        let b = matrix_from_rows("plant.b", &self.plant.b, None)?;
        if b.nrows() != n {
            return err("plant.b", format!("must have {n} rows, got {}", b.nrows()));
        }
        let m = b.ncols();
        let c = match &self.plant.c {
            Some(rows) => Some(matrix_from_rows("plant.c", rows, None)?),
            None => None,
        };
        let q = matrix_from_rows("plant.q", &self.plant.q, Some((n, n)))?;
        let r = matrix_from_rows("plant.r", &self.plant.r, Some((m, m)))?;
        let sigma1 = match &self.plant.sigma1 {
            Some(rows) => Some(matrix_from_rows("plant.sigma1", rows, Some((n, n)))?),
            None => None,
        };
        let sigma2 = match &self.plant.sigma2 {
            Some(rows) => Some(matrix_from_rows("plant.sigma2", rows, Some((m, m)))?),
            None => None,
        };
        let plant = Plant::new(a, b, c, q, r, sigma1, sigma2)
            .map_err(|e| ConfigError {
                field: "plant".into(),
                message: e.to_string(),
            })?;

        let constraint = match self.constraint.kind.as_str() {
            "unconstrained" => Constraint::unconstrained(m, n),
            "sparsity" => {
                let Some(ref pattern) = self.constraint.pattern else {
                    return err("constraint.pattern", "required for kind = sparsity");
                };
                let mut zero_based = Vec::with_capacity(pattern.len());
                for &[i, j] in pattern {
                    if i == 0 || j == 0 || i > m || j > n {
                        return err(
                            "constraint.pattern",
                            format!("index ({i}, {j}) outside 1..={m} x 1..={n}"),
                        );
                    }
                    zero_based.push((i - 1, j - 1));
                }
                Constraint::sparsity(m, n, zero_based).map_err(|e| ConfigError {
                    field: "constraint.pattern".into(),
                    message: e.to_string(),
                })?
            }
            "output_feedback" => {
                let Some(cm) = plant.c.clone() else {
                    return err("plant.c", "required for constraint kind = output_feedback");
                };
                Constraint::output_feedback(m, cm).map_err(|e| ConfigError {
                    field: "plant.c".into(),
                    message: e.to_string(),
                })?
            }
            other => {
                return err(
                    "constraint.kind",
                    format!(
                        "unknown kind '{other}' (expected unconstrained, sparsity or output_feedback)"
                    ),
                )
            }
        };

        let k0_matrix = match (&self.k0, &self.l0) {
            (Some(_), Some(_)) => return err("k0", "give either k0 or l0, not both"),
            (Some(rows), None) => matrix_from_rows("k0", rows, Some((m, n)))?,
            (None, Some(rows)) => {
                let Constraint::OutputFeedback { c, .. } = &constraint else {
                    return err("l0", "only valid for output_feedback constraints");
                };
                let d = c.nrows();
                let l = matrix_from_rows("l0", rows, Some((m, d)))?;
                l * c
            }
            (None, None) => DMatrix::zeros(m, n),
        };
        if !constraint.is_member(&k0_matrix) {
            return err("k0", "initial gain violates the constraint");
        }

        let method = Method::parse(&self.method).map_err(|e| ConfigError {
            field: "method".into(),
            message: e.to_string(),
        })?;
        let mut settings = RunSettings::new(method);
        apply_settings(&mut settings, &self.settings)?;

        Ok(Problem {
            plant,
            constraint,
            // The optimizer re-verifies; feasibility was checked above.
            k0: Gain::unverified(k0_matrix),
            settings,
            seed: self.seed,
        })
    }
}

impl EnsembleSpec {
    pub fn parse_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError {
            field: "spec".into(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 || self.m == 0 {
            return err("n", "dimensions must be positive");
        }
        if self.count == 0 {
            return err("count", "must be at least 1");
        }
        if !(self.a_target_radius > 0.0 && self.a_target_radius < 1.0) {
            return err("a_target_radius", "must lie in (0, 1)");
        }
        match self.constraint_recipe.as_str() {
            "random_sparsity" => {
                if !(0.0..=1.0).contains(&self.min_zero_fraction) {
                    return err("min_zero_fraction", "must lie in [0, 1]");
                }
            }
            "random_output" => {
                let d = self.d.unwrap_or(0);
                if d == 0 || d > self.n {
                    return err("d", "required with 0 < d <= n for random_output");
                }
            }
            other => {
                return err(
                    "constraint_recipe",
                    format!("unknown recipe '{other}' (expected random_sparsity or random_output)"),
                )
            }
        }
        Ok(())
    }
}
