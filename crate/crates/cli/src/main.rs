use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gainopt_core::{Method, RunSettings};

use gainopt_cli::config::{apply_settings, EnsembleSpec, ProblemConfig, SettingsConfig};
use gainopt_cli::runner::{self, exit_code, GridAxis};

#[derive(Parser)]
#[command(
    name = "gainopt",
    about = "Newton-type policy optimization over constrained stabilizing feedback gains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOverrides {
    /// Output directory for artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Override the gradient-norm stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured problem; writes trace.csv and summary.json.
    Solve {
        config: PathBuf,
        #[command(flatten)]
        common: CommonOverrides,
        /// Override the method from the config file.
        #[arg(long)]
        method: Option<String>,
    },
    /// Run a random ensemble; writes ensemble_summary.csv,
    /// ensemble_curves.csv and ensemble.json.
    Ensemble {
        spec: PathBuf,
        #[command(flatten)]
        common: CommonOverrides,
        /// Comma-separated method list.
        #[arg(
            long,
            default_value = "rcn_riemannian,rcn_euclidean,projected_gradient"
        )]
        methods: String,
    },
    /// Evaluate cost and Hessian definiteness over a 2-D constraint grid;
    /// writes landscape.csv.
    Landscape {
        config: PathBuf,
        /// Grid as "min:max:count,min:max:count" over the two frame
        /// coordinates.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Run the library invariant battery.
    Check,
}

fn fail(code: i32, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code as u8)
}

fn read_file(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_axis(spec: &str) -> Result<GridAxis, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid axis '{spec}' must be min:max:count"));
    }
    let min: f64 = parts[0].parse().map_err(|_| format!("bad axis min '{}'", parts[0]))?;
    let max: f64 = parts[1].parse().map_err(|_| format!("bad axis max '{}'", parts[1]))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| format!("bad axis count '{}'", parts[2]))?;
    if count == 0 || max < min {
        return Err(format!("degenerate grid axis '{spec}'"));
    }
    Ok(GridAxis { min, max, count })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            config,
            common,
            method,
        } => {
            let text = match read_file(&config) {
                Ok(t) => t,
                Err(e) => return fail(exit_code::CONFIG, e),
            };
            let mut parsed = match ProblemConfig::parse_json(&text) {
                Ok(p) => p,
                Err(e) => return fail(exit_code::CONFIG, e),
            };
            if let Some(m) = method {
                parsed.method = m;
            }
            if let Some(s) = common.seed {
                parsed.seed = s;
            }
            let mut problem = match parsed.build() {
                Ok(p) => p,
                Err(e) => return fail(exit_code::CONFIG, e),
            };
            if let Some(n) = common.max_iters {
                problem.settings.max_iters = n;
            }
            if let Some(t) = common.tol {
                problem.settings.grad_tol = t;
            }
            match runner::run_solve(&problem, &common.out) {
                Ok((trace, code)) => {
                    println!(
                        "{}: {} iterations, status {}",
                        problem.settings.method.name(),
                        trace.iterations(),
                        trace.status.name()
                    );
                    ExitCode::from(code as u8)
                }
                Err(e) => fail(exit_code::NOT_CONVERGED, e),
            }
        }
        Command::Ensemble {
            spec,
            common,
            methods,
        } => {
            let text = match read_file(&spec) {
                Ok(t) => t,
                Err(e) => return fail(exit_code::CONFIG, e),
            };
            let mut parsed = match EnsembleSpec::parse_json(&text) {
                Ok(p) => p,
                Err(e) => return fail(exit_code::CONFIG, e),
            };
            if let Some(s) = common.seed {
                parsed.seed = s;
            }
            if let Err(e) = parsed.validate() {
                return fail(exit_code::CONFIG, e);
            }
            let mut method_list = Vec::new();
            for name in methods.split(',') {
                match Method::parse(name.trim()) {
                    Ok(m) => method_list.push(m),
                    Err(e) => return fail(exit_code::CONFIG, e),
                }
            }
            let mut settings = RunSettings::new(Method::RcNewtonRiemannian);
            let overrides: Option<SettingsConfig> = parsed.settings.clone();
            if let Err(e) = apply_settings(&mut settings, &overrides) {
                return fail(exit_code::CONFIG, e);
            }
            if let Some(n) = common.max_iters {
                settings.max_iters = n;
            }
            if let Some(t) = common.tol {
                settings.grad_tol = t;
            }
            match runner::run_ensemble(&parsed, &method_list, &settings) {
                Ok(outcome) => {
                    if let Err(e) = runner::write_ensemble(&outcome, &common.out) {
                        return fail(exit_code::NOT_CONVERGED, e);
                    }
                    print!("{}", outcome.aggregate_json);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(exit_code::NOT_CONVERGED, e),
            }
        }
        Command::Landscape {
            config,
            grid,
            common,
        } => {
            let text = match read_file(&config) {
                Ok(t) => t,
                Err(e) => return fail(exit_code::CONFIG, e),
            };
            let parsed = match ProblemConfig::parse_json(&text) {
                Ok(p) => p,
                Err(e) => return fail(exit_code::CONFIG, e),
            };
            let problem = match parsed.build() {
                Ok(p) => p,
                Err(e) => return fail(exit_code::CONFIG, e),
            };
            let axes: Vec<&str> = grid.split(',').collect();
            if axes.len() != 2 {
                return fail(exit_code::CONFIG, "grid must give two axes");
            }
            let (axis1, axis2) = match (parse_axis(axes[0]), parse_axis(axes[1])) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return fail(exit_code::CONFIG, e),
            };
            match runner::run_landscape(&problem.plant, &problem.constraint, &axis1, &axis2) {
                Ok(cells) => {
                    if let Err(e) = runner::write_landscape(&cells, &common.out) {
                        return fail(exit_code::NOT_CONVERGED, e);
                    }
                    let stabilizing = cells.iter().filter(|c| c.stabilizing).count();
                    println!("{} cells, {} stabilizing", cells.len(), stabilizing);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(exit_code::CONFIG, e),
            }
        }
        Command::Check => {
            let failures = gainopt_cli::check::run_check();
            if failures == 0 {
                println!("all checks passed");
                ExitCode::SUCCESS
            } else {
                println!("{failures} check(s) failed");
                ExitCode::FAILURE
            }
        }
    }
}
