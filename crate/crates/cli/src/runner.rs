//! Drives solves, ensembles and landscape grids, and writes their CSV/JSON
//! artifacts. All real numbers are printed with 17 significant digits so
//! reruns with identical inputs are byte-identical and rows can be
//! re-verified by re-parsing.

use std::fs;
use std::io::Write;
use std::path::Path;

use gainopt_core::{
    christoffel, point_data, restricted_hessian_matrix, run, spectral_radius, sym_extreme_eigs,
    Connection, Constraint, Gain, IterationTrace, Method, Plant, RunSettings, RunStatus,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{EnsembleSpec, Problem};
use crate::sampling::sample_member;

pub const SCHEMA_VERSION: u32 = 1;

/// 17-significant-digit scientific formatting; round-trips f64 exactly.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

pub fn trace_csv(trace: &IterationTrace, m: usize, n: usize) -> String {
    let mut out = String::new();
    out.push_str("t,cost,grad_norm_riem,certificate,stepsize,hessian_min_eig");
    for i in 1..=m {
        for j in 1..=n {
            out.push_str(&format!(",k_{i}_{j}"));
        }
    }
    out.push('\n');
    for rec in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            rec.t,
            fmt17(rec.cost),
            fmt17(rec.grad_norm_riem),
            opt17(rec.certificate),
            opt17(rec.stepsize),
            opt17(rec.hessian_min_eig),
        ));
        for i in 0..m {
            for j in 0..n {
                out.push(',');
                out.push_str(&fmt17(rec.k[(i, j)]));
            }
        }
        out.push('\n');
    }
    out
}

pub fn summary_json(trace: &IterationTrace, method: Method) -> String {
    let final_rec = trace.final_record();
    format!(
        concat!(
            "{{\n",
            "  \"schema_version\": {},\n",
            "  \"method\": \"{}\",\n",
            "  \"status\": \"{}\",\n",
            "  \"iterations\": {},\n",
            "  \"records\": {},\n",
            "  \"final_cost\": {},\n",
            "  \"final_grad_norm\": {}\n",
            "}}\n"
        ),
        SCHEMA_VERSION,
        method.name(),
        trace.status.name(),
        trace.iterations(),
        trace.records.len(),
        final_rec.map_or("null".to_string(), |r| fmt17(r.cost)),
        final_rec.map_or("null".to_string(), |r| fmt17(r.grad_norm_riem)),
    )
}

fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())
}

/// Exit codes shared by the binary and the tests.
pub mod exit_code {
    pub const CONVERGED: i32 = 0;
    pub const NOT_CONVERGED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
}

/// Runs one configured problem and writes `trace.csv` + `summary.json`.
pub fn run_solve(problem: &Problem, out_dir: &Path) -> Result<(IterationTrace, i32), String> {
    let trace = run(
        &problem.plant,
        &problem.constraint,
        &problem.k0,
        &problem.settings,
    )
    .map_err(|e| e.to_string())?;
    let (m, n) = problem.constraint.gain_dims();
    write_file(&out_dir.join("trace.csv"), &trace_csv(&trace, m, n))
        .map_err(|e| e.to_string())?;
    write_file(
        &out_dir.join("summary.json"),
        &summary_json(&trace, problem.settings.method),
    )
    .map_err(|e| e.to_string())?;
    let code = match trace.status {
        RunStatus::Converged => exit_code::CONVERGED,
        RunStatus::InfeasibleStart => exit_code::INFEASIBLE,
        _ => exit_code::NOT_CONVERGED,
    };
    Ok((trace, code))
}

/// Result of one method on one sampled plant.
pub struct MemberRun {
    pub plant_index: u64,
    pub method: Method,
    pub result: MemberResult,
}

pub enum MemberResult {
    Run {
        trace: IterationTrace,
        /// Normalized iterate errors against the reference gain, when one
        /// exists for the plant.
        curve: Option<Vec<f64>>,
    },
    /// Generation or solver failure; recorded, never fatal.
    Failed(String),
}

impl MemberRun {
    pub fn trace(&self) -> Option<&IterationTrace> {
        match &self.result {
            MemberResult::Run { trace, .. } => Some(trace),
            MemberResult::Failed(_) => None,
        }
    }

    pub fn converged(&self) -> bool {
        self.trace().is_some_and(|t| t.converged())
    }

    pub fn converged_within(&self, cap: usize) -> bool {
        self.trace()
            .is_some_and(|t| t.converged() && t.iterations() <= cap)
    }
}

pub struct EnsembleOutcome {
    pub runs: Vec<MemberRun>,
    pub summary_csv: String,
    pub curves_csv: String,
    pub aggregate_json: String,
}

fn normalized_curve(trace: &IterationTrace, k_ref: &DMatrix<f64>) -> Option<Vec<f64>> {
    let first = trace.records.first()?;
    let denom = (&first.k - k_ref).iter().map(|x| x * x).sum::<f64>().sqrt();
    if denom <= 0.0 {
        return None;
    }
    Some(
        trace
            .records
            .iter()
            .map(|r| (&r.k - k_ref).iter().map(|x| x * x).sum::<f64>().sqrt() / denom)
            .collect(),
    )
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Runs every sampled plant under every method (plants in parallel), and
/// assembles the per-run summary plus min/median/max normalized-error
/// curves. The reference gain of a plant is the converged Riemannian
/// Newton iterate; plants where that run fails are excluded from curves
/// (their rows still appear in the summary).
pub fn run_ensemble(
    spec: &EnsembleSpec,
    methods: &[Method],
    settings_base: &RunSettings,
) -> Result<EnsembleOutcome, String> {
    let per_plant: Vec<Vec<MemberRun>> = (0..spec.count as u64)
        .into_par_iter()
        .map(|index| {
            let fail_all = |message: String| -> Vec<MemberRun> {
                methods
                    .iter()
                    .map(|&method| MemberRun {
                        plant_index: index,
                        method,
                        result: MemberResult::Failed(message.clone()),
                    })
                    .collect()
            };
            let (plant, constraint) = match sample_member(spec, index) {
                Ok(pc) => pc,
                Err(e) => return fail_all(e.to_string()),
            };
            let (m, n) = constraint.gain_dims();
            let k0 = match Gain::verified(&plant, DMatrix::zeros(m, n)) {
                Ok(g) => g,
                Err(e) => return fail_all(format!("zero gain not stabilizing: {e}")),
            };
            let traces: Vec<(Method, Result<IterationTrace, String>)> = methods
                .iter()
                .map(|&method| {
                    let mut settings = settings_base.clone();
                    settings.method = method;
                    (
                        method,
                        run(&plant, &constraint, &k0, &settings).map_err(|e| e.to_string()),
                    )
                })
                .collect();
            // Reference for the error curves: the converged Riemannian run.
            let k_ref = traces
                .iter()
                .find(|(m, t)| {
                    *m == Method::RcNewtonRiemannian
                        && t.as_ref().is_ok_and(|t| t.converged())
                })
                .and_then(|(_, t)| t.as_ref().ok().and_then(|t| t.final_k().cloned()));
            traces
                .into_iter()
                .map(|(method, trace)| MemberRun {
                    plant_index: index,
                    method,
                    result: match trace {
                        Ok(trace) => {
                            let curve =
                                k_ref.as_ref().and_then(|kr| normalized_curve(&trace, kr));
                            MemberResult::Run { trace, curve }
                        }
                        Err(e) => MemberResult::Failed(e),
                    },
                })
                .collect()
        })
        .collect();

    let runs: Vec<MemberRun> = per_plant.into_iter().flatten().collect();

    // Per-run summary rows, ordered by (plant, method position).
    let mut summary = String::from(
        "plant,method,status,converged,iterations,final_grad_norm,final_cost\n",
    );
    for member in &runs {
        match &member.result {
            MemberResult::Run { trace, .. } => {
                let rec = trace.final_record();
                summary.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    member.plant_index,
                    member.method.name(),
                    trace.status.name(),
                    u8::from(trace.converged()),
                    trace.iterations(),
                    rec.map_or(String::new(), |r| fmt17(r.grad_norm_riem)),
                    rec.map_or(String::new(), |r| fmt17(r.cost)),
                ));
            }
            MemberResult::Failed(_) => {
                summary.push_str(&format!(
                    "{},{},error,0,0,,\n",
                    member.plant_index,
                    member.method.name(),
                ));
            }
        }
    }

    // Min/median/max normalized error per iteration, per method.
    let mut curves = String::from("method,t,min,median,max\n");
    for &method in methods {
        let member_curves: Vec<&Vec<f64>> = runs
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| match &r.result {
                MemberResult::Run { curve, .. } => curve.as_ref(),
                MemberResult::Failed(_) => None,
            })
            .collect();
        if member_curves.is_empty() {
            continue;
        }
        let horizon = member_curves.iter().map(|c| c.len()).max().unwrap();
        for t in 0..horizon {
            // Runs that already stopped hold their final value.
            let mut values: Vec<f64> = member_curves
                .iter()
                .map(|c| c[t.min(c.len() - 1)])
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            curves.push_str(&format!(
                "{},{},{},{},{}\n",
                method.name(),
                t,
                fmt17(values[0]),
                fmt17(median(&values)),
                fmt17(*values.last().unwrap()),
            ));
        }
    }

    // Aggregate convergence statistics.
    let mut aggregate = String::from("{\n");
    aggregate.push_str(&format!("  \"schema_version\": {SCHEMA_VERSION},\n"));
    aggregate.push_str(&format!("  \"count\": {},\n", spec.count));
    aggregate.push_str("  \"methods\": {\n");
    for (i, &method) in methods.iter().enumerate() {
        let of_method: Vec<&MemberRun> = runs.iter().filter(|r| r.method == method).collect();
        let converged = of_method.iter().filter(|r| r.converged()).count();
        let failed = of_method
            .iter()
            .filter(|r| matches!(r.result, MemberResult::Failed(_)))
            .count();
        aggregate.push_str(&format!(
            "    \"{}\": {{ \"converged\": {}, \"within_30\": {}, \"within_50\": {}, \"failed\": {} }}{}\n",
            method.name(),
            converged,
            of_method.iter().filter(|r| r.converged_within(30)).count(),
            of_method.iter().filter(|r| r.converged_within(50)).count(),
            failed,
            if i + 1 == methods.len() { "" } else { "," },
        ));
    }
    aggregate.push_str("  }\n}\n");

    Ok(EnsembleOutcome {
        runs,
        summary_csv: summary,
        curves_csv: curves,
        aggregate_json: aggregate,
    })
}

pub fn write_ensemble(outcome: &EnsembleOutcome, out_dir: &Path) -> Result<(), String> {
    write_file(&out_dir.join("ensemble_summary.csv"), &outcome.summary_csv)
        .map_err(|e| e.to_string())?;
    write_file(&out_dir.join("ensemble_curves.csv"), &outcome.curves_csv)
        .map_err(|e| e.to_string())?;
    write_file(&out_dir.join("ensemble.json"), &outcome.aggregate_json)
        .map_err(|e| e.to_string())
}

/// One landscape grid cell.
#[derive(Debug)]
pub struct LandscapeCell {
    pub i: usize,
    pub j: usize,
    pub c1: f64,
    pub c2: f64,
    pub stabilizing: bool,
    pub cost: Option<f64>,
    pub riem_min_eig: Option<f64>,
    pub euc_min_eig: Option<f64>,
}

pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Evaluates cost and both restricted-Hessian minimum eigenvalues over a
/// rectangular grid in the two frame coordinates of the constraint.
pub fn run_landscape(
    plant: &Plant,
    constraint: &Constraint,
    axis1: &GridAxis,
    axis2: &GridAxis,
) -> Result<Vec<LandscapeCell>, String> {
    if constraint.frame_dim() != 2 {
        return Err(format!(
            "landscape needs a two-dimensional constraint frame, got {}",
            constraint.frame_dim()
        ));
    }
    let step = |axis: &GridAxis, idx: usize| {
        if axis.count == 1 {
            axis.min
        } else {
            axis.min + (axis.max - axis.min) * idx as f64 / (axis.count - 1) as f64
        }
    };
    let cells: Vec<LandscapeCell> = (0..axis1.count)
        .into_par_iter()
        .flat_map_iter(|i| {
            let c1 = step(axis1, i);
            (0..axis2.count).map(move |j| (i, c1, j))
        })
        .map(|(i, c1, j)| {
            let c2 = step(axis2, j);
            let k = constraint.assemble(&DVector::from_vec(vec![c1, c2]));
            let stabilizing = spectral_radius(&plant.closed_loop(&k))
                .map(|rho| rho < 1.0)
                .unwrap_or(false);
            if !stabilizing {
                return LandscapeCell {
                    i,
                    j,
                    c1,
                    c2,
                    stabilizing: false,
                    cost: None,
                    riem_min_eig: None,
                    euc_min_eig: None,
                };
            }
            let min_eigs = (|| -> gainopt_core::Result<(f64, f64, f64)> {
                let pd = point_data(plant, &k)?;
                let ct = christoffel(plant, &pd)?;
                let hr = restricted_hessian_matrix(
                    plant,
                    constraint,
                    &pd,
                    Some(&ct),
                    Connection::Riemannian,
                )?;
                let he =
                    restricted_hessian_matrix(plant, constraint, &pd, None, Connection::Euclidean)?;
                let (r_lo, _) = sym_extreme_eigs(&((&hr + hr.transpose()) * 0.5))?;
                let (e_lo, _) = sym_extreme_eigs(&((&he + he.transpose()) * 0.5))?;
                Ok((pd.cost, r_lo, e_lo))
            })();
            match min_eigs {
                Ok((cost, r_lo, e_lo)) => LandscapeCell {
                    i,
                    j,
                    c1,
                    c2,
                    stabilizing: true,
                    cost: Some(cost),
                    riem_min_eig: Some(r_lo),
                    euc_min_eig: Some(e_lo),
                },
                Err(_) => LandscapeCell {
                    i,
                    j,
                    c1,
                    c2,
                    stabilizing: false,
                    cost: None,
                    riem_min_eig: None,
                    euc_min_eig: None,
                },
            }
        })
        .collect();
    Ok(cells)
}

pub fn landscape_csv(cells: &[LandscapeCell]) -> String {
    let mut out = String::from("i,j,coord1,coord2,stabilizing,cost,riem_hess_min_eig,euc_hess_min_eig\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.i,
            c.j,
            fmt17(c.c1),
            fmt17(c.c2),
            u8::from(c.stabilizing),
            opt17(c.cost),
            opt17(c.riem_min_eig),
            opt17(c.euc_min_eig),
        ));
    }
    out
}

pub fn write_landscape(cells: &[LandscapeCell], out_dir: &Path) -> Result<(), String> {
    write_file(&out_dir.join("landscape.csv"), &landscape_csv(cells)).map_err(|e| e.to_string())
}
