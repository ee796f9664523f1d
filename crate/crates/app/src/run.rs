//! Running every variant of a scenario and collecting the cost table.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use mfg_core::cost::running_interaction;
use mfg_core::{pgd_solve_with, Projection, Solution, SolveReport};

use crate::error::AppError;
use crate::export::{export_snapshots, write_cost_table, write_json};
use crate::scenario::{ScenarioFile, SnapshotFormat};
use crate::setup::{build_problem, Problem};

/// One row of the cost table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub variant: String,
    pub dynamic: f64,
    /// `(1/n) Σ_{k=1}^{n-1} F(P_k)` for the scenario's reported interaction;
    /// `None` when the solution lies outside that functional's domain.
    pub running_interaction: Option<f64>,
    pub terminal: f64,
    /// Objective of the variant's own problem.
    pub objective: f64,
    pub kkt_max: f64,
    pub kkt_min: f64,
    pub iterations: usize,
    pub min_density: f64,
}

#[derive(Debug, Clone)]
pub struct VariantRun {
    pub name: String,
    pub solution: Solution<f64>,
    pub row: CostRow,
}

/// Command-line adjustments applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub iterations: Option<usize>,
    pub step_size: Option<f64>,
    pub deterministic: bool,
    pub output: Option<PathBuf>,
    pub format: Option<SnapshotFormat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub vertices: usize,
    pub triangles: usize,
    pub time_steps: usize,
    pub precompute_seconds: f64,
    pub rows: Vec<CostRow>,
    pub reports: Vec<VariantReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantReport {
    pub variant: String,
    pub report: SolveReport,
}

/// Subset of `run.json` read back by the `report` command.
#[derive(Debug, Clone, Deserialize)]
pub struct RunIndex {
    pub scenario: String,
    pub vertices: usize,
    pub triangles: usize,
    pub time_steps: usize,
    pub rows: Vec<CostRow>,
}

/// Solves every variant against one shared projection operator.
pub fn run_problem(problem: &Problem, n: usize) -> Result<(Vec<VariantRun>, f64), AppError> {
    let start = Instant::now();
    let op = Projection::build(&problem.mesh, n).map_err(|source| AppError::Solve {
        variant: "(projection)".into(),
        source,
    })?;
    let precompute = start.elapsed().as_secs_f64();
    let mut runs = Vec::with_capacity(problem.variants.len());
    for (name, spec) in &problem.variants {
        let fail = |source| AppError::Solve {
            variant: name.clone(),
            source,
        };
        let mut solution = pgd_solve_with(&op, &problem.mesh, spec, &problem.initial, &problem.options).map_err(fail)?;
        solution.report.precompute_seconds = precompute;
        let running = match running_interaction(&problem.mesh, &problem.reported, &solution.density) {
            Ok(v) => Some(v),
            Err(e) => {
                eprintln!("warning: variant `{name}`: reported interaction not evaluated: {e}");
                None
            }
        };
        let r = &solution.report;
        let row = CostRow {
            variant: name.clone(),
            dynamic: r.costs.dynamic,
            running_interaction: running,
            terminal: r.costs.terminal,
            objective: r.costs.total,
            kkt_max: r.kkt.max,
            kkt_min: r.kkt.min,
            iterations: r.iterations,
            min_density: r.min_density,
        };
        runs.push(VariantRun {
            name: name.clone(),
            solution,
            row,
        });
    }
    Ok((runs, precompute))
}

/// Loads, solves and writes all artifacts of a scenario.
pub fn run_scenario(file: &ScenarioFile, overrides: &Overrides) -> Result<RunSummary, AppError> {
    let mut scenario = file.scenario.clone();
    if let Some(i) = overrides.iterations {
        scenario.solver.iterations = i;
    }
    if let Some(eta) = overrides.step_size {
        scenario.solver.step_size = eta;
    }
    scenario.solver.deterministic |= overrides.deterministic;
    if let Some(f) = overrides.format {
        scenario.output.format = f;
    }
    let out_dir = overrides
        .output
        .clone()
        .unwrap_or_else(|| file.base.join(&scenario.output.directory));

    let problem = build_problem(&scenario, &file.base)?;
    let (runs, precompute) = run_problem(&problem, scenario.time_steps)?;
    for run in &runs {
        let dir = out_dir.join(&run.name);
        if scenario.output.snapshots {
            export_snapshots(&problem.mesh, &run.solution.density, scenario.output.format, &dir)?;
        }
        write_json(&run.solution.report, &dir.join("report.json"))?;
    }
    let summary = RunSummary {
        scenario: scenario.name.clone(),
        vertices: problem.mesh.num_vertices(),
        triangles: problem.mesh.num_triangles(),
        time_steps: scenario.time_steps,
        precompute_seconds: precompute,
        rows: runs.iter().map(|r| r.row.clone()).collect(),
        reports: runs
            .iter()
            .map(|r| VariantReport {
                variant: r.name.clone(),
                report: r.solution.report.clone(),
            })
            .collect(),
    };
    write_cost_table(&summary.rows, &out_dir.join("costs.csv"))?;
    write_json(&summary, &out_dir.join("run.json"))?;
    std::fs::write(out_dir.join("scenario.toml"), scenario.to_toml()).map_err(AppError::io(out_dir.join("scenario.toml")))?;
    Ok(summary)
}

pub fn read_run_index(dir: &Path) -> Result<RunIndex, AppError> {
    let path = dir.join("run.json");
    let text = std::fs::read_to_string(&path).map_err(AppError::io(&path))?;
    serde_json::from_str(&text).map_err(|e| AppError::Invalid(format!("{}: {e}", path.display())))
}

/// Fixed-width text rendering of the cost table.
pub fn format_table(rows: &[CostRow]) -> String {
    let width = rows.iter().map(|r| r.variant.len()).max().unwrap_or(0).max(7);
    let mut s = format!(
        "{:<width$}  {:>12}  {:>12}  {:>12}  {:>10}\n",
        "variant", "dynamic", "interaction", "terminal", "kkt max"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<width$}  {:>12.6}  {:>12}  {:>12.6}  {:>10.3e}\n",
            r.variant,
            r.dynamic,
            r.running_interaction.map_or("n/a".to_string(), |v| format!("{v:.6}")),
            r.terminal,
            r.kkt_max
        ));
    }
    s
}
