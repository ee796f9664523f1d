use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mfg_app::run::{format_table, read_run_index};
use mfg_app::scenario::MeshSource;
use mfg_app::setup::{build_mesh, build_problem};
use mfg_app::{run_scenario, AppError, Overrides, Scenario, SnapshotFormat};

#[derive(Parser)]
#[command(name = "mfg", version, about = "Mean-field games on triangulated surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every variant of a scenario and write snapshots and reports.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
        /// Run single-threaded so reports are bit-for-bit reproducible.
        #[arg(long)]
        deterministic: bool,
        /// Output directory (defaults to the scenario's `output.directory`).
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<SnapshotFormat>,
    },
    /// Parse a scenario and build its mesh and densities without solving.
    Validate { scenario: PathBuf },
    /// Print the cost table of a finished run.
    Report { run_dir: PathBuf },
    /// Print statistics of a mesh file or generator (`icosphere:3`, `grid:20x20`).
    MeshInfo { mesh: String },
    /// Print a scenario in normalized form.
    Dump { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation failures; 2 is reserved for the solver
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut shown = e.to_string();
            eprintln!("error: {shown}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let text = s.to_string();
                if !shown.contains(&text) {
                    eprintln!("  caused by: {text}");
                    shown = text;
                }
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), AppError> {
    match command {
        Command::Solve {
            scenario,
            iterations,
            eta,
            deterministic,
            output,
            format,
        } => {
            let file = Scenario::load(&scenario)?;
            let overrides = Overrides {
                iterations,
                step_size: eta,
                deterministic,
                output,
                format,
            };
            let summary = run_scenario(&file, &overrides)?;
            println!(
                "{}: {} vertices, {} triangles, n = {}",
                summary.scenario, summary.vertices, summary.triangles, summary.time_steps
            );
            print!("{}", format_table(&summary.rows));
        }
        Command::Validate { scenario } => {
            let file = Scenario::load(&scenario)?;
            let problem = build_problem(&file.scenario, &file.base)?;
            println!(
                "{}: ok ({} vertices, {} triangles, {} variants)",
                file.scenario.name,
                problem.mesh.num_vertices(),
                problem.mesh.num_triangles(),
                problem.variants.len()
            );
        }
        Command::Report { run_dir } => {
            let index = read_run_index(&run_dir)?;
            println!(
                "{}: {} vertices, {} triangles, n = {}",
                index.scenario, index.vertices, index.triangles, index.time_steps
            );
            print!("{}", format_table(&index.rows));
        }
        Command::MeshInfo { mesh } => {
            let source = parse_mesh_arg(&mesh)?;
            let m = build_mesh(&source, Path::new(""))?;
            let (v, e, f) = (m.num_vertices(), m.num_edges(), m.num_triangles());
            let areas = m.triangle_areas();
            let min = areas.iter().copied().fold(f64::INFINITY, f64::min);
            let max = areas.iter().copied().fold(0.0, f64::max);
            println!("vertices        {v}");
            println!("triangles       {f}");
            println!("edges           {e}");
            println!("boundary edges  {}", m.boundary_edge_count());
            println!("euler           {}", v as i64 - e as i64 + f as i64);
            println!("total area      {}", m.total_area());
            println!("triangle area   {min:e} .. {max:e}");
        }
        Command::Dump { scenario } => {
            let file = Scenario::load(&scenario)?;
            print!("{}", file.scenario.to_toml());
        }
    }
    Ok(())
}

fn parse_mesh_arg(arg: &str) -> Result<MeshSource, AppError> {
    let bad = || AppError::Invalid(format!("cannot read mesh argument `{arg}`"));
    if let Some(level) = arg.strip_prefix("icosphere:") {
        return Ok(MeshSource::Icosphere {
            subdivisions: level.parse().map_err(|_| bad())?,
            radius: 1.0,
        });
    }
    if let Some(dims) = arg.strip_prefix("grid:") {
        let (nx, ny) = dims.split_once('x').ok_or_else(bad)?;
        return Ok(MeshSource::Grid {
            nx: nx.parse().map_err(|_| bad())?,
            ny: ny.parse().map_err(|_| bad())?,
            width: 1.0,
            height: 1.0,
        });
    }
    Ok(MeshSource::File { path: arg.into() })
}
