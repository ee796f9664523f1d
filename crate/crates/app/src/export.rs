//! Run artifacts: density snapshots, the cost table and JSON reports.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mfg_core::mesh::io::write_vtk;
use mfg_core::{Density, TriMesh};

use crate::error::AppError;
use crate::run::CostRow;
use crate::scenario::SnapshotFormat;

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(AppError::io(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(AppError::io(path))
}

/// Digits used for step indices in snapshot names (at least three).
pub fn step_width(n: usize) -> usize {
    n.to_string().len().max(3)
}

/// Writes `density_<k>.{csv,vtk}` for `k = 0..=n`; returns the paths in step order.
pub fn export_snapshots(
    mesh: &TriMesh,
    p: &Density,
    format: SnapshotFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, AppError> {
    let n = p.num_steps();
    let width = step_width(n);
    let mut paths = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let slice = p.at(k);
        let path = match format {
            SnapshotFormat::Csv => dir.join(format!("density_{k:0width$}.csv")),
            SnapshotFormat::Vtk => dir.join(format!("density_{k:0width$}.vtk")),
        };
        let mut out = create(&path)?;
        let written = match format {
            SnapshotFormat::Csv => write_csv_slice(mesh, slice, &mut out),
            SnapshotFormat::Vtk => write_vtk(mesh, &format!("density step {k} of {n}"), &[("density", slice)], &mut out),
        };
        written.and_then(|_| out.flush()).map_err(AppError::io(&path))?;
        paths.push(path);
    }
    Ok(paths)
}

fn write_csv_slice(mesh: &TriMesh, p: &[f64], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "vertex_index,x,y,z,density")?;
    for (i, (x, v)) in mesh.vertices().iter().zip(p).enumerate() {
        writeln!(out, "{i},{},{},{},{v}", x[0], x[1], x[2])?;
    }
    Ok(())
}

pub const COST_TABLE_HEADER: &str =
    "variant,dynamic,running_interaction,terminal,objective,kkt_max,kkt_min,iterations,min_density";

pub fn write_cost_table(rows: &[CostRow], path: &Path) -> Result<(), AppError> {
    let mut out = create(path)?;
    let mut body = String::from(COST_TABLE_HEADER);
    body.push('\n');
    for r in rows {
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.variant,
            r.dynamic,
            r.running_interaction.map_or(String::new(), |v| v.to_string()),
            r.terminal,
            r.objective,
            r.kkt_max,
            r.kkt_min,
            r.iterations,
            r.min_density
        ));
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(AppError::io(path))
}

pub fn write_json<S: serde::Serialize>(value: &S, path: &Path) -> Result<(), AppError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(std::io::Error::from)
        .and_then(|_| out.flush())
        .map_err(AppError::io(path))
}
