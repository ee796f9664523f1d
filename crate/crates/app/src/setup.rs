//! Turns a [`Scenario`] into the numerical objects the solver consumes.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use mfg_core::mesh::io::{load_mesh, MeshFormat};
use mfg_core::mesh::{gaussian_kernel, make_flat_grid, make_icosphere, make_punctured_grid};
use mfg_core::{CostSpec, Interaction, Options, Terminal, TriMesh};

use crate::density::{mix_uniform, nearest_vertex, normalize, synth_density, VertexBump};
use crate::error::AppError;
use crate::scenario::{DensitySource, InteractionConfig, Mask, MeshSource, Scenario, TerminalConfig};

/// Uniform fraction mixed into KL targets that specify no background, so the
/// target is positive wherever the solution can carry mass.
pub const KL_TARGET_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: TriMesh,
    pub initial: Vec<f64>,
    pub target: Vec<f64>,
    pub variants: Vec<(String, CostSpec<f64>)>,
    /// Interaction evaluated on every solution for the cost table.
    pub reported: Interaction<f64>,
    pub options: Options,
}

pub fn build_mesh(source: &MeshSource, base: &Path) -> Result<TriMesh, AppError> {
    match source {
        MeshSource::Icosphere { subdivisions, radius } => {
            if *subdivisions > 7 {
                return Err(AppError::Invalid(format!("icosphere subdivisions {subdivisions} is too large")));
            }
            if !(*radius > 0.0) {
                return Err(AppError::Invalid(format!("icosphere radius must be positive, got {radius}")));
            }
            Ok(make_icosphere(*subdivisions, *radius))
        }
        MeshSource::Grid { nx, ny, width, height } => {
            check_grid(*nx, *ny, *width, *height)?;
            Ok(make_flat_grid(*nx, *ny, *width, *height))
        }
        MeshSource::PuncturedGrid {
            nx,
            ny,
            width,
            height,
            hole,
        } => {
            check_grid(*nx, *ny, *width, *height)?;
            if hole.iter().any(|m| matches!(m, Mask::Vertices { .. })) {
                return Err(AppError::Invalid("mesh.hole accepts coordinate masks only".into()));
            }
            Ok(make_punctured_grid(*nx, *ny, *width, *height, |x| {
                hole.iter().any(|m| m.contains(usize::MAX, x))
            })?)
        }
        MeshSource::File { path } => {
            let full = base.join(path);
            let format = MeshFormat::from_path(&full)
                .ok_or_else(|| AppError::Invalid(format!("{}: unknown mesh extension", full.display())))?;
            Ok(load_mesh(&full, format)?)
        }
    }
}

fn check_grid(nx: usize, ny: usize, width: f64, height: f64) -> Result<(), AppError> {
    if nx == 0 || ny == 0 {
        return Err(AppError::Invalid("grid needs at least one cell per direction".into()));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(AppError::Invalid("grid extent must be positive".into()));
    }
    Ok(())
}

/// Per-vertex indicator of a union of masks.
pub fn indicator(mesh: &TriMesh, masks: &[Mask]) -> Result<Vec<f64>, AppError> {
    for m in masks {
        if let Mask::Vertices { indices } = m {
            if let Some(i) = indices.iter().find(|i| **i >= mesh.num_vertices()) {
                return Err(AppError::Invalid(format!(
                    "mask vertex {i} out of range (mesh has {})",
                    mesh.num_vertices()
                )));
            }
        }
    }
    Ok(mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, x)| if masks.iter().any(|m| m.contains(i, x)) { 1.0 } else { 0.0 })
        .collect())
}

pub fn build_density(
    mesh: &TriMesh,
    source: &DensitySource,
    scenario: &Scenario,
    base: &Path,
    what: &str,
) -> Result<Vec<f64>, AppError> {
    let err = |e: AppError| match e {
        AppError::Invalid(m) => AppError::Invalid(format!("{what}: {m}")),
        other => other,
    };
    let p = if let Some(file) = &source.file {
        let full = base.join(file);
        let text = fs::read_to_string(&full).map_err(AppError::io(&full))?;
        let values = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| AppError::Invalid(format!("{what}: {}: {e}", full.display())))?;
        if values.len() != mesh.num_vertices() {
            return Err(AppError::Invalid(format!(
                "{what}: {} has {} values, mesh has {} vertices",
                full.display(),
                values.len(),
                mesh.num_vertices()
            )));
        }
        normalize(mesh, values).map_err(err)?
    } else {
        let bumps = source
            .bumps
            .iter()
            .map(|b| VertexBump {
                vertex: b.vertex.unwrap_or_else(|| nearest_vertex(mesh, b.center.unwrap_or_default())),
                width: b.width,
                weight: b.weight,
            })
            .collect::<Vec<_>>();
        synth_density(mesh, &bumps, scenario.metric).map_err(err)?
    };
    Ok(if source.background > 0.0 {
        mix_uniform(mesh, &p, source.background)
    } else {
        p
    })
}

pub fn build_interaction(
    mesh: &TriMesh,
    config: &InteractionConfig,
    scenario: &Scenario,
) -> Result<Interaction<f64>, AppError> {
    Ok(match config {
        InteractionConfig::Vanilla => Interaction::Vanilla,
        InteractionConfig::Obstacle { weight, region } => Interaction::Obstacle {
            weight: *weight,
            indicator: indicator(mesh, region)?,
        },
        InteractionConfig::Entropy { weight } => Interaction::Entropy { weight: *weight },
        InteractionConfig::Congestion { weight, offset } => Interaction::Congestion {
            weight: *weight,
            offset: *offset,
        },
        InteractionConfig::Nonlocal { weight, mu, sigma } => Interaction::Nonlocal {
            weight: *weight,
            kernel: Arc::new(gaussian_kernel(mesh, *mu, *sigma, scenario.metric)),
        },
        InteractionConfig::Dirichlet { weight } => Interaction::Dirichlet { weight: *weight },
    })
}

pub fn build_problem(scenario: &Scenario, base: &Path) -> Result<Problem, AppError> {
    scenario.check()?;
    let mesh = build_mesh(&scenario.mesh, base)?;
    let initial = build_density(&mesh, &scenario.initial, scenario, base, "initial")?;
    let mut target = build_density(&mesh, &scenario.target, scenario, base, "target")?;
    let terminal = match &scenario.terminal {
        TerminalConfig::Quadratic { weight } => Terminal::Quadratic {
            weight: *weight,
            target: target.clone(),
        },
        TerminalConfig::Kl { weight } => {
            if scenario.target.background == 0.0 {
                target = mix_uniform(&mesh, &target, KL_TARGET_FLOOR);
            }
            Terminal::KullbackLeibler {
                weight: *weight,
                target: target.clone(),
            }
        }
        TerminalConfig::Obstacle { weight, region } => Terminal::ObstacleRegion {
            weight: *weight,
            indicator: indicator(&mesh, region)?,
        },
    };

    let mut built: Vec<(&InteractionConfig, Interaction<f64>)> = Vec::new();
    let mut variants = Vec::with_capacity(scenario.variants.len());
    for v in &scenario.variants {
        let interaction = match built.iter().find(|(c, _)| *c == &v.interaction) {
            Some((_, i)) => i.clone(),
            None => {
                let i = build_interaction(&mesh, &v.interaction, scenario)?;
                built.push((&v.interaction, i.clone()));
                i
            }
        };
        let spec = CostSpec {
            interaction,
            terminal: terminal.clone(),
            averaging: scenario.averaging,
            density_floor: scenario.density_floor,
        };
        spec.validate(&mesh)
            .map_err(|e| AppError::Invalid(format!("variant `{}`: {e}", v.name)))?;
        variants.push((v.name.clone(), spec));
    }
    let reported_config = scenario.reported_interaction();
    let reported = match built.iter().find(|(c, _)| *c == reported_config) {
        Some((_, i)) => i.clone(),
        None => build_interaction(&mesh, reported_config, scenario)?,
    };

    let s = &scenario.solver;
    let options = Options {
        iterations: s.iterations,
        step_size: s.step_size,
        line_search: s.line_search,
        log_every: s.log_every,
        tolerance: s.tolerance,
        deterministic: s.deterministic,
    };
    Ok(Problem {
        mesh,
        initial,
        target,
        variants,
        reported,
        options,
    })
}
