//! Scenario files: a TOML description of one experiment.
//!
//! Unknown keys are rejected everywhere so that typos surface as errors
//! instead of silently falling back to defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mfg_core::mesh::DistanceMetric;
use mfg_core::Averaging;

use crate::error::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Number of time steps `n`.
    pub time_steps: usize,
    pub mesh: MeshSource,
    #[serde(default)]
    pub metric: DistanceMetric,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default = "default_floor")]
    pub density_floor: f64,
    pub initial: DensitySource,
    pub target: DensitySource,
    pub terminal: TerminalConfig,
    pub variants: Vec<Variant>,
    /// Variant whose interaction functional is evaluated on every solution
    /// for the running-interaction column of the cost table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_interaction: Option<String>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_floor() -> f64 {
    mfg_core::cost::DEFAULT_DENSITY_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Icosphere {
        subdivisions: u32,
        #[serde(default = "one")]
        radius: f64,
    },
    Grid {
        nx: usize,
        ny: usize,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// Flat grid with the faces inside `hole` removed.
    PuncturedGrid {
        nx: usize,
        ny: usize,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        height: f64,
        hole: Vec<Mask>,
    },
    /// OFF or OBJ file, relative to the scenario file.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

/// Vertex predicate used for holes and obstacle indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mask {
    /// Axis-aligned box, bounds inclusive.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Longitude range in degrees measured in the x-y plane, `atan2(y, x)`.
    LongitudeBand { min_degrees: f64, max_degrees: f64 },
    Vertices { indices: Vec<usize> },
}

impl Mask {
    pub fn contains(&self, index: usize, x: &[f64; 3]) -> bool {
        match self {
            Mask::Box { min, max } => (0..3).all(|d| x[d] >= min[d] && x[d] <= max[d]),
            Mask::LongitudeBand {
                min_degrees,
                max_degrees,
            } => {
                let lon = x[1].atan2(x[0]).to_degrees();
                lon >= *min_degrees && lon <= *max_degrees
            }
            Mask::Vertices { indices } => indices.contains(&index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySource {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bumps: Vec<Bump>,
    /// Whitespace-separated per-vertex values, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Fraction of the mass spread uniformly over the surface.
    #[serde(default)]
    pub background: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    /// Center given as a point; snapped to the nearest vertex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    pub width: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalConfig {
    Quadratic { weight: f64 },
    Kl { weight: f64 },
    Obstacle { weight: f64, region: Vec<Mask> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    pub interaction: InteractionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionConfig {
    Vanilla,
    Obstacle {
        weight: f64,
        region: Vec<Mask>,
    },
    Entropy {
        weight: f64,
    },
    Congestion {
        weight: f64,
        #[serde(default = "congestion_offset")]
        offset: f64,
    },
    /// Geodesic Gaussian kernel `mu exp(-d^2 / sigma^2)`.
    Nonlocal {
        weight: f64,
        #[serde(default = "one")]
        mu: f64,
        sigma: f64,
    },
    Dirichlet {
        weight: f64,
    },
}

fn congestion_offset() -> f64 {
    mfg_core::cost::DEFAULT_CONGESTION_OFFSET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub iterations: usize,
    pub step_size: f64,
    #[serde(default)]
    pub line_search: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default = "log_every")]
    pub log_every: usize,
}

fn log_every() -> usize {
    50
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            step_size: 1e-2,
            line_search: false,
            tolerance: None,
            deterministic: false,
            log_every: log_every(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Vtk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative to the scenario file.
    pub directory: PathBuf,
    #[serde(default)]
    pub format: SnapshotFormat,
    #[serde(default = "yes")]
    pub snapshots: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            format: SnapshotFormat::Csv,
            snapshots: true,
        }
    }
}

/// A parsed scenario together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub base: PathBuf,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| AppError::Invalid(e.to_string()))?;
        scenario.check()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<ScenarioFile, AppError> {
        let text = fs::read_to_string(path).map_err(|source| AppError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let scenario = Self::from_toml(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(ScenarioFile { scenario, base })
    }

    /// Checks that need no mesh.
    pub fn check(&self) -> Result<(), AppError> {
        let bad = |field: &str, reason: String| Err(AppError::Invalid(format!("{field}: {reason}")));
        if self.time_steps == 0 {
            return bad("time_steps", "must be at least 1".into());
        }
        if !(self.density_floor > 0.0) {
            return bad("density_floor", format!("must be positive, got {}", self.density_floor));
        }
        if !(self.solver.step_size > 0.0 && self.solver.step_size.is_finite()) {
            return bad("solver.step_size", format!("must be positive, got {}", self.solver.step_size));
        }
        if self.solver.iterations == 0 {
            return bad("solver.iterations", "must be at least 1".into());
        }
        if let Some(t) = self.solver.tolerance {
            if !(t >= 0.0) {
                return bad("solver.tolerance", format!("must be nonnegative, got {t}"));
            }
        }
        for (field, source) in [("initial", &self.initial), ("target", &self.target)] {
            if source.bumps.is_empty() && source.file.is_none() {
                return bad(field, "needs at least one bump or a file".into());
            }
            if !source.bumps.is_empty() && source.file.is_some() {
                return bad(field, "give either bumps or a file, not both".into());
            }
            if !(0.0..1.0).contains(&source.background) {
                return bad(field, format!("background must lie in [0, 1), got {}", source.background));
            }
            for (i, b) in source.bumps.iter().enumerate() {
                if b.center.is_some() == b.vertex.is_some() {
                    return bad(&format!("{field}.bumps[{i}]"), "set exactly one of `center` and `vertex`".into());
                }
                if !(b.width > 0.0 && b.width.is_finite()) {
                    return bad(&format!("{field}.bumps[{i}].width"), format!("must be positive, got {}", b.width));
                }
                if !(b.weight >= 0.0 && b.weight.is_finite()) {
                    return bad(&format!("{field}.bumps[{i}].weight"), format!("must be nonnegative, got {}", b.weight));
                }
            }
        }
        if self.variants.is_empty() {
            return bad("variants", "at least one variant is required".into());
        }
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].iter().any(|w| w.name == v.name) {
                return bad("variants", format!("duplicate name `{}`", v.name));
            }
            if v.name.is_empty() || v.name.contains(['/', '\\']) {
                return bad("variants", format!("`{}` is not usable as a directory name", v.name));
            }
            if let InteractionConfig::Nonlocal { sigma, .. } = v.interaction {
                if !(sigma > 0.0) {
                    return bad(&format!("variants.{}.interaction.sigma", v.name), format!("must be positive, got {sigma}"));
                }
            }
        }
        if let Some(name) = &self.report_interaction {
            if !self.variants.iter().any(|v| &v.name == name) {
                return bad("report_interaction", format!("no variant named `{name}`"));
            }
        }
        Ok(())
    }

    /// The interaction used for the running-interaction column.
    pub fn reported_interaction(&self) -> &InteractionConfig {
        let name = self.report_interaction.as_ref();
        self.variants
            .iter()
            .find(|v| Some(&v.name) == name)
            .map(|v| &v.interaction)
            .unwrap_or(&self.variants.last().expect("checked non-empty").interaction)
    }
}
