use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateTriangle { face: usize, area: f64 },
    #[error("mesh has no triangles")]
    Empty,
    #[error("vertex {vertex} is not used by any triangle")]
    IsolatedVertex { vertex: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("{what}: entry {index} is {value:e}, expected strictly positive")]
    NonPositive {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{what}: entry {index} is {value:e}, expected nonnegative")]
    Negative {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("kl terminal: target vanishes at vertex {index} where density is {value:e}")]
    UnsupportedTarget { index: usize, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("{field}: weight must be finite and nonnegative, got {value}")]
    BadWeight { field: &'static str, value: f64 },
    #[error("{field}: expected {expected} entries, got {got}")]
    Length {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field}: indicator entry {index} = {value} outside [0, 1]")]
    Indicator {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{field}: not a density ({reason})")]
    NotADensity { field: &'static str, reason: String },
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("cost specification: {0}")]
    Spec(#[from] SpecError),
    #[error("domain error at iteration {iteration}: {source}")]
    Domain {
        iteration: usize,
        #[source]
        source: DomainError,
    },
    #[error("objective term `{term}` is not finite ({value}) at iteration {iteration}")]
    NonFinite {
        term: &'static str,
        value: f64,
        iteration: usize,
    },
    #[error("factorization failed: pivot {pivot} in mode {mode} is not positive ({value:e})")]
    Factorization { mode: usize, pivot: usize, value: f64 },
    #[error("flux left the triangle planes at iteration {iteration} (normal fraction {fraction:e})")]
    Tangency { iteration: usize, fraction: f64 },
    #[error("invalid solver option: {0}")]
    Options(String),
}
