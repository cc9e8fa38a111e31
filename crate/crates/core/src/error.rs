use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("face {face} is not a triangle ({count} vertices)")]
    NotTriangle { face: usize, count: usize },
    #[error("face {face} references vertex {index} out of range")]
    IndexOutOfRange { face: usize, index: i64 },
    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },
    #[error("mesh has no faces")]
    Empty,
    #[error("vertex {vertex} is not referenced by any face")]
    IsolatedVertex { vertex: usize },
    #[error("non-manifold edge {edge} ({a}, {b}) has {count} incident faces")]
    NonManifoldEdge {
        edge: usize,
        a: usize,
        b: usize,
        count: usize,
    },
    #[error("edge {edge} ({a}, {b}) is shared by inconsistently oriented faces")]
    InconsistentOrientation { edge: usize, a: usize, b: usize },
    #[error("non-manifold vertex {vertex}")]
    NonManifoldVertex { vertex: usize },
    #[error("degenerate triangle {face} (area {area:e})")]
    DegenerateTriangle { face: usize, area: f64 },
    #[error("no boundary loop")]
    NoBoundary,
    #[error("frame construction failed at vertex {vertex}: zero normal")]
    ZeroNormal { vertex: usize },
    #[error("face {face} is flipped relative to vertex {vertex}")]
    OppositeNormals { vertex: usize, face: usize },
    #[error("vertex {vertex} is not incident on face {face}")]
    NotIncident { vertex: usize, face: usize },
}

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("fiber radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("mesh has no interior edges")]
    NoInteriorEdges,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("N must be even and ≥ 8")]
    BadFiberCount(usize),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("boundary vertex {0} has no angle")]
    MissingBoundaryAngle(usize),
    #[error("vertex {0} is not on the boundary")]
    NotBoundary(usize),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("factorization failed at frequency {k}")]
    Factorization { k: i64 },
    #[error("singular Schur complement: incompatible boundary data")]
    SingularSchur,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("zero total mass")]
    ZeroMass,
    #[error("eigen iteration did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("field undefined at vertex {0}")]
    Undefined(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown key: {0}")]
    UnknownKey(String),
    #[error("{msg}")]
    Invalid { key: String, msg: String },
    #[error("config line {line}: expected \"key = value\"")]
    Syntax { line: usize },
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
