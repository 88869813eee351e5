use std::path::PathBuf;

use thiserror::Error;

use crate::sep::Trajectory;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot parse expression `{text}`: {reason}")]
    Expression { text: String, reason: String },
    #[error("malformed structured text: {0}")]
    Syntax(String),
    #[error("{field}: {reason}")]
    Field { field: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("period rank must be at least 1")]
    ZeroDimension,
    #[error("quotient graph has no vertices")]
    NoVertices,
    #[error("edge {edge}: shift has {found} components, expected {expected}")]
    ShiftDimension {
        edge: usize,
        expected: usize,
        found: usize,
    },
    #[error("edge {edge}: vertex {vertex} out of range (graph has {count} vertices)")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        count: usize,
    },
    #[error("edge {edge}: zero-shift self-loop at vertex {vertex}")]
    ZeroShiftLoop { edge: usize, vertex: usize },
    #[error("edge {edge} ({tail} -> {head}, shift {shift:?}) has no reverse edge")]
    MissingReverse {
        edge: usize,
        tail: usize,
        head: usize,
        shift: Vec<i64>,
    },
    #[error("quotient graph is disconnected: vertex {vertex} unreachable from vertex 0")]
    Disconnected { vertex: usize },
    #[error("edge shifts generate a sublattice of index {index} instead of the full period group")]
    ShiftsDoNotSpan { index: u64 },
    #[error("scaling factor N must be at least 1")]
    ZeroScale,
    #[error("ball radius {radius} must be below N/2 = {limit}")]
    RadiusTooLarge { radius: f64, limit: f64 },
    #[error("cell has {found} coordinates, expected {expected}")]
    CellDimension { expected: usize, found: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum HarmonicError {
    #[error("basis must be {dim}x{dim}")]
    BasisShape { dim: usize },
    #[error("basis is not invertible")]
    SingularBasis,
    #[error("harmonic system is singular (pivot column {column}); the quotient graph is disconnected")]
    SingularSystem { column: usize },
    #[error("expected {expected} position vectors of dimension {dim}, got {found}")]
    PositionShape {
        expected: usize,
        dim: usize,
        found: usize,
    },
    #[error("pinned vertex {0} out of range")]
    PinOutOfRange(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("horizon must be positive, got {0}")]
    Horizon(f64),
    #[error("snapshot times must be strictly increasing within [0, {horizon}]")]
    SnapshotTimes { horizon: f64 },
    #[error("realization is not harmonic (max residual {residual:e}); refusing to simulate")]
    NonHarmonic { residual: f64 },
    #[error("drift and realization have different dimensions ({drift} vs {lattice})")]
    Dimension { drift: usize, lattice: usize },
    #[error("event budget of {budget} candidates exhausted at t = {time}")]
    EventBudget {
        budget: u64,
        time: f64,
        partial: Box<Trajectory>,
    },
    #[error("accepted jump with rate exponent {exponent} above the thinning bound {bound}")]
    RateBound { exponent: f64, bound: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum PdeError {
    #[error("grid solver supports d = 1 or 2, got {0}")]
    Dimension(usize),
    #[error("time step {dt:e} violates the stability bound {bound:e}")]
    Stability { dt: f64, bound: f64 },
    #[error("grid needs at least 3 points per axis, got {0}")]
    GridTooSmall(usize),
    #[error("requested times must be non-negative and increasing")]
    Times,
}

#[derive(Debug, Error, PartialEq)]
pub enum ObservableError {
    #[error("local window of {found} sites exceeds the enumeration limit of {limit}")]
    WindowTooLarge { found: usize, limit: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("{what} differs between simulation and PDE ({left} vs {right})")]
    Mismatch {
        what: &'static str,
        left: String,
        right: String,
    },
    #[error("density {0} outside [0, 1]")]
    Density(f64),
    #[error("no snapshot at t = {0}")]
    MissingTime(f64),
}

/// Error surfaced by the experiment harness, tagged with the stage that failed.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(#[from] ParseError),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub fn stage(stage: impl Into<String>, err: impl std::fmt::Display) -> Self {
        ExperimentError::Stage {
            stage: stage.into(),
            message: err.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.into(),
            source,
        }
    }
}
