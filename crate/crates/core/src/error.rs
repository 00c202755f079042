use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("edge {edge}: coefficient matrix is not diagonalizable over the reals at x = {x}")]
    NonDiagonalizable { edge: usize, x: f64 },

    #[error("edge {edge}: eigenvalue vanishes at x = {x}")]
    ZeroEigenvalue { edge: usize, x: f64 },

    #[error("edge {edge}: eigenbranch {branch} changes sign")]
    SignChange { edge: usize, branch: usize },

    #[error("edge {edge}: lower-order term N is not identically zero")]
    NonzeroLowerOrder { edge: usize },

    #[error("vertex {vertex} is a sink (incoming but no outgoing components)")]
    SinkDetected { vertex: usize },

    #[error("vertex {vertex}: expected {expected} boundary conditions, found {found}")]
    WrongConditionCount {
        vertex: usize,
        expected: usize,
        found: usize,
    },

    #[error("vertex {vertex}: condition matrix has {found} columns, expected {expected}")]
    ConditionShape {
        vertex: usize,
        expected: usize,
        found: usize,
    },

    #[error("outgoing boundary matrix is singular (reciprocal condition number {rcond:e})")]
    SingularOutgoingMatrix { rcond: f64 },

    #[error("component {component}: velocity must be positive (min {min})")]
    NonPositiveVelocity { component: usize, min: f64 },

    #[error("traverse times are not commensurable: {0}")]
    RationalDependenceViolated(String),

    #[error("explicit evaluation requires unit velocities")]
    NotUnitSpeed,

    #[error("eigenvalue clusters at {a} and {b} are too close to separate")]
    ClusterAmbiguity { a: String, b: String },

    #[error("spectral decomposition failed verification (residual {residual:e})")]
    InaccurateDecomposition { residual: f64 },

    #[error("time {t} is not a multiple of the grid step {dt}")]
    TimeNotAligned { t: f64, dt: f64 },

    #[error("resolvent series diverges: |B| e^(-Re λ) = {ratio} >= 1")]
    SeriesDiverges { ratio: f64 },

    #[error("sample grids differ")]
    GridMismatch,

    #[error("the selected eigenvalue set is empty")]
    EmptySpectralSet,

    #[error("negative time {0}")]
    NegativeTime(f64),
}
