use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("clifford dimension m = {m} outside supported range 1..={max}")]
    DimensionGuard { m: usize, max: usize },

    #[error("invalid generator indices ({i}, {j}) for m = {m}; need distinct values in 1..={m}")]
    InvalidIndices { i: usize, j: usize, m: usize },

    #[error("m = {m} (m mod 8 = {residue}) is of complex type and carries no real or quaternionic structure")]
    ComplexType { m: usize, residue: usize },

    #[error("m = {m} carries a structure with J^2 = {epsilon}, a real structure (J^2 = +1) is required")]
    NotRealType { m: usize, epsilon: i32 },

    #[error("structure map solver failed: {0}")]
    StructureSolver(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric: residual {residual:e} exceeds {tolerance:e}")]
    NotSymmetric { residual: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator dimension {dim} must be even")]
    OddDimension { dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid window: lower {lower} must be strictly below upper {upper}")]
    InvalidWindow { lower: f64, upper: f64 },

    #[error("window endpoint {endpoint} is within {margin:e} of eigenvalue {eigenvalue}")]
    EndpointCollision { endpoint: f64, eigenvalue: f64, margin: f64 },

    #[error("window holds {found} eigenvalues, expected {expected}")]
    WindowCount { expected: usize, found: usize },

    #[error("symmetric eigensolver failed to converge")]
    EigenSolver,

    #[error("resolvent solve failed at quadrature node {node} (z = {re}+{im}i, nearest eigenvalue distance {gap:e})")]
    ResolventSolve { node: usize, re: f64, im: f64, gap: f64 },

    #[error("could not reach a simple spectrum after {attempts} attempts (min gap {min_gap:e})")]
    NotSimple { attempts: usize, min_gap: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("window left at t = {t}: {reason}")]
    WindowLost { t: f64, reason: String },

    #[error("loop does not close: |D(1) - D(0)| = {residual:e}")]
    NotClosed { residual: f64 },

    #[error("adaptive sampling stalled near t = {t} (step {step:e})")]
    RefinementStalled { t: f64, step: f64 },

    #[error("loops do not share a basepoint: |loop1(0) - loop2(0)| = {residual:e}")]
    BasepointMismatch { residual: f64 },

    #[error("no degeneracy found: best gap {gap:e} at (r, theta) = ({r}, {theta})")]
    NotFound { r: f64, theta: f64, gap: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
