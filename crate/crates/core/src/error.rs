use thiserror::Error;

/// Errors raised across the symbolic, operator and numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("jet order {order} exceeds the configured maximum {max}")]
    MaxOrderExceeded { order: u32, max: u8 },

    #[error("expression contains nonlocal atoms: {0}")]
    NonlocalArgument(String),

    #[error("nonlocal nesting depth exceeds 1 in {0}")]
    NestingDepth(String),

    #[error("could not decide equivalence modulo divergences; residual: {residual}")]
    Undecided { residual: String },

    #[error("Dxi argument {atom} has mean {mean:e}, above tolerance {tolerance:e}")]
    NonzeroMean {
        atom: String,
        mean: f64,
        tolerance: f64,
    },

    #[error("no grid data assigned for family {0}")]
    MissingField(char),

    #[error("hierarchy member S{0} is nonlocal")]
    NonlocalHierarchyMember(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("gimbal lock: |cos theta_{i}{j}| below threshold at x = {x}")]
    GimbalLock { i: usize, j: usize, x: f64 },

    #[error("first Frenet curvature is not positive at x = {x}")]
    PositivityLoss { x: f64 },

    #[error("Frenet frame undefined at x = {x}: {reason}")]
    DegenerateFrenet { x: f64, reason: String },

    #[error("unwrapped angle jumps by {jump} between grid points near x = {x}")]
    BranchJump { x: f64, jump: f64 },

    #[error("solution blew up at t = {t}: max |u| = {max}")]
    BlowUp { t: f64, max: f64 },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StabilityViolation { dt: f64, bound: f64 },

    #[error("curvature recomputed from the curve drifted by {drift:e} (tolerance {tolerance:e})")]
    ConsistencyDrift { drift: f64, tolerance: f64 },

    #[error("need at least 5 time levels, got {0}")]
    InsufficientSnapshots(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
