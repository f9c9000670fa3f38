use thiserror::Error;

/// Every failure the solver, analyzers and CLI can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("eigenvalue gap {gap:e} below the hyperbolicity threshold at u = {state:?}")]
    HyperbolicityLoss { state: Vec<f64>, gap: f64 },
    #[error("complex eigenvalue (imaginary part {imag:e}) at u = {state:?}")]
    ComplexEigenvalue { state: Vec<f64>, imag: f64 },
    #[error("state {state:?} lies outside the admissible box")]
    OutOfDomain { state: Vec<f64> },
    #[error("eigenbasis is singular (condition number {condition:e})")]
    SingularEigenbasis { condition: f64 },
    #[error("state is not an equilibrium: |g(u0)| = {residual:e}")]
    NotEquilibrium { residual: f64 },
    #[error("fewer than two grid points in the envelope window [{a}, {b}]")]
    EmptyWindow { a: f64, b: f64 },
    #[error("fixed-point iteration did not converge after {iterations} sweeps (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("curve left the admissible box at {state:?}")]
    DomainEscape { state: Vec<f64> },
    #[error("Newton iteration diverged (residual {residual:e})")]
    NewtonDivergence { residual: f64 },
    #[error("jump |uR - uL| = {jump} exceeds the admissible maximum {max}")]
    JumpTooLarge { jump: f64, max: f64 },
    #[error("Hugoniot continuation failed at parameter {at}")]
    ContinuationFailure { at: f64 },
    #[error("event count exceeded the cap of {cap} (interaction threshold too small?)")]
    EventOverflow { cap: usize },
    #[error("time {t} is outside the solved window [{t0}, {t1}]")]
    OutOfWindow { t: f64, t0: f64, t1: f64 },
    #[error("initial datum has unbounded support")]
    UnboundedSupport,
    #[error("Upsilon = {value} exceeded the fence {fence} at t = {t}")]
    TvBlowup { value: f64, fence: f64, t: f64 },
    #[error("front {front} runs along a region edge")]
    NonTransversalEdge { front: usize },
    #[error("reduced flux samples contain non-finite values")]
    GridMismatch,
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("config constraint violated: {0}")]
    Constraint(String),
    #[error("I/O error: {0}")]
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

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } | Error::Constraint(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
