use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid driver values: {0}")]
    InvalidValues(String),

    #[error("objective is not finite at {coordinate:?} (value {value})")]
    NonFiniteObjective { coordinate: Vec<f64>, value: f64 },

    #[error("table length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("state and field live on different grids")]
    GridMismatch,

    #[error("budget mismatch: {0} vs {1}")]
    BudgetMismatch(f64, f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A growth factor went non-positive; the lambda certificate does not hold.
    #[error("interaction factor {factor} at cell {cell} is not positive (step {step})")]
    CertificateViolated { cell: usize, factor: f64, step: u64 },

    #[error("interaction sum vanished")]
    AnnihilatedMass,

    #[error("instance too large for the extended-precision replay: {cells} cells (max {max})")]
    TooLarge { cells: usize, max: usize },

    #[error("sort round {round} produced no winner within {ticks} ticks (smallest gap {gap})")]
    RoundExhausted { round: usize, ticks: u64, gap: f64 },

    #[error("sort could not be resolved: {0}")]
    Unresolved(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
