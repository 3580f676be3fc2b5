use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transition matrix must be square with at least 2 symbols (got {rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("transition entry ({row},{col}) = {value} is not 0 or 1")]
    NotZeroOne { row: usize, col: usize, value: i64 },
    #[error("symbol {symbol} has an empty {which}")]
    DeadSymbol { symbol: usize, which: &'static str },
    #[error("transition matrix is not aperiodic (no power up to {bound} is positive)")]
    NotAperiodic { bound: usize },
    #[error("words have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid word {0:?}")]
    BadWord(String),
    #[error("potential table is missing word {0}")]
    MissingWord(String),
    #[error("word {0} is not admissible")]
    InadmissibleWord(String),
    #[error("theta must lie in (0,1), got {0}")]
    BadTheta(f64),
    #[error("word of length {len} is too short for {needed} symbols")]
    WordTooShort { len: usize, needed: usize },
    #[error("objects are defined over different shifts or metrics")]
    ModelMismatch,
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("observable is cohomologous to a constant (cycle-mean spread {spread:e})")]
    CohomologousConstant { spread: f64 },
    #[error("delta0 = {delta0} must satisfy 0 < delta0 < B_psi = {b_psi}")]
    Delta0OutOfRange { delta0: f64, b_psi: f64 },
    #[error("bound violated: {what}")]
    BoundViolated { what: String },
    #[error("problem too large: {0}")]
    Infeasible(String),
    #[error("potential is not normalized (max |L 1 - 1| = {0:e})")]
    NotNormalized(f64),
    #[error("observable must be nonnegative (min = {0})")]
    NegativeObservable(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
