use thiserror::Error;

/// Errors produced by validation, copula evaluation, the LP solver, and
/// posterior sampling.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a type invariant. The message carries the field path
    /// of the first violation found.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A joint probability exceeded its marginal, or two redundant input
    /// parameterizations disagree.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    /// A parameter was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The simplex exceeded its pivot budget.
    #[error("LP solver stalled after {pivots} pivots")]
    SolverStall { pivots: usize },

    /// A probability matrix entry was more negative than floating-point noise
    /// can explain.
    #[error("internal error: {0}")]
    Internal(String),

    /// No always survivors at the requested coupling.
    #[error("degenerate problem: {0}")]
    Degenerate(String),

    /// Every row of a sweep was infeasible.
    #[error("data incompatible with the assumptions at every grid value")]
    AllInfeasible,

    /// The rejection sampler ran out of proposals before reaching its target.
    #[error(
        "rejection budget exhausted: {accepted} draws accepted out of {attempts} proposals \
         (acceptance rate {rate:.6})"
    )]
    BudgetExhausted {
        accepted: usize,
        attempts: usize,
        rate: f64,
    },

    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
