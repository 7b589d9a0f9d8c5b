//! Error type shared by every module of the engine.

use thiserror::Error;

/// Coarse grouping used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerics,
    Convergence,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numerics => 4,
            ErrorCategory::Convergence => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("argument {x} below support lower bound {lower}")]
    BelowSupport { x: f64, lower: f64 },

    #[error("probability {0} outside (0, 1)")]
    Probability(f64),

    #[error("truncation at {0} leaves no tail mass")]
    EmptyTail(f64),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("grid too small: tail mass {tail_mass:e} leaves cumulative mass short of {q}")]
    InsufficientGrid { tail_mass: f64, q: f64 },

    #[error("Panjer recursion is singular (1 - a f0 = 0)")]
    RecursionSingular,

    #[error("confidence interval undefined: order statistics ({r}, {s}) outside 1..={k}")]
    CiUndefined { r: i64, s: i64, k: usize },

    #[error("moment of order {order} is infinite")]
    InfiniteMoment { order: u32 },

    #[error("severity family is not in the sub-exponential whitelist: {0}")]
    NotSubexponential(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("Hessian is not negative definite at the optimum")]
    NotNegativeDefinite,

    #[error("prior elicitation infeasible: {0}")]
    Elicitation(String),

    #[error("posterior is not normalizable: {0}")]
    PosteriorInvalid(String),

    #[error("invalid MCMC start: {0}")]
    McmcInit(String),

    #[error("proposal tuning failed: {0}")]
    Tuning(String),

    #[error("correlation matrix error: {0}")]
    Matrix(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("posterior sampler exhausted: {available} draws for {requested} simulations")]
    SamplerExhausted { available: usize, requested: usize },

    #[error("capital charge undefined: {0}")]
    UndefinedCharge(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config { .. } => ErrorCategory::Config,
            Error::Data { .. } | Error::Io(_) | Error::Csv(_) => ErrorCategory::Data,
            Error::Optimization(_) | Error::Tuning(_) | Error::Elicitation(_) => ErrorCategory::Convergence,
            _ => ErrorCategory::Numerics,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
