use thiserror::Error;

/// Errors raised by the simulator and its numerical tools.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible domain.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The integral-equation solver ran out of iterations.
    #[error("solver did not converge after {iterations} iterations (residual {residual:e}, tol {tol:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    /// A probability underflowed to zero where its logarithm is needed.
    #[error("probability underflow at x = {0}")]
    Underflow(f64),

    /// The deterministic single-line model needed more steps than allowed.
    #[error("step budget of {0} exhausted")]
    StepBudget(usize),

    /// Internal state is inconsistent; indicates a logic bug.
    #[error("internal invariant breached: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
