use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters supplied when building meshes, rules, grids or configs.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The left-hand operator could not be factorized.
    #[error("singular system matrix (time step too large for this mesh?): {0}")]
    Singular(String),

    /// The per-step fixed-point iteration did not reach the stopping tolerance.
    #[error("fixed-point iteration did not converge at step {step} after {iterations} iterations (last increment {last_increment:.3e})")]
    NonConvergence {
        step: usize,
        iterations: usize,
        last_increment: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
