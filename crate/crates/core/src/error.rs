use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical quantity outside its domain (e.g. a negative photon number).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-supplied argument that violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The observed behaviour cannot be produced by any strategy within the energy bound.
    #[error("behaviour infeasible: {0}")]
    Infeasible(String),

    /// A block in which some input value was never observed.
    #[error("degenerate block: input x={0} never observed")]
    DegenerateBlock(u8),

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
