use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Region extents or tier counts that cannot describe a placement domain.
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    /// Malformed numeric or structural input outside file parsing.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Syntax or reference errors in Bookshelf files.
    #[error("parse error in {file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    /// Underlying filesystem failure.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Structurally valid file whose contents violate the format contract.
    #[error("format error: {0}")]
    Format(String),

    /// The 2D-to-3D transformation cannot accommodate the instance.
    #[error("infeasible transform: {0}")]
    InfeasibleTransform(String),

    /// An operation was invoked on state that does not satisfy its
    /// preconditions (missing tier assignment, out-of-bounds object, ...).
    #[error("state error: {0}")]
    State(String),

    /// The optimizer produced non-finite values and exhausted its restarts.
    #[error("divergence: {0}")]
    Divergence(String),

    /// Legalization could not produce an overlap-free layout.
    #[error("legalization failure: {0}")]
    Legalization(String),

    /// Input relies on a capability the engine deliberately does not model.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
