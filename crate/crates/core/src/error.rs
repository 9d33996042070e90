use thiserror::Error;

/// Library-wide error type. Variants map one-to-one onto the failure classes
/// the public operations can hit; CLI exit-code mapping relies on the split
/// between usage-style errors and runtime errors.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Requested decomposition depth leaves subbands shorter than the filter.
    #[error("decomposition too deep: {0}")]
    DecompositionDepth(String),

    /// A coefficient set does not describe a consistent decomposition.
    #[error("inconsistent subband structure: {0}")]
    Structure(String),

    /// Residual is exactly zero, so a ratio-of-spreads measure is undefined.
    #[error("degenerate residual: {0}")]
    DegenerateResidual(String),

    /// Constant input where a spread-normalized quantity is required.
    #[error("constant input: {0}")]
    ConstantInput(String),

    /// Training could not proceed (degenerate labels, empty folds, ...).
    #[error("training error: {0}")]
    Training(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents (CSV/JSON parse and schema problems).
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
