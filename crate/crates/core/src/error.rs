//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The polygon has an element whose length is (numerically) zero,
    /// violating the `|x_ρ| > 0` hypothesis of the schemes.
    #[error(
        "degenerate curve: element {element} has length {length:.3e} \
         (threshold {threshold:.3e})"
    )]
    DegenerateCurve {
        element: usize,
        length: f64,
        threshold: f64,
    },

    /// A per-step linear system could not be solved to the required
    /// residual tolerance.
    #[error("singular system at step {step}: residual {residual:.3e} exceeds {tolerance:.3e}")]
    SingularSystem {
        step: usize,
        residual: f64,
        tolerance: f64,
    },

    /// A condition that the theory rules out was observed; indicates a
    /// defect, not a user error.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}
