use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
///
/// Variants are grouped by how callers should react: `Parameter`, `Domain`,
/// `Range`, `Syntax`, `Unbound`, `EvalDomain`, `Precondition` and `Schema`
/// indicate bad input; `Integration`, `Numerical` and `NonConvergence`
/// indicate a runtime numerical failure on valid input.
#[derive(Debug, Error)]
pub enum Error {
    /// A deformation or physical parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An operator was evaluated at a point outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sampled function was queried outside its grid.
    #[error("range error: {0}")]
    Range(String),

    /// Expression text failed to parse; `offset` is a byte offset into the input.
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// An expression referenced a variable with no binding.
    #[error("unbound variable `{0}`")]
    Unbound(String),

    /// Expression evaluation hit a domain fault (log of a non-positive value, ...).
    #[error("domain fault in `{expr}`: {detail}")]
    EvalDomain { expr: String, detail: String },

    /// Quadrature failed; `location` is the offending abscissa.
    #[error("integration error near x = {location}: {detail}")]
    Integration { location: f64, detail: String },

    /// A structural precondition on the input data does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A scenario document broke the strict schema; every offending key is listed.
    #[error("schema error: {}", .0.join("; "))]
    Schema(Vec<String>),

    /// A solver produced or encountered non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An iterative method stopped without reaching its target tolerance.
    #[error("did not converge: {0}")]
    NonConvergence(String),
}

impl Error {
    /// True when the error reflects invalid input rather than a numerical failure.
    pub fn is_usage(&self) -> bool {
        !matches!(
            self,
            Error::Integration { .. } | Error::Numerical(_) | Error::NonConvergence(_)
        )
    }
}
