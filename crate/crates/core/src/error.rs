use thiserror::Error;

/// Errors raised by state construction, measurement modelling and Fisher
/// information evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input failed one of its type invariants. The message names the
    /// invariant.
    #[error("validation failed: {0}")]
    Validation(String),
    /// A scalar parameter is outside its physical domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
