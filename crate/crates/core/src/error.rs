use thiserror::Error;

/// Errors produced by the g-value library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition on the inputs (sizes, non-emptiness) was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The sample cannot support the requested statistic (e.g. zero variance).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A resampling run produced too many degenerate resamples.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A strategy failed on a sample; carries the strategy identifier.
    #[error("strategy `{id}` failed: {source}")]
    Strategy {
        id: String,
        #[source]
        source: Box<Error>,
    },

    /// The correlation matrix is not a valid correlation matrix.
    #[error("invalid joint null model: {0}")]
    Model(String),

    /// A correction result is inconsistent with its use.
    #[error("invalid correction: {0}")]
    InvalidCorrection(String),

    /// Root finding failed to converge within the iteration cap.
    #[error(
        "solver did not converge after {iterations} iterations; final bracket [{lower}, {upper}]"
    )]
    Solver {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    /// An internal numerical consistency check failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Not enough resamples to resolve the requested tail probability.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// A named column is absent from the input file.
    #[error("column `{0}` not found")]
    MissingColumn(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
