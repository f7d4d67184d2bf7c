use thiserror::Error;

use crate::barycenter::BarycenterResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Arguments are malformed or do not belong to the space they are used with.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A coordinate payload violates its space's validity predicate.
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An iterative barycenter solver stopped without meeting its tolerance.
    #[error("barycenter solver did not converge after {} iterations", partial.iterations)]
    NotConverged { partial: Box<BarycenterResult> },

    /// A failure inside the online-to-batch loop, tagged with the iterate index.
    #[error("iterate {index}: {source}")]
    Iterate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn point(msg: impl Into<String>) -> Self {
        Error::InvalidPoint(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
