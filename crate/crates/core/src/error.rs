use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input object violates one of its structural invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was called outside its domain (singular covariance, wrong antenna count, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A factorization failed or produced a non-finite value.
    #[error("numerical error in {context}{}", sample.map(|s| format!(" at sample {s}")).unwrap_or_default())]
    Numerical {
        context: String,
        sample: Option<usize>,
    },

    /// Experiment configuration could not be interpreted.
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn numerical(context: impl Into<String>) -> Self {
        Error::Numerical {
            context: context.into(),
            sample: None,
        }
    }

    pub(crate) fn at_sample(self, index: usize) -> Self {
        match self {
            Error::Numerical { context, .. } => Error::Numerical {
                context,
                sample: Some(index),
            },
            other => other,
        }
    }

    pub(crate) fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
