use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A statistic that cannot be formed from the given data.
    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("config error in scenario `{scenario}`: {message}")]
    Config { scenario: String, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn stats(msg: impl Into<String>) -> Self {
        Error::Statistics(msg.into())
    }

    /// True for errors caused by the scenario description rather than by the run.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } | Error::UnknownPreset(_) => true,
            Error::Scenario { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
