use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("prior `{0}` is not normalizable")]
    NotNormalizable(&'static str),

    #[error("posterior is improper under prior `{0}`")]
    ImproperPosterior(&'static str),

    #[error("posterior tail mass could not be captured within {max_nodes} nodes")]
    TailNotCaptured { max_nodes: usize },

    #[error("invalid generalized exponential power parameters: {0}")]
    InvalidGep(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("density ratio is not finite at t = {t}")]
    UnboundedRatio { t: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("degenerate chain: zero within-chain variance")]
    DegenerateChain,

    #[error("not enough draws: {0}")]
    InsufficientDraws(String),

    #[error("non-finite gradient for prior `{prior}` at x = {x}")]
    NonFiniteGradient { prior: &'static str, x: f64 },

    #[error("sampler unstable: {divergent} of {total} transitions diverged")]
    SamplerUnstable { divergent: usize, total: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("catalog is empty")]
    EmptyCatalog,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
