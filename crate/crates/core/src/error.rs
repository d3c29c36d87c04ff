use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degree sampler returned {degree} but a vertex of a {n}-vertex graph has at most {} out-neighbors", n.saturating_sub(1))]
    InvalidSample { degree: usize, n: usize },

    #[error("configuration field `{field}`: {message}")]
    Config { field: &'static str, message: String },

    #[error("cannot parse `{input}` as a rational: {reason}")]
    RationalParse { input: String, reason: &'static str },

    #[error("malformed edge list: {0}")]
    EdgeList(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
