use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid axis set: {0}")]
    Axes(String),

    #[error("rank {rank} out of range for {what} (max {max})")]
    Rank { what: String, rank: usize, max: usize },

    #[error("invalid dimension tree: {0}")]
    Tree(String),

    #[error("non-finite entry in matrix")]
    NonFinite,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("scheme {scheme} is not valid for a {family} model")]
    Scheme { scheme: String, family: String },

    #[error("unknown class label {0:?}")]
    UnknownLabel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {msg}")]
    Format { path: String, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            msg: msg.into(),
        }
    }
}
