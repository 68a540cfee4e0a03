use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{what}: size {size} exceeds cap {cap}")]
    SizeLimit { what: &'static str, size: String, cap: u64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },

    #[error("level {0} has no parent level")]
    NoParent(usize),

    #[error("epsilon 2^-{eps_exp} is finer than the resolution of level {level}")]
    ResolutionTooFine { eps_exp: u32, level: usize },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub fn size_limit(what: &'static str, size: impl ToString, cap: u64) -> Self {
        Error::SizeLimit {
            what,
            size: size.to_string(),
            cap,
        }
    }

    /// True for errors caused by a configurable cap rather than bad input.
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::SizeLimit { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
