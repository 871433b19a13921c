use thiserror::Error;

use crate::term::BasicAction;

/// Errors raised by term construction, execution and the file front-ends.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid identifier `{0}` (expected [a-z0-9_]+)")]
    InvalidIdentifier(String),

    #[error("unbound recursion variable `{0}`")]
    UnboundVariable(String),

    #[error("unguarded recursion: {0}")]
    Unguarded(String),

    #[error("malformed term: {0}")]
    MalformedTerm(String),

    #[error("state space overflow: more than {limit} states")]
    Overflow { limit: usize },

    #[error("unresolved external choice")]
    UnresolvedChoice,

    #[error("external choice {choice} out of range [0, {arity}]")]
    InvalidChoice { choice: usize, arity: usize },

    #[error("switch-over outside poly-threading context")]
    SwitchOutsideContext,

    #[error("migration outside distributed interleaving")]
    MigrationOutsideDistribution,

    #[error("unserved focus `{0}`")]
    UnservedFocus(String),

    #[error("reply script exhausted at `{0}`")]
    ScriptExhausted(BasicAction),

    #[error("unknown service kind `{0}`")]
    UnknownService(String),

    #[error("malformed service parameters: {0}")]
    MalformedParams(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("interactive input: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by malformed user input rather than by a run.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidIdentifier(_)
                | Error::UnboundVariable(_)
                | Error::Unguarded(_)
                | Error::MalformedTerm(_)
                | Error::UnknownService(_)
                | Error::MalformedParams(_)
                | Error::Parse { .. }
                | Error::Config(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
