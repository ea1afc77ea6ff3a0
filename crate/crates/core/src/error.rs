use thiserror::Error;

/// A parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// Errors raised by the process engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("replicated process is not guarded by a prefix: {0}")]
    UnguardedReplication(String),

    #[error("bullet must guard a prefix or a match: {0}")]
    MisplacedBullet(String),

    #[error("process has free variable `{0}`")]
    FreeVariable(String),

    #[error("arity mismatch on channel {channel}: {left} vs {right}")]
    ArityMismatch {
        channel: String,
        left: usize,
        right: usize,
    },

    #[error("runtime fault: {0}")]
    Fault(String),

    #[error("redex is not enabled in this configuration")]
    StaleRedex,
}
