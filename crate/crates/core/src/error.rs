use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what}: expected {expected} bits, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what}: entry {index} is not 0 or 1")]
    BadBit { what: &'static str, index: usize },

    #[error("{what}: invalid character {ch:?} at position {position}")]
    BadChar {
        what: &'static str,
        position: usize,
        ch: char,
    },

    #[error("index {index} out of range for {what} (max {max})")]
    IndexRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("S-box table must have {expected} entries, got {got}")]
    SboxSize { expected: usize, got: usize },

    #[error("work budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("|J| = {size} exceeds the table limit {limit}")]
    TableTooLarge { size: usize, limit: usize },

    #[error("solver unavailable: {0}")]
    SolverUnavailable(String),

    #[error("solver failed: {0}")]
    SolverFailed(String),

    #[error("malformed {what} at line {line}: {msg}")]
    Parse {
        what: &'static str,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
