//! File formats, analysis reports and the `bellstat` command for Bell-test
//! count data. The numerics live in [`bell_core`].

pub mod format;
pub mod report;
pub mod reproduce;

pub use format::{parse_dataset, serialize, Format};
pub use report::{analyze, AnalysisReport, Method, Selection};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{format} syntax error at line {line}, column {column}: {message}")]
    Syntax {
        format: &'static str,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error(transparent)]
    Core(#[from] bell_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Process exit status: 1 for usage errors, 2 for anything about the data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            _ => 2,
        }
    }
}
