use std::path::PathBuf;

/// Errors raised across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid size error: {0}")]
    Size(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("metric is not positive definite at node ({row}, {col})")]
    Degenerate { row: usize, col: usize },

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("forward map folds over near node ({row}, {col}): jacobian {jacobian:e}")]
    Foldover { row: usize, col: usize, jacobian: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("slice {index}: {source}")]
    AtSlice {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("tent {index}: {source}")]
    AtTent {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("format error in {path:?}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_slice(self, index: usize) -> Self {
        Error::AtSlice { index, source: Box::new(self) }
    }

    pub fn at_tent(self, index: usize) -> Self {
        Error::AtTent { index, source: Box::new(self) }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
