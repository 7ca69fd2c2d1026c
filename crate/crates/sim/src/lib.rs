//! Monte Carlo harness for movable-antenna relay experiments: sweep specs,
//! a parallel runner, CSV/JSON output and the `marelay` command line.

pub mod cli;
pub mod experiment;
pub mod output;

pub use experiment::{
    run_experiment, summarize, ExperimentKind, ExperimentOutput, ExperimentSpec, ResultRow,
    Scheme, SummaryRow, TraceRecord,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl SimError {
    /// 1 for bad input, 2 for IO and serialization failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::InvalidSpec(_) | Self::ThreadPool(_) => 1,
            Self::Io(_) | Self::Csv(_) | Self::Json(_) => 2,
        }
    }
}
