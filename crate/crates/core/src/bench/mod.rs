//! Benchmark graphs, experiment drivers and machine-readable reports.

mod config;
mod generate;
mod report;

use std::path::PathBuf;

use thiserror::Error;

use crate::agent::AgentError;
use crate::compiler::CompileError;
use crate::graph::GraphError;
use crate::qnet::QNetError;
use crate::verify::VerifyError;

pub use config::{default_training_config, Config, GraphEntry, NamedGraph, SYNTHETIC};
pub use generate::{degrees, generate_graph, is_connected, GraphKind, GraphSpec};
pub use report::{
    render_rows, run_compare, run_compile, run_train, size_bucket, Comparison, CompileOptions,
    Compiled, OutputFormat, PolicySpec, RatioRow, RunRow, TrainSummary, NOT_APPLICABLE, SKIPPED,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("graph spec: {0}")]
    Spec(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{graph} under {policy}: verification failed (min fidelity {min_fidelity})")]
    VerificationFailed { graph: String, policy: String, min_fidelity: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Checkpoint(#[from] QNetError),
    #[error("report: {0}")]
    Report(String),
}

impl BenchError {
    /// Process exit status: 1 for bad input or failed verification, 2 for internal faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Spec(_)
            | BenchError::Config(_)
            | BenchError::Io { .. }
            | BenchError::VerificationFailed { .. }
            | BenchError::Graph(_)
            | BenchError::Checkpoint(_)
            | BenchError::Verify(_) => 1,
            BenchError::Compile(CompileError::Config(_)) => 1,
            BenchError::Agent(AgentError::Hyperparams(_) | AgentError::Divergence { .. }) => 1,
            BenchError::Agent(AgentError::Compile(CompileError::Config(_))) => 1,
            BenchError::Agent(AgentError::Budget { .. }) => 1,
            BenchError::Compile(_) | BenchError::Agent(_) | BenchError::Report(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> BenchError {
        let path = path.into();
        move |source| BenchError::Io { path, source }
    }
}
