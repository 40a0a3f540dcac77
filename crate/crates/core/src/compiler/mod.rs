//! From backward operation logs to scheduled forward gate sequences.

mod gates;
mod hardware;
mod metrics;
mod schedule;

use thiserror::Error;

use crate::graph::GraphError;

pub use gates::{build_forward_sequence, Direction, Gate, GateBlock, GenerationSequence, Pauli};
pub use hardware::HardwareParams;
pub use metrics::{fidelity_report, metrics_of, reward_of, FidelityReport, Metrics};
pub use schedule::{
    incremental_makespan, schedule_makespan, Assignment, Durations, Schedule, Ticks, Timeline,
};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("log step {step} does not replay: {source}")]
    Replay { step: usize, source: GraphError },
    #[error("log step {step} names a different emitter than the replay produced")]
    EmitterLabel { step: usize },
    #[error("log stops before a terminal state ({photons} photons, {edges} edges remain)")]
    Incomplete { photons: usize, edges: usize },
    #[error("expected a forward sequence")]
    Direction,
    #[error("hardware config: {0}")]
    Config(String),
}

/// Forward sequence and its metrics for a complete log.
pub fn compile_log(
    log: &[crate::graph::ActionRecord],
    initial: &crate::graph::GraphState,
    hw: &HardwareParams,
) -> Result<(GenerationSequence, Metrics), CompileError> {
    let seq = build_forward_sequence(log, initial)?;
    let metrics = metrics_of(&seq, hw)?;
    Ok((seq, metrics))
}
