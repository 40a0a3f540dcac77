//! Deep Q-learning over the backward rewrite operations, receptive-field
//! inference and the baseline policies it is measured against.

mod baseline;
mod field;
mod replay;
mod train;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{
    reward_of, CompileError, Durations, GateBlock, HardwareParams, Metrics, Ticks, Timeline,
};
use crate::graph::{ActionRecord, GraphError, GraphOp, GraphState};
use crate::qnet::{QNetError, Scorer};

pub use baseline::{baseline_rollout, exhaustive_search, Policy, SearchResult};
pub use field::{infer, infer_with_width, Inference, ReceptiveField};
pub use replay::{ReplayBuffer, Transition};
pub use train::{compute_targets, train, train_from, EpisodeRow, TargetNet, TrainingLog};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no applicable action in a non-terminal state")]
    NoAction,
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("training diverged in episode {episode}: {source}")]
    Divergence { episode: usize, source: QNetError, log: TrainingLog },
    #[error("search budget exhausted after {explored} states")]
    Budget { explored: usize, best: Option<Box<(Vec<ActionRecord>, Metrics)>> },
}

/// Training and inference settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub episodes: usize,
    pub capacity: usize,
    pub batch: usize,
    pub target_sync: usize,
    pub epsilon0: f64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub step_size: f64,
    pub receptive_fraction: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            episodes: 300,
            capacity: 10_000,
            batch: 256,
            target_sync: 500,
            epsilon0: 1.0,
            epsilon_decay: 0.99,
            epsilon_floor: 0.05,
            gamma: 0.99,
            alpha: 0.5,
            step_size: 1e-3,
            receptive_fraction: 0.5,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let fail = |m: &str| Err(AgentError::Hyperparams(m.to_string()));
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return fail("epsilon_decay must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon0) || !(0.0..=1.0).contains(&self.epsilon_floor) {
            return fail("epsilon0 and epsilon_floor must lie in [0, 1]");
        }
        if self.batch == 0 || self.batch > self.capacity {
            return fail("batch must satisfy 0 < batch <= capacity");
        }
        if self.target_sync == 0 {
            return fail("target_sync must be positive");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return fail("step_size must be positive");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return fail("alpha must be >= 0");
        }
        if !(self.receptive_fraction > 0.0 && self.receptive_fraction <= 1.0) {
            return fail("receptive_fraction must lie in (0, 1]");
        }
        Ok(())
    }

    /// Exploration rate for episode `k`, counted from zero.
    pub fn epsilon_at(&self, k: usize) -> f64 {
        let k = i32::try_from(k).unwrap_or(i32::MAX);
        self.epsilon_floor.max(self.epsilon0 * self.epsilon_decay.powi(k))
    }

    /// Receptive-field size `W` for a graph of `v` vertices; never below 2.
    pub fn receptive_width(&self, v: usize) -> usize {
        ((self.receptive_fraction * v as f64).ceil() as usize).max(2)
    }
}

/// Purposes of the independent random streams derived from one root seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Explore = 1,
    Replay = 2,
}

/// ChaCha8 keyed by the root seed, on the word stream assigned to `purpose`.
pub fn rng_stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// A backward episode: graph state plus the schedule of the gates emitted so far.
///
/// Gates are scheduled in backward order. Greedy list scheduling of a sequence
/// and of its reversal give the same makespan, so the running makespan is the
/// forward generation time of the finished log.
#[derive(Clone, Debug)]
pub struct Rollout {
    state: GraphState,
    timeline: Timeline,
    durations: Durations,
    log: Vec<ActionRecord>,
    swaps: usize,
    czs: usize,
}

impl Rollout {
    pub fn new(graph: &GraphState, hw: &HardwareParams) -> Self {
        Rollout {
            state: graph.clone(),
            timeline: Timeline::new(),
            durations: Durations::from(hw),
            log: Vec::new(),
            swaps: 0,
            czs: 0,
        }
    }

    pub fn state(&self) -> &GraphState {
        &self.state
    }

    pub fn timeline(&self) -> &Timeline {
        &self.timeline
    }

    pub fn log(&self) -> &[ActionRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<ActionRecord> {
        self.log
    }

    pub fn is_done(&self) -> bool {
        self.state.is_terminal()
    }

    /// Makespan increase of applying `op`, without applying it.
    pub fn probe(&self, op: GraphOp) -> Result<Ticks, GraphError> {
        let (_, rec) = self.state.apply_action(op)?;
        let block = GateBlock::template(&self.state, &rec);
        Ok(self.timeline.probe(block.gates.iter().rev(), &self.durations))
    }

    /// Applies `op`; returns its record and the makespan increase.
    pub fn step(&mut self, op: GraphOp) -> Result<(ActionRecord, Ticks), GraphError> {
        let (next, rec) = self.state.apply_action(op)?;
        Ok((rec, self.advance(next, rec)))
    }

    /// Commits a transition the caller computed from the current state.
    fn advance(&mut self, next: GraphState, rec: ActionRecord) -> Ticks {
        let block = GateBlock::template(&self.state, &rec);
        let added = self.timeline.extend(block.gates.iter().rev(), &self.durations);
        self.swaps += usize::from(rec.op.is_swap());
        self.czs += usize::from(rec.op.uses_cz());
        self.state = next;
        self.log.push(rec);
        added
    }

    pub fn metrics(&self) -> Metrics {
        Metrics { t_gen: self.timeline.makespan(), n_e: self.swaps, n_cz: self.czs }
    }
}

/// Per-step reward of `op` given its makespan increase.
pub fn step_reward(op: &GraphOp, added: Ticks, hw: &HardwareParams, alpha: f64) -> f64 {
    reward_of(op, added.as_ns(), hw, alpha)
}

/// ε-greedy choice among `candidates`, scoring each by the value of its next state.
///
/// One uniform draw decides exploration; a second picks the random candidate.
/// Exact ties go to the earliest candidate.
pub fn epsilon_greedy_select<R: Rng>(
    state: &GraphState,
    candidates: &[GraphOp],
    scorer: &mut Scorer,
    epsilon: f64,
    rng: &mut R,
) -> Result<(GraphOp, GraphState, ActionRecord), AgentError> {
    if candidates.is_empty() {
        return Err(AgentError::NoAction);
    }
    if rng.gen::<f64>() < epsilon {
        let op = candidates[rng.gen_range(0..candidates.len())];
        let (next, rec) = state.apply_action(op)?;
        return Ok((op, next, rec));
    }
    greedy_select(state, candidates, scorer)
}

fn greedy_select(
    state: &GraphState,
    candidates: &[GraphOp],
    scorer: &mut Scorer,
) -> Result<(GraphOp, GraphState, ActionRecord), AgentError> {
    let mut best: Option<(f64, GraphOp, GraphState, ActionRecord)> = None;
    for &op in candidates {
        let (next, rec) = state.apply_action(op)?;
        let q = scorer.q_value(&next);
        if best.as_ref().map_or(true, |(bq, ..)| q > *bq) {
            best = Some((q, op, next, rec));
        }
    }
    let (_, op, next, rec) = best.ok_or(AgentError::NoAction)?;
    Ok((op, next, rec))
}
