use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use super::{
    epsilon_greedy_select, rng_stream, step_reward, AgentError, Hyperparams, ReplayBuffer,
    Rollout, Stream, Transition,
};
use crate::compiler::HardwareParams;
use crate::graph::GraphState;
use crate::qnet::{QNetParams, Scorer, Trainer};

/// Stale copy of the online network used for bootstrapped targets.
pub struct TargetNet {
    scorer: Scorer,
    max_next: HashMap<GraphState, f64>,
}

impl TargetNet {
    pub fn new(params: QNetParams) -> Self {
        TargetNet { scorer: Scorer::new(params), max_next: HashMap::new() }
    }

    pub fn sync(&mut self, params: &QNetParams) {
        self.scorer.set_params(params.clone());
        self.max_next.clear();
    }

    pub fn params(&self) -> &QNetParams {
        self.scorer.params()
    }

    pub fn q_value(&mut self, state: &GraphState) -> f64 {
        self.scorer.q_value(state)
    }

    /// Best next-state score over every action applicable in `state`; `None` if there is none.
    pub fn max_next_q(&mut self, state: &GraphState) -> Result<Option<f64>, AgentError> {
        if let Some(&q) = self.max_next.get(state) {
            return Ok(Some(q));
        }
        let mut best: Option<f64> = None;
        for op in state.enumerate_actions(None) {
            let (next, _) = state.apply_action(op)?;
            let q = self.scorer.q_value(&next);
            best = Some(best.map_or(q, |b: f64| b.max(q)));
        }
        if let Some(q) = best {
            self.max_next.insert(state.clone(), q);
        }
        Ok(best)
    }
}

/// `r` for terminal transitions, `r + gamma * max_a' Q_target(s')` otherwise.
pub fn compute_targets(
    batch: &[&Transition],
    target: &mut TargetNet,
    gamma: f64,
) -> Result<Vec<f64>, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::Invariant("target batch is empty".into()));
    }
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.r);
            }
            let best = target.max_next_q(&t.s_next)?.ok_or_else(|| {
                AgentError::Invariant("non-terminal state without applicable actions".into())
            })?;
            Ok(t.r + gamma * best)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub epsilon: f64,
    pub total_reward: f64,
    pub mean_loss: Option<f64>,
    pub buffer_size: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainingLog {
    pub rows: Vec<EpisodeRow>,
}

impl TrainingLog {
    pub const HEADER: &'static str = "episode,epsilon,total_reward,mean_loss,buffer_size";

    /// Shortest round-trip float formatting; episodes without a model update log `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let loss = r.mean_loss.map_or_else(|| "NA".to_string(), |l| l.to_string());
            writeln!(out, "{},{},{},{},{}", r.episode, r.epsilon, r.total_reward, loss, r.buffer_size)
                .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Trains from freshly initialised parameters drawn from the seed's init stream.
pub fn train(
    graphs: &[GraphState],
    hp: &Hyperparams,
    hw: &HardwareParams,
) -> Result<(QNetParams, TrainingLog), AgentError> {
    let params = QNetParams::init(&mut rng_stream(hp.seed, Stream::Init));
    train_from(params, graphs, hp, hw)
}

/// Runs `hp.episodes` episodes of experience collection and model updates.
///
/// Episode graphs and exploration share the explore stream; minibatches come
/// from the replay stream. The target network is refreshed every
/// `hp.target_sync` gradient steps.
pub fn train_from(
    params: QNetParams,
    graphs: &[GraphState],
    hp: &Hyperparams,
    hw: &HardwareParams,
) -> Result<(QNetParams, TrainingLog), AgentError> {
    hp.validate()?;
    hw.validate()?;
    if graphs.is_empty() {
        return Err(AgentError::Invariant("no training graphs".into()));
    }
    let mut explore = rng_stream(hp.seed, Stream::Explore);
    let mut replay_rng = rng_stream(hp.seed, Stream::Replay);
    let mut online = Trainer::new(params.clone());
    let mut target = TargetNet::new(params);
    let mut buffer = ReplayBuffer::new(hp.capacity);
    let mut log = TrainingLog::default();
    let mut updates = 0usize;

    for episode in 0..hp.episodes {
        let epsilon = hp.epsilon_at(episode);
        let graph = &graphs[explore.gen_range(0..graphs.len())];
        let mut rollout = Rollout::new(graph, hw);
        let mut losses = Vec::new();

        while !rollout.is_done() {
            let state = rollout.state().clone();
            let candidates = state.enumerate_actions(None);
            let (op, next, rec) =
                epsilon_greedy_select(&state, &candidates, online.scorer(), epsilon, &mut explore)?;
            let added = rollout.advance(next.clone(), rec);
            let done = next.is_terminal();
            buffer.push(Transition { s: state, a: op, r: step_reward(&op, added, hw, hp.alpha), s_next: next, done });

            if buffer.len() >= hp.batch {
                let batch = buffer.sample(hp.batch, &mut replay_rng);
                let ys = compute_targets(&batch, &mut target, hp.gamma)?;
                let pairs: Vec<(&GraphState, f64)> =
                    batch.iter().zip(ys).map(|(t, y)| (&t.s_next, y)).collect();
                match online.train_step(&pairs, hp.step_size) {
                    Ok(loss) => losses.push(loss),
                    Err(source) => return Err(AgentError::Divergence { episode, source, log }),
                }
                updates += 1;
                if updates % hp.target_sync == 0 {
                    target.sync(online.params());
                }
            }
        }

        let mean_loss =
            (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64);
        log.rows.push(EpisodeRow {
            episode,
            epsilon,
            total_reward: rollout.metrics().total_reward(hw, hp.alpha),
            mean_loss,
            buffer_size: buffer.len(),
        });
    }
    Ok((online.into_params(), log))
}
