use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{step_reward, AgentError, Rollout};
use crate::compiler::{Durations, GateBlock, HardwareParams, Metrics, Ticks, Timeline};
use crate::graph::{ActionRecord, GraphState, VertexKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    /// Uniform over applicable actions, seeded.
    Random(u64),
    /// Largest immediate reward; ties go to the first action in enumeration order.
    Greedy,
}

/// Runs `policy` from `graph` to a terminal state.
pub fn baseline_rollout(
    graph: &GraphState,
    policy: Policy,
    hw: &HardwareParams,
    alpha: f64,
) -> Result<(Vec<ActionRecord>, Metrics), AgentError> {
    let mut rollout = Rollout::new(graph, hw);
    let mut rng = match policy {
        Policy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Policy::Greedy => None,
    };
    while !rollout.is_done() {
        let ops = rollout.state().enumerate_actions(None);
        if ops.is_empty() {
            return Err(AgentError::Invariant("non-terminal state without applicable actions".into()));
        }
        let op = match rng.as_mut() {
            Some(rng) => ops[rng.gen_range(0..ops.len())],
            None => {
                let mut best = (f64::NEG_INFINITY, ops[0]);
                for &op in &ops {
                    let r = step_reward(&op, rollout.probe(op)?, hw, alpha);
                    if r > best.0 {
                        best = (r, op);
                    }
                }
                best.1
            }
        };
        rollout.step(op)?;
    }
    let metrics = rollout.metrics();
    Ok((rollout.into_log(), metrics))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub log: Vec<ActionRecord>,
    pub metrics: Metrics,
    pub total_reward: f64,
    /// Distinct states expanded.
    pub explored: usize,
}

/// Remaining makespan and swap count of the best completion.
type Value = (Ticks, usize);

/// Vertices relabelled by rank in id order, each with kind, schedule readiness and
/// neighbour ranks, plus the running makespan. Rank relabelling preserves every
/// id comparison the rewrite rules make, so equal keys have equal futures.
type StateKey = (Vec<(bool, Ticks, Vec<u32>)>, Ticks);

fn state_key(state: &GraphState, timeline: &Timeline) -> StateKey {
    let rank: HashMap<_, u32> = state.vertices().enumerate().map(|(i, (v, _))| (v, i as u32)).collect();
    let vertices = state
        .vertices()
        .map(|(v, kind)| {
            let nbrs = state.neighbors(v).expect("listed vertex").iter().map(|u| rank[u]).collect();
            (kind == VertexKind::Emitter, timeline.ready(v), nbrs)
        })
        .collect();
    (vertices, timeline.makespan())
}

struct Search<'a> {
    hw: &'a HardwareParams,
    alpha: f64,
    durations: Durations,
    budget: usize,
    memo: HashMap<StateKey, Value>,
    path: Vec<ActionRecord>,
    best_leaf: Option<(Vec<ActionRecord>, Metrics)>,
}

impl Search<'_> {
    fn score(&self, v: Value) -> f64 {
        Metrics { t_gen: v.0, n_e: v.1, n_cz: 0 }.total_reward(self.hw, self.alpha)
    }

    fn children(&self, state: &GraphState, timeline: &Timeline) -> Vec<(GraphState, ActionRecord, Timeline, Ticks)> {
        state
            .enumerate_actions(None)
            .into_iter()
            .map(|op| {
                let (next, rec) = state.apply_action(op).expect("enumerated actions apply");
                let mut tl = timeline.clone();
                let added = tl.extend(GateBlock::template(state, &rec).gates.iter().rev(), &self.durations);
                (next, rec, tl, added)
            })
            .collect()
    }

    fn value(&mut self, state: &GraphState, timeline: &Timeline) -> Result<Value, ()> {
        if state.is_terminal() {
            let swaps = self.path.iter().filter(|r| r.op.is_swap()).count();
            let czs = self.path.iter().filter(|r| r.op.uses_cz()).count();
            let leaf = Metrics { t_gen: timeline.makespan(), n_e: swaps, n_cz: czs };
            let better = self.best_leaf.as_ref().map_or(true, |(_, m)| {
                leaf.total_reward(self.hw, self.alpha) > m.total_reward(self.hw, self.alpha)
            });
            if better {
                self.best_leaf = Some((self.path.clone(), leaf));
            }
            return Ok((Ticks::ZERO, 0));
        }
        let key = state_key(state, timeline);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        if self.memo.len() >= self.budget {
            return Err(());
        }
        let mut best: Option<Value> = None;
        for (next, rec, tl, added) in self.children(state, timeline) {
            self.path.push(rec);
            let (rest, swaps) = self.value(&next, &tl)?;
            self.path.pop();
            let cand = (added + rest, swaps + usize::from(rec.op.is_swap()));
            if best.map_or(true, |b| self.score(cand) > self.score(b)) {
                best = Some(cand);
            }
        }
        let best = best.expect("non-terminal states have actions");
        self.memo.insert(key, best);
        Ok(best)
    }
}

/// Exact optimum of the episode return by memoised depth-first search.
///
/// At most `node_budget` distinct states are expanded; beyond that the error
/// carries the best complete sequence seen. Among optimal logs the one whose
/// first differing action comes earlier in enumeration order is returned.
pub fn exhaustive_search(
    graph: &GraphState,
    hw: &HardwareParams,
    alpha: f64,
    node_budget: usize,
) -> Result<SearchResult, AgentError> {
    let mut search = Search {
        hw,
        alpha,
        durations: Durations::from(hw),
        budget: node_budget,
        memo: HashMap::new(),
        path: Vec::new(),
        best_leaf: None,
    };
    let root = search.value(graph, &Timeline::new()).map_err(|()| AgentError::Budget {
        explored: search.memo.len(),
        best: search.best_leaf.take().map(Box::new),
    })?;

    // Walk down choosing the first child that attains the optimum.
    let mut log = Vec::new();
    let mut state = graph.clone();
    let mut timeline = Timeline::new();
    let mut remaining = root;
    while !state.is_terminal() {
        let mut chosen = None;
        for (next, rec, tl, added) in search.children(&state, &timeline) {
            let rest = search.value(&next, &tl).map_err(|()| {
                AgentError::Invariant("memoised optimum missing during reconstruction".into())
            })?;
            let cand = (added + rest.0, rest.1 + usize::from(rec.op.is_swap()));
            if search.score(cand) == search.score(remaining) {
                chosen = Some((next, rec, tl, rest));
                break;
            }
        }
        let (next, rec, tl, rest) = chosen
            .ok_or_else(|| AgentError::Invariant("no child attains the optimum".into()))?;
        log.push(rec);
        state = next;
        timeline = tl;
        remaining = rest;
    }

    let (_, metrics) = crate::compiler::compile_log(&log, graph, hw)?;
    if metrics.total_reward(hw, alpha) != search.score(root) {
        return Err(AgentError::Invariant("reconstructed log disagrees with the search value".into()));
    }
    Ok(SearchResult {
        total_reward: metrics.total_reward(hw, alpha),
        log,
        metrics,
        explored: search.memo.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: u32) -> GraphState {
        GraphState::with_photons(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    #[test]
    fn random_rollouts_terminate_within_bound() {
        let g = path(4);
        let hw = HardwareParams::default();
        let bound = 2 * g.vertex_count() + g.edge_count();
        for seed in 0..1000 {
            let (log, _) = baseline_rollout(&g, Policy::Random(seed), &hw, 0.5).unwrap();
            assert!(log.len() <= bound);
            assert!(g.replay(&log).unwrap().is_terminal());
        }
    }

    #[test]
    fn greedy_on_path_uses_one_emitter() {
        let (log, m) = baseline_rollout(&path(4), Policy::Greedy, &HardwareParams::default(), 0.5).unwrap();
        assert_eq!((m.n_e, m.n_cz), (1, 0));
        assert_eq!(log.len(), 4);
    }

    #[test]
    fn empty_graph_needs_nothing() {
        let hw = HardwareParams::default();
        let (log, m) = baseline_rollout(&GraphState::new(), Policy::Greedy, &hw, 0.5).unwrap();
        assert!(log.is_empty());
        assert_eq!(m.t_gen, Ticks::ZERO);
        assert!(exhaustive_search(&GraphState::new(), &hw, 0.5, 10).unwrap().log.is_empty());
    }

    #[test]
    fn single_photon_optimum() {
        let hw = HardwareParams::default();
        let r = exhaustive_search(&GraphState::with_photons(1, []).unwrap(), &hw, 0.5, 100).unwrap();
        assert_eq!(r.log.len(), 1);
        // Emission, H and a free measurement: 0.2 ns, plus the emitter penalty of 5 ns.
        assert_eq!(r.metrics.t_gen, Ticks::from_ns(0.2));
        assert_eq!(r.total_reward, -0.2 - 5.0);
    }

    #[test]
    fn path_four_optimum_uses_one_emitter() {
        let hw = HardwareParams::default();
        let r = exhaustive_search(&path(4), &hw, 0.5, 100_000).unwrap();
        assert_eq!((r.metrics.n_e, r.metrics.n_cz), (1, 0));
        // Ending on a photon-side Hadamard overlaps the last emission, beating
        // the serial 0.8 ns of the all-emitter-Hadamard order.
        assert_eq!(r.metrics.t_gen, Ticks::from_ns(0.7), "{:?}", r.log);
        let report = crate::verify::verify_sequence(&path(4), &r.log, 10, crate::verify::DEFAULT_CAP).unwrap();
        assert!(report.passed);
        let (_, greedy) = baseline_rollout(&path(4), Policy::Greedy, &hw, 0.5).unwrap();
        assert!(r.total_reward >= greedy.total_reward(&hw, 0.5));
    }

    #[test]
    fn optimum_dominates_random_rollouts() {
        let hw = HardwareParams::default();
        let g = GraphState::with_photons(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let r = exhaustive_search(&g, &hw, 0.5, 1_000_000).unwrap();
        for seed in 0..200 {
            let (_, m) = baseline_rollout(&g, Policy::Random(seed), &hw, 0.5).unwrap();
            assert!(m.total_reward(&hw, 0.5) <= r.total_reward);
        }
    }

    #[test]
    fn budget_exhaustion_reports_a_partial_result() {
        let g = GraphState::with_photons(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap();
        match exhaustive_search(&g, &HardwareParams::default(), 0.5, 5) {
            Err(AgentError::Budget { explored, best }) => {
                assert_eq!(explored, 5);
                let (log, _) = *best.expect("a leaf is reached before five expansions");
                assert!(g.replay(&log).unwrap().is_terminal());
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
