use std::collections::BTreeSet;

use super::{greedy_select, AgentError};
use crate::compiler::{compile_log, GenerationSequence, HardwareParams, Metrics};
use crate::graph::{ActionRecord, GraphOp, GraphState, VertexId, VertexKind, UNREACHABLE};
use crate::qnet::Scorer;

use super::Hyperparams;

/// The vertices inference may touch: an anchor emitter and the photons closest to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceptiveField {
    anchor: VertexId,
    width: usize,
    members: BTreeSet<VertexId>,
    distance_table: Vec<VertexId>,
}

impl ReceptiveField {
    /// Anchor plus the `width - 1` photons nearest to it (ties by id, unreachable last).
    pub fn init(state: &GraphState, anchor: VertexId, width: usize) -> Result<Self, AgentError> {
        if state.kind(anchor) != Some(VertexKind::Emitter) {
            return Err(AgentError::Invariant(format!("field anchor {anchor} is not an emitter")));
        }
        let dist = state.hop_distances(anchor)?;
        let mut table: Vec<(u32, VertexId)> = state
            .photons()
            .map(|p| (dist.get(&p).copied().unwrap_or(UNREACHABLE), p))
            .collect();
        table.sort_unstable();
        let distance_table: Vec<VertexId> = table.into_iter().map(|(_, p)| p).collect();
        let mut members = BTreeSet::from([anchor]);
        members.extend(distance_table.iter().take(width.saturating_sub(1)));
        Ok(ReceptiveField { anchor, width, members, distance_table })
    }

    pub fn anchor(&self) -> VertexId {
        self.anchor
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn members(&self) -> &BTreeSet<VertexId> {
        &self.members
    }

    pub fn distance_table(&self) -> &[VertexId] {
        &self.distance_table
    }

    /// Follows `rec` into `after`: a swapped member is replaced by its emitter,
    /// vanished vertices leave, and the nearest outside photons refill the field.
    pub fn maintain(&mut self, rec: &ActionRecord, after: &GraphState) {
        if let (GraphOp::EmitterSwap { photon }, Some(e)) = (rec.op, rec.resulting_emitter) {
            if self.members.remove(&photon) {
                self.members.insert(e);
            }
        }
        self.members.retain(|&v| after.contains(v));
        for &p in &self.distance_table {
            if self.members.len() >= self.width {
                break;
            }
            if after.kind(p) == Some(VertexKind::Photon) {
                self.members.insert(p);
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Inference {
    pub log: Vec<ActionRecord>,
    pub sequence: GenerationSequence,
    pub metrics: Metrics,
    /// Steps at which the field had no applicable action and all vertices were opened.
    pub fallback_steps: Vec<usize>,
    /// Largest restricted candidate set seen.
    pub max_candidates: usize,
}

/// Greedy inference inside a receptive field of `hp.receptive_width(V)` vertices.
pub fn infer(
    graph: &GraphState,
    scorer: &mut Scorer,
    hp: &Hyperparams,
    hw: &HardwareParams,
) -> Result<Inference, AgentError> {
    infer_with_width(graph, scorer, Some(hp.receptive_width(graph.vertex_count())), hw)
}

/// Greedy inference; `None` disables the receptive field.
///
/// The first step picks the best emitter swap over all photons and anchors the
/// field on the emitter it creates.
pub fn infer_with_width(
    graph: &GraphState,
    scorer: &mut Scorer,
    width: Option<usize>,
    hw: &HardwareParams,
) -> Result<Inference, AgentError> {
    if graph.is_empty() {
        return Err(AgentError::Invariant("inference needs a non-empty graph".into()));
    }
    let mut state = graph.clone();
    let mut log = Vec::new();
    let mut field: Option<ReceptiveField> = None;
    let mut fallback_steps = Vec::new();
    let mut max_candidates = 0;

    while !state.is_terminal() {
        let step = log.len();
        let mut candidates = match &field {
            Some(f) => state.enumerate_actions(Some(f.members())),
            None if step == 0 => {
                let all = state.enumerate_actions(None);
                let swaps: Vec<GraphOp> = all.iter().copied().filter(GraphOp::is_swap).collect();
                if swaps.is_empty() { all } else { swaps }
            }
            None => state.enumerate_actions(None),
        };
        if candidates.is_empty() {
            fallback_steps.push(step);
            candidates = state.enumerate_actions(None);
        } else if field.is_some() {
            max_candidates = max_candidates.max(candidates.len());
        }
        let (_, next, rec) = greedy_select(&state, &candidates, scorer).map_err(|e| match e {
            AgentError::NoAction => AgentError::Invariant(format!("no action at step {step}")),
            other => other,
        })?;

        match (&mut field, width, rec.resulting_emitter) {
            (Some(f), ..) => f.maintain(&rec, &next),
            (None, Some(w), Some(e)) if step == 0 => field = Some(ReceptiveField::init(&next, e, w)?),
            _ => {}
        }
        log.push(rec);
        state = next;
    }

    let (sequence, metrics) = compile_log(&log, graph, hw)?;
    Ok(Inference { log, sequence, metrics, fallback_steps, max_candidates })
}
