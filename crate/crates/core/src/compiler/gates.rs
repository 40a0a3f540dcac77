use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CompileError;
use crate::graph::{ActionRecord, GraphOp, GraphState, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    H(VertexId),
    /// Emission of a fresh photon, acting as CNOT with the emitter as control.
    EmissionCnot { emitter: VertexId, photon: VertexId },
    Cz(VertexId, VertexId),
    MeasureZ(VertexId),
    /// Pauli on `target` applied when the measurement of `source` returned 1.
    Correction { target: VertexId, basis: Pauli, source: VertexId },
}

impl Gate {
    /// Qubits whose timelines the gate occupies, classical source included.
    pub fn qubits(&self) -> Vec<VertexId> {
        match *self {
            Gate::H(q) | Gate::MeasureZ(q) => vec![q],
            Gate::EmissionCnot { emitter, photon } => vec![emitter, photon],
            Gate::Cz(a, b) => vec![a, b],
            Gate::Correction { target, source, .. } => vec![target, source],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::EmissionCnot { emitter, photon } => write!(f, "EMIT {emitter} {photon}"),
            Gate::Cz(a, b) => write!(f, "CZ {a} {b}"),
            Gate::MeasureZ(q) => write!(f, "MEASZ {q}"),
            Gate::Correction { target, basis, source } => {
                write!(f, "CORR{basis:?} {target} if {source}")
            }
        }
    }
}

/// Gates realising one graph operation, ordered in the direction of the
/// sequence that owns the block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateBlock {
    pub op: GraphOp,
    pub gates: Vec<Gate>,
}

impl GateBlock {
    /// Forward-order gates for `rec` applied to `before`.
    ///
    /// Every template keeps the invariant that, after the block runs forward, the
    /// live photons and emitters are exactly the graph state prior to the op.
    /// Emitters are prepared in |+> when first touched, so an emitter
    /// disappearing in the backward direction needs no gate of its own.
    pub fn template(before: &GraphState, rec: &ActionRecord) -> GateBlock {
        use Gate::*;
        let gates = match rec.op {
            GraphOp::EmitterSwap { photon } => {
                let e = rec.resulting_emitter.expect("swap records carry their emitter");
                vec![
                    EmissionCnot { emitter: e, photon },
                    H(e),
                    MeasureZ(e),
                    Correction { target: photon, basis: Pauli::Z, source: e },
                ]
            }
            GraphOp::TypeIAbsorb { emitter, photon } => {
                vec![EmissionCnot { emitter, photon }, H(emitter)]
            }
            // When the emitter is left isolated, both H placements give the same
            // state; keeping it on the emitter leaves photons untouched.
            GraphOp::TypeIIAbsorb { emitter, photon } if before.degree(emitter) == 1 => {
                vec![EmissionCnot { emitter, photon }, H(emitter)]
            }
            GraphOp::TypeIIAbsorb { emitter, photon } => {
                vec![EmissionCnot { emitter, photon }, H(photon)]
            }
            GraphOp::TypeIIIAbsorb { emitter, photon } => {
                vec![H(emitter), EmissionCnot { emitter, photon }, H(emitter), H(photon)]
            }
            GraphOp::ReversedCz { first, second } => vec![Cz(first, second)],
            // CNOT from the fresh emitter onto the kept one.
            GraphOp::TypeIIIReversedCz { kept, removed } => {
                vec![H(kept), Cz(kept, removed), H(kept)]
            }
        };
        GateBlock { op: rec.op, gates }
    }

    fn reversed(&self) -> GateBlock {
        GateBlock { op: self.op, gates: self.gates.iter().rev().copied().collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Backward,
    Forward,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationSequence {
    pub direction: Direction,
    pub blocks: Vec<GateBlock>,
    pub emitter_set: BTreeSet<VertexId>,
}

impl GenerationSequence {
    pub fn empty(direction: Direction) -> Self {
        GenerationSequence { direction, blocks: Vec::new(), emitter_set: BTreeSet::new() }
    }

    /// Backward sequence: blocks in log order, gates inverted within each block.
    pub fn backward(log: &[ActionRecord], initial: &GraphState) -> Result<Self, CompileError> {
        let mut state = initial.clone();
        let mut blocks = Vec::with_capacity(log.len());
        for (step, rec) in log.iter().enumerate() {
            let (next, produced) = state
                .apply_action(rec.op)
                .map_err(|source| CompileError::Replay { step, source })?;
            if produced != *rec {
                return Err(CompileError::EmitterLabel { step });
            }
            blocks.push(GateBlock::template(&state, rec).reversed());
            state = next;
        }
        if !state.is_terminal() {
            return Err(CompileError::Incomplete {
                photons: state.photon_count(),
                edges: state.edge_count(),
            });
        }
        let emitter_set = collect_emitters(&blocks);
        Ok(GenerationSequence { direction: Direction::Backward, blocks, emitter_set })
    }

    /// The same gates run in the opposite direction.
    pub fn reversed(&self) -> GenerationSequence {
        GenerationSequence {
            direction: match self.direction {
                Direction::Backward => Direction::Forward,
                Direction::Forward => Direction::Backward,
            },
            blocks: self.blocks.iter().rev().map(GateBlock::reversed).collect(),
            emitter_set: self.emitter_set.clone(),
        }
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> + '_ {
        self.blocks.iter().flat_map(|b| b.gates.iter())
    }

    pub fn gate_count(&self, pred: impl Fn(&Gate) -> bool) -> usize {
        self.gates().filter(|g| pred(g)).count()
    }

    pub fn cz_count(&self) -> usize {
        self.gate_count(|g| matches!(g, Gate::Cz(..)))
    }
}

fn collect_emitters(blocks: &[GateBlock]) -> BTreeSet<VertexId> {
    let mut set = BTreeSet::new();
    for g in blocks.iter().flat_map(|b| b.gates.iter()) {
        match *g {
            Gate::EmissionCnot { emitter, .. } | Gate::MeasureZ(emitter) => {
                set.insert(emitter);
            }
            Gate::Cz(a, b) => {
                set.insert(a);
                set.insert(b);
            }
            Gate::Correction { source, .. } => {
                set.insert(source);
            }
            Gate::H(_) => {}
        }
    }
    set
}

/// Replays `log` from `initial` and returns the executable forward sequence.
pub fn build_forward_sequence(
    log: &[ActionRecord],
    initial: &GraphState,
) -> Result<GenerationSequence, CompileError> {
    Ok(GenerationSequence::backward(log, initial)?.reversed())
}
