//! Statevector oracle for compiled generation sequences.
//!
//! The forward sequence is run gate by gate on a dense state: emitters are
//! prepared in |+> when first touched, each emission allocates a photon in |0>,
//! and measured emitters are projected and traced out. The surviving photons
//! must match the target graph state up to global phase.

mod statevector;

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::compiler::{build_forward_sequence, CompileError, Direction, Gate, GenerationSequence, Pauli};
use crate::graph::{ActionRecord, GraphState, VertexId, VertexKind};

pub use statevector::{Init, StateVector};

pub const DEFAULT_CAP: usize = 14;
pub const DEFAULT_SEEDS: u64 = 10;
pub const FIDELITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("{needed} live qubits exceed the cap of {cap}")]
    SizeCap { needed: usize, cap: usize },
    #[error("gate {gate}: qubit {qubit} is not live")]
    UnknownQubit { gate: usize, qubit: VertexId },
    #[error("gate {gate}: photon {photon} emitted twice")]
    DuplicateEmission { gate: usize, photon: VertexId },
    #[error("gate {gate}: emitter {qubit} used after its measurement")]
    Retired { gate: usize, qubit: VertexId },
    #[error("gate {gate}: correction reads {emitter}, which has not been measured")]
    MissingOutcome { gate: usize, emitter: VertexId },
    #[error("entanglement leak: qubit {qubit} is not in a product state (after gate {gate})")]
    EntanglementLeak { gate: usize, qubit: VertexId },
    #[error("state dimension mismatch: expected {expected} amplitudes, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("surviving qubits {found:?} differ from the target's {expected:?}")]
    QubitMismatch { found: Vec<VertexId>, expected: Vec<VertexId> },
    #[error("target graph must contain photons only")]
    NotPhotonOnly,
    #[error("expected a forward sequence")]
    Direction,
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Where measurement outcomes come from.
#[derive(Clone, Debug)]
pub enum Outcomes {
    /// Sampled with the Born rule from a seeded stream.
    Seeded(u64),
    /// Fixed outcome per measurement, in gate order.
    Forced(Vec<u8>),
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub state: StateVector,
    pub record: Vec<(VertexId, u8)>,
}

/// |G> over the vertices in ascending id order.
pub fn graph_state_vector(graph: &GraphState, cap: usize) -> Result<StateVector, VerifyError> {
    if graph.emitter_count() > 0 {
        return Err(VerifyError::NotPhotonOnly);
    }
    let n = graph.vertex_count();
    if n > cap {
        return Err(VerifyError::SizeCap { needed: n, cap });
    }
    let qubits: Vec<VertexId> = graph.vertices().map(|(v, _)| v).collect();
    let pos: BTreeMap<VertexId, usize> = qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let masks: Vec<usize> = graph.edges().map(|(u, v)| 1 << pos[&u] | 1 << pos[&v]).collect();
    let scale = (0.5f64).powf(n as f64 / 2.0);
    let amps = (0..1usize << n)
        .map(|k| {
            let odd = masks.iter().filter(|&&m| k & m == m).count() % 2 == 1;
            Complex64::new(if odd { -scale } else { scale }, 0.0)
        })
        .collect();
    StateVector::from_amplitudes(qubits, amps)
}

/// Largest number of simultaneously live qubits the sequence needs.
pub fn peak_live_qubits(seq: &GenerationSequence) -> usize {
    let mut live = BTreeSet::new();
    let mut peak = 0;
    for g in seq.gates() {
        match *g {
            Gate::MeasureZ(q) => {
                live.remove(&q);
            }
            Gate::Correction { .. } => {}
            _ => {
                live.extend(g.qubits());
                peak = peak.max(live.len());
            }
        }
    }
    peak
}

/// Runs a forward sequence. Returns `Ok(None)` when a forced outcome has zero
/// probability.
pub fn simulate_forward(
    seq: &GenerationSequence,
    outcomes: &Outcomes,
    cap: usize,
) -> Result<Option<Simulation>, VerifyError> {
    if seq.direction != Direction::Forward {
        return Err(VerifyError::Direction);
    }
    let mut rng = match outcomes {
        Outcomes::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        Outcomes::Forced(_) => None,
    };
    let mut state = StateVector::new();
    let mut emitted = BTreeSet::new();
    let mut retired = BTreeSet::new();
    let mut results: BTreeMap<VertexId, u8> = BTreeMap::new();
    let mut record = Vec::new();

    // Fresh emitters start in |+>; anything else must already be live.
    let touch = |state: &mut StateVector,
                 retired: &BTreeSet<VertexId>,
                 gate: usize,
                 q: VertexId|
     -> Result<(), VerifyError> {
        if state.index_of(q).is_some() {
            return Ok(());
        }
        if retired.contains(&q) {
            return Err(VerifyError::Retired { gate, qubit: q });
        }
        if seq.emitter_set.contains(&q) {
            return state.add_qubit(q, Init::Plus, cap);
        }
        Err(VerifyError::UnknownQubit { gate, qubit: q })
    };

    for (i, g) in seq.gates().enumerate() {
        match *g {
            Gate::H(q) => {
                touch(&mut state, &retired, i, q)?;
                state.h(q);
            }
            Gate::EmissionCnot { emitter, photon } => {
                touch(&mut state, &retired, i, emitter)?;
                if !emitted.insert(photon) {
                    return Err(VerifyError::DuplicateEmission { gate: i, photon });
                }
                state.add_qubit(photon, Init::Zero, cap)?;
                state.cnot(emitter, photon);
            }
            Gate::Cz(a, b) => {
                touch(&mut state, &retired, i, a)?;
                touch(&mut state, &retired, i, b)?;
                state.cz(a, b);
            }
            Gate::MeasureZ(q) => {
                touch(&mut state, &retired, i, q)?;
                let outcome = match (&mut rng, outcomes) {
                    (Some(rng), _) => u8::from(rng.gen::<f64>() < state.prob_one(q)),
                    (None, Outcomes::Forced(bits)) => bits.get(record.len()).copied().unwrap_or(0),
                    (None, Outcomes::Seeded(_)) => unreachable!("seeded outcomes carry a stream"),
                };
                if state.project(q, outcome) < 1e-12 {
                    return Ok(None);
                }
                state.trace_out(q).map_err(|qubit| VerifyError::EntanglementLeak { gate: i, qubit })?;
                retired.insert(q);
                results.insert(q, outcome);
                record.push((q, outcome));
            }
            Gate::Correction { target, basis, source } => {
                let m = *results.get(&source).ok_or(VerifyError::MissingOutcome { gate: i, emitter: source })?;
                if state.index_of(target).is_none() {
                    return Err(VerifyError::UnknownQubit { gate: i, qubit: target });
                }
                if m == 1 {
                    match basis {
                        Pauli::X => state.x(target),
                        Pauli::Z => state.z(target),
                    }
                }
            }
        }
    }

    // Emitters never measured must have disentangled from the photons.
    let last = seq.gates().count();
    let leftovers: Vec<VertexId> =
        state.qubits().iter().copied().filter(|q| seq.emitter_set.contains(q)).collect();
    for q in leftovers {
        state.trace_out(q).map_err(|qubit| VerifyError::EntanglementLeak { gate: last, qubit })?;
    }
    Ok(Some(Simulation { state, record }))
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    /// `(outcome seed, fidelity)` per run.
    pub fidelities: Vec<(u64, f64)>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn min_fidelity(&self) -> f64 {
        self.fidelities.iter().map(|&(_, f)| f).fold(f64::INFINITY, f64::min)
    }
}

/// Compiles `log` on `graph`, simulates it under `seeds` outcome streams and
/// compares each result with the graph state.
pub fn verify_sequence(
    graph: &GraphState,
    log: &[ActionRecord],
    seeds: u64,
    cap: usize,
) -> Result<VerifyReport, VerifyError> {
    let seq = build_forward_sequence(log, graph)?;
    verify_forward(graph, &seq, seeds, cap)
}

pub fn verify_forward(
    graph: &GraphState,
    seq: &GenerationSequence,
    seeds: u64,
    cap: usize,
) -> Result<VerifyReport, VerifyError> {
    let target = graph_state_vector(graph, cap)?;
    let mut fidelities = Vec::new();
    for seed in 0..seeds {
        let sim = simulate_forward(seq, &Outcomes::Seeded(seed), cap)?
            .expect("sampled outcomes have non-zero probability");
        fidelities.push((seed, sim.state.fidelity(&target)?));
    }
    let passed = fidelities.iter().all(|&(_, f)| f >= 1.0 - FIDELITY_TOL);
    Ok(VerifyReport { fidelities, passed })
}

/// Checks every measurement branch; only practical for a handful of measurements.
pub fn verify_all_branches(
    graph: &GraphState,
    seq: &GenerationSequence,
    cap: usize,
) -> Result<bool, VerifyError> {
    let target = graph_state_vector(graph, cap)?;
    let measurements = seq.gate_count(|g| matches!(g, Gate::MeasureZ(_)));
    for branch in 0..1u32 << measurements {
        let bits = (0..measurements).map(|i| (branch >> i & 1) as u8).collect();
        if let Some(sim) = simulate_forward(seq, &Outcomes::Forced(bits), cap)? {
            if sim.state.fidelity(&target)? < 1.0 - FIDELITY_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether `psi` is fixed by `X_i prod_{j in N(i)} Z_j` for every vertex `i`.
pub fn stabilizer_check(psi: &StateVector, graph: &GraphState) -> Result<bool, VerifyError> {
    if graph.vertices().any(|(_, k)| k != VertexKind::Photon) {
        return Err(VerifyError::NotPhotonOnly);
    }
    let expected = 1usize << graph.vertex_count();
    if psi.amplitudes().len() != expected {
        return Err(VerifyError::Dimension { expected, found: psi.amplitudes().len() });
    }
    let pos = psi.qubit_map();
    let bit = |v: VertexId| -> Result<usize, VerifyError> {
        pos.get(&v).map(|&i| 1 << i).ok_or(VerifyError::QubitMismatch {
            found: psi.qubits().to_vec(),
            expected: graph.vertices().map(|(v, _)| v).collect(),
        })
    };
    let amps = psi.amplitudes();
    for (v, _) in graph.vertices() {
        let x = bit(v)?;
        let mut z = 0;
        for &u in graph.neighbors(v).expect("vertex exists") {
            z |= bit(u)?;
        }
        for (k, &a) in amps.iter().enumerate() {
            let sign = if (k & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            if (amps[k ^ x] - a * sign).norm() > 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
