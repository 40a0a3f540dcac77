//! Every gate template, checked against the statevector oracle.

use emitseq::compiler::{build_forward_sequence, Direction, Gate, GateBlock, GenerationSequence, Pauli};
use emitseq::graph::{ActionRecord, GraphOp, GraphState, VertexId};
use emitseq::verify::{graph_state_vector, verify_all_branches, verify_sequence, DEFAULT_CAP};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(i: u32) -> VertexId {
    VertexId(i)
}

fn run(g: &GraphState, ops: &[GraphOp]) -> Vec<ActionRecord> {
    let mut state = g.clone();
    let log = ops
        .iter()
        .map(|&op| {
            let (next, rec) = state.apply_action(op).unwrap();
            state = next;
            rec
        })
        .collect();
    assert!(state.is_terminal());
    log
}

fn assert_verifies(g: &GraphState, log: &[ActionRecord]) {
    let report = verify_sequence(g, log, 10, DEFAULT_CAP).unwrap();
    assert!(report.passed, "fidelities {:?}", report.fidelities);
    let seq = build_forward_sequence(log, g).unwrap();
    assert!(verify_all_branches(g, &seq, DEFAULT_CAP).unwrap());
}

fn cycle4() -> GraphState {
    GraphState::with_photons(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
}

#[test]
fn single_emitter_path() {
    let g = GraphState::with_photons(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    let e = v(4);
    let log = run(
        &g,
        &[
            GraphOp::EmitterSwap { photon: v(3) },
            GraphOp::TypeIAbsorb { emitter: e, photon: v(2) },
            GraphOp::TypeIAbsorb { emitter: e, photon: v(1) },
            GraphOp::TypeIIAbsorb { emitter: e, photon: v(0) },
        ],
    );
    assert_verifies(&g, &log);
}

#[test]
fn two_emitter_path_with_photon_side_hadamards() {
    let g = GraphState::with_photons(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    let log = run(
        &g,
        &[
            GraphOp::EmitterSwap { photon: v(1) },
            GraphOp::EmitterSwap { photon: v(2) },
            GraphOp::TypeIIAbsorb { emitter: v(4), photon: v(0) },
            GraphOp::TypeIIAbsorb { emitter: v(5), photon: v(3) },
            GraphOp::ReversedCz { first: v(4), second: v(5) },
        ],
    );
    assert_verifies(&g, &log);
}

#[test]
fn type_three_absorb_on_a_square() {
    let g = cycle4();
    let e = v(4);
    let log = run(
        &g,
        &[
            GraphOp::EmitterSwap { photon: v(0) },
            GraphOp::TypeIIIAbsorb { emitter: e, photon: v(2) },
            GraphOp::TypeIIAbsorb { emitter: e, photon: v(1) },
            GraphOp::TypeIIAbsorb { emitter: e, photon: v(3) },
        ],
    );
    assert_verifies(&g, &log);
}

#[test]
fn type_three_reversed_cz_on_a_square() {
    let g = cycle4();
    let log = run(
        &g,
        &[
            GraphOp::EmitterSwap { photon: v(0) },
            GraphOp::EmitterSwap { photon: v(2) },
            GraphOp::TypeIIIReversedCz { kept: v(4), removed: v(5) },
            GraphOp::TypeIIAbsorb { emitter: v(4), photon: v(1) },
            GraphOp::TypeIIAbsorb { emitter: v(4), photon: v(3) },
        ],
    );
    assert_verifies(&g, &log);
}

#[test]
fn isolated_twins_absorb() {
    let g = GraphState::with_photons(2, []).unwrap();
    let log = run(
        &g,
        &[GraphOp::EmitterSwap { photon: v(0) }, GraphOp::TypeIIIAbsorb { emitter: v(2), photon: v(1) }],
    );
    assert_verifies(&g, &log);
}

/// Triangle 0-1-2. Backwards: swap 2 into emitter 3, which is then an adjacent
/// twin of photon 0. Absorbing 0 with the twin template, finishing with a
/// Type-II absorption of photon 1, does not rebuild the triangle under any
/// placement of the trailing Hadamards, which is why twin operations require
/// non-adjacent operands.
#[test]
fn adjacent_twin_template_fails_the_oracle() {
    let g = GraphState::with_photons(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let (e, p0, p1, p2) = (v(3), v(0), v(1), v(2));
    let tails: [&[Gate]; 4] = [
        &[Gate::H(e), Gate::H(p0)],
        &[Gate::H(e)],
        &[Gate::H(p0)],
        &[],
    ];
    for tail in tails {
        let mut gates = vec![Gate::EmissionCnot { emitter: e, photon: p1 }, Gate::H(e)];
        gates.extend([Gate::H(e), Gate::EmissionCnot { emitter: e, photon: p0 }]);
        gates.extend_from_slice(tail);
        gates.extend([
            Gate::EmissionCnot { emitter: e, photon: p2 },
            Gate::H(e),
            Gate::MeasureZ(e),
            Gate::Correction { target: p2, basis: Pauli::Z, source: e },
        ]);
        let seq = GenerationSequence {
            direction: Direction::Forward,
            blocks: vec![GateBlock { op: GraphOp::EmitterSwap { photon: p2 }, gates }],
            emitter_set: [e].into(),
        };
        assert!(!verify_all_branches(&g, &seq, DEFAULT_CAP).unwrap(), "tail {tail:?}");
    }
    graph_state_vector(&g, DEFAULT_CAP).unwrap();
}

#[test]
fn dropping_an_op_breaks_the_log() {
    let g = GraphState::with_photons(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    let e = v(4);
    let mut log = run(
        &g,
        &[
            GraphOp::EmitterSwap { photon: v(3) },
            GraphOp::TypeIAbsorb { emitter: e, photon: v(2) },
            GraphOp::TypeIAbsorb { emitter: e, photon: v(1) },
            GraphOp::TypeIIAbsorb { emitter: e, photon: v(0) },
        ],
    );
    log.remove(1);
    assert!(verify_sequence(&g, &log, 10, DEFAULT_CAP).is_err());
}

fn random_connected(n: u32, extra: u32, rng: &mut ChaCha8Rng) -> GraphState {
    let mut edges = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.insert((j, i));
    }
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    GraphState::with_photons(n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_rollouts_verify(seed in any::<u64>(), n in 1u32..8, extra in 0u32..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected(n, extra, &mut rng);
        let mut state = g.clone();
        let mut log = Vec::new();
        while !state.is_terminal() {
            let ops = state.enumerate_actions(None);
            let op = ops[rng.gen_range(0..ops.len())];
            let (next, rec) = state.apply_action(op).unwrap();
            log.push(rec);
            state = next;
        }
        let report = verify_sequence(&g, &log, 4, DEFAULT_CAP).unwrap();
        prop_assert!(report.passed, "log {:?} fidelities {:?}", log, report.fidelities);
    }
}
