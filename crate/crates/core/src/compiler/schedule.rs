use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use super::{CompileError, Direction, Gate, GateBlock, GenerationSequence, HardwareParams};
use crate::graph::VertexId;

/// Integer time in femtoseconds.
///
/// Schedules are kept in integer ticks so that makespan differences telescope
/// exactly; nanosecond values are produced only at the boundary.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Ticks(pub i64);

impl Ticks {
    pub const ZERO: Ticks = Ticks(0);
    pub const PER_NS: i64 = 1_000_000;

    /// Nearest tick to a duration given in ns.
    pub fn from_ns(ns: f64) -> Ticks {
        Ticks((ns * Self::PER_NS as f64).round() as i64)
    }

    pub fn as_ns(self) -> f64 {
        self.0 as f64 / Self::PER_NS as f64
    }
}

impl Add for Ticks {
    type Output = Ticks;
    fn add(self, rhs: Ticks) -> Ticks {
        Ticks(self.0 + rhs.0)
    }
}

impl AddAssign for Ticks {
    fn add_assign(&mut self, rhs: Ticks) {
        self.0 += rhs.0;
    }
}

impl Sub for Ticks {
    type Output = Ticks;
    fn sub(self, rhs: Ticks) -> Ticks {
        Ticks(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Ticks {
    fn sum<I: Iterator<Item = Ticks>>(iter: I) -> Ticks {
        iter.fold(Ticks::ZERO, Add::add)
    }
}

impl fmt::Display for Ticks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ns", self.as_ns())
    }
}

/// Gate durations in ticks, resolved once from [`HardwareParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Durations {
    pub emit: Ticks,
    pub single: Ticks,
    pub cz: Ticks,
    pub meas: Ticks,
}

impl Durations {
    pub fn of(&self, gate: &Gate) -> Ticks {
        match gate {
            Gate::H(_) => self.single,
            Gate::EmissionCnot { .. } => self.emit,
            Gate::Cz(..) => self.cz,
            Gate::MeasureZ(_) => self.meas,
            Gate::Correction { .. } => Ticks::ZERO,
        }
    }
}

impl From<&HardwareParams> for Durations {
    fn from(hw: &HardwareParams) -> Self {
        Durations {
            emit: Ticks::from_ns(hw.t_emit_ns),
            single: Ticks::from_ns(hw.t_1q_ns),
            cz: Ticks::from_ns(hw.t_cz_ns),
            meas: Ticks::from_ns(hw.t_meas_ns),
        }
    }
}

/// Per-qubit availability under greedy in-order list scheduling.
///
/// A gate starts once every qubit it touches is free. A photon's timeline begins
/// at its emission, so photons never delay an emitter in the forward direction;
/// tracking them keeps a sequence and its reversal at the same makespan.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Timeline {
    ready: BTreeMap<VertexId, Ticks>,
    makespan: Ticks,
}

impl Timeline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn makespan(&self) -> Ticks {
        self.makespan
    }

    pub fn ready(&self, q: VertexId) -> Ticks {
        self.ready.get(&q).copied().unwrap_or(Ticks::ZERO)
    }

    /// Schedules one gate and returns its `(start, end)`.
    pub fn place(&mut self, gate: &Gate, durations: &Durations) -> (Ticks, Ticks) {
        let qubits = gate.qubits();
        let start = qubits.iter().map(|&q| self.ready(q)).max().unwrap_or(Ticks::ZERO);
        let end = start + durations.of(gate);
        for q in qubits {
            self.ready.insert(q, end);
        }
        self.makespan = self.makespan.max(end);
        (start, end)
    }

    /// Schedules gates in order and returns the makespan increase.
    pub fn extend<'a>(
        &mut self,
        gates: impl IntoIterator<Item = &'a Gate>,
        durations: &Durations,
    ) -> Ticks {
        let before = self.makespan;
        for g in gates {
            self.place(g, durations);
        }
        self.makespan - before
    }

    /// The increase [`Timeline::extend`] would report, leaving `self` untouched.
    pub fn probe<'a>(
        &self,
        gates: impl IntoIterator<Item = &'a Gate>,
        durations: &Durations,
    ) -> Ticks {
        let mut touched: Vec<(VertexId, Ticks)> = Vec::new();
        let mut makespan = self.makespan;
        for g in gates {
            let qubits = g.qubits();
            let ready = |q: VertexId, touched: &[(VertexId, Ticks)]| {
                touched.iter().rev().find(|(t, _)| *t == q).map_or_else(|| self.ready(q), |&(_, r)| r)
            };
            let start = qubits.iter().map(|&q| ready(q, &touched)).max().unwrap_or(Ticks::ZERO);
            let end = start + durations.of(g);
            touched.extend(qubits.into_iter().map(|q| (q, end)));
            makespan = makespan.max(end);
        }
        makespan - self.makespan
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub gate: Gate,
    pub start: Ticks,
    pub end: Ticks,
    pub resources: Vec<VertexId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    pub assignments: Vec<Assignment>,
    timeline: Timeline,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn makespan(&self) -> Ticks {
        self.timeline.makespan()
    }

    pub fn timeline(&self) -> &Timeline {
        &self.timeline
    }

    fn push(&mut self, gate: &Gate, durations: &Durations) {
        let (start, end) = self.timeline.place(gate, durations);
        self.assignments.push(Assignment { gate: *gate, start, end, resources: gate.qubits() });
    }
}

/// Greedy in-order schedule of a forward sequence.
pub fn schedule_makespan(
    seq: &GenerationSequence,
    hw: &HardwareParams,
) -> Result<Schedule, CompileError> {
    if seq.direction != Direction::Forward {
        return Err(CompileError::Direction);
    }
    let durations = Durations::from(hw);
    let mut schedule = Schedule::new();
    for g in seq.gates() {
        schedule.push(g, &durations);
    }
    Ok(schedule)
}

/// Appends a block to a copy of `partial` and reports the makespan increase.
pub fn incremental_makespan(
    partial: &Schedule,
    block: &GateBlock,
    hw: &HardwareParams,
) -> (Schedule, Ticks) {
    let durations = Durations::from(hw);
    let mut next = partial.clone();
    for g in &block.gates {
        next.push(g, &durations);
    }
    let added = next.makespan() - partial.makespan();
    (next, added)
}
