use serde::{Deserialize, Serialize};

use super::{schedule_makespan, CompileError, GenerationSequence, HardwareParams, Ticks};
use crate::graph::GraphOp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub t_gen: Ticks,
    pub n_e: usize,
    pub n_cz: usize,
}

impl Metrics {
    pub fn t_gen_ns(&self) -> f64 {
        self.t_gen.as_ns()
    }

    /// Undiscounted episode return: the per-step rewards summed, evaluated in
    /// one expression so that equal metrics give bit-equal returns.
    pub fn total_reward(&self, hw: &HardwareParams, alpha: f64) -> f64 {
        -self.t_gen_ns() - alpha * hw.t_cz_ns * self.n_e as f64
    }
}

pub fn metrics_of(seq: &GenerationSequence, hw: &HardwareParams) -> Result<Metrics, CompileError> {
    let schedule = schedule_makespan(seq, hw)?;
    Ok(Metrics { t_gen: schedule.makespan(), n_e: seq.emitter_set.len(), n_cz: seq.cz_count() })
}

/// Per-step reward: added time, plus the emitter penalty on swaps.
pub fn reward_of(op: &GraphOp, added_ns: f64, hw: &HardwareParams, alpha: f64) -> f64 {
    if op.is_swap() {
        -added_ns - alpha * hw.t_cz_ns
    } else {
        -added_ns
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub f_de: f64,
    pub f_cz: f64,
    pub p_remain: f64,
}

pub fn fidelity_report(m: &Metrics, hw: &HardwareParams) -> FidelityReport {
    let t = m.t_gen_ns();
    FidelityReport {
        f_de: (-(m.n_e as f64) * t / hw.t2_ns).exp(),
        f_cz: hw.sigma_cz.powi(m.n_cz as i32),
        p_remain: 10f64.powf(-hw.loss_db_per_km * t / 50_000.0),
    }
}
