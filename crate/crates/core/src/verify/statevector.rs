use std::collections::BTreeMap;

use num_complex::Complex64;

use super::VerifyError;
use crate::graph::VertexId;

const PURITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    Zero,
    Plus,
}

/// Dense state over a dynamic set of qubits. Bit `i` of an amplitude index is
/// the qubit `qubits[i]`; qubit 0 is least significant.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    qubits: Vec<VertexId>,
}

impl Default for StateVector {
    fn default() -> Self {
        Self::new()
    }
}

impl StateVector {
    /// The zero-qubit state with amplitude 1.
    pub fn new() -> Self {
        StateVector { amps: vec![Complex64::new(1.0, 0.0)], qubits: Vec::new() }
    }

    pub fn from_amplitudes(qubits: Vec<VertexId>, amps: Vec<Complex64>) -> Result<Self, VerifyError> {
        if amps.len() != 1usize << qubits.len() {
            return Err(VerifyError::Dimension { expected: 1 << qubits.len(), found: amps.len() });
        }
        Ok(StateVector { amps, qubits })
    }

    pub fn n(&self) -> usize {
        self.qubits.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn qubits(&self) -> &[VertexId] {
        &self.qubits
    }

    pub fn qubit_map(&self) -> BTreeMap<VertexId, usize> {
        self.qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn index_of(&self, q: VertexId) -> Option<usize> {
        self.qubits.iter().position(|&x| x == q)
    }

    fn bit(&self, q: VertexId) -> usize {
        1 << self.index_of(q).expect("qubit is live")
    }

    /// Appends a qubit as the new most significant bit.
    pub fn add_qubit(&mut self, q: VertexId, init: Init, cap: usize) -> Result<(), VerifyError> {
        if self.n() + 1 > cap {
            return Err(VerifyError::SizeCap { needed: self.n() + 1, cap });
        }
        let (a0, a1) = match init {
            Init::Zero => (1.0, 0.0),
            Init::Plus => (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        };
        let low: Vec<Complex64> = self.amps.iter().map(|a| a * a0).collect();
        let high: Vec<Complex64> = self.amps.iter().map(|a| a * a1).collect();
        self.amps = low;
        self.amps.extend(high);
        self.qubits.push(q);
        Ok(())
    }

    pub fn h(&mut self, q: VertexId) {
        let b = self.bit(q);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for k in (0..self.amps.len()).filter(|k| k & b == 0) {
            let (x, y) = (self.amps[k], self.amps[k | b]);
            self.amps[k] = (x + y) * s;
            self.amps[k | b] = (x - y) * s;
        }
    }

    pub fn x(&mut self, q: VertexId) {
        let b = self.bit(q);
        for k in (0..self.amps.len()).filter(|k| k & b == 0) {
            self.amps.swap(k, k | b);
        }
    }

    pub fn z(&mut self, q: VertexId) {
        let b = self.bit(q);
        for (k, a) in self.amps.iter_mut().enumerate() {
            if k & b != 0 {
                *a = -*a;
            }
        }
    }

    pub fn cnot(&mut self, control: VertexId, target: VertexId) {
        let (c, t) = (self.bit(control), self.bit(target));
        for k in (0..self.amps.len()).filter(|k| k & c != 0 && k & t == 0) {
            self.amps.swap(k, k | t);
        }
    }

    pub fn cz(&mut self, a: VertexId, b: VertexId) {
        let mask = self.bit(a) | self.bit(b);
        for (k, amp) in self.amps.iter_mut().enumerate() {
            if k & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Probability of reading 1 on `q`.
    pub fn prob_one(&self, q: VertexId) -> f64 {
        let b = self.bit(q);
        self.amps.iter().enumerate().filter(|(k, _)| k & b != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Projects `q` onto `outcome` and renormalises. Returns the branch probability.
    pub fn project(&mut self, q: VertexId, outcome: u8) -> f64 {
        let b = self.bit(q);
        let keep = if outcome == 1 { b } else { 0 };
        let mut p = 0.0;
        for (k, a) in self.amps.iter_mut().enumerate() {
            if k & b == keep {
                p += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            self.amps.iter_mut().for_each(|a| *a *= s);
        }
        p
    }

    /// Removes `q`, which must factor out of the state as a pure single-qubit
    /// state (Schmidt rank 1).
    pub fn trace_out(&mut self, q: VertexId) -> Result<(), VertexId> {
        let idx = self.index_of(q).expect("qubit is live");
        let b = 1usize << idx;
        let pairs: Vec<(usize, usize)> =
            (0..self.amps.len()).filter(|k| k & b == 0).map(|k| (k, k | b)).collect();

        // Reduced density matrix of q.
        let (mut r00, mut r11, mut r01) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for &(k0, k1) in &pairs {
            let (a0, a1) = (self.amps[k0], self.amps[k1]);
            r00 += a0.norm_sqr();
            r11 += a1.norm_sqr();
            r01 += a0 * a1.conj();
        }
        let purity = r00 * r00 + r11 * r11 + 2.0 * r01.norm_sqr();
        if (1.0 - purity).abs() > PURITY_TOL {
            return Err(q);
        }
        // Dominant eigenvector of the reduced state.
        let (phi0, phi1) = if r00 >= r11 {
            let s = r00.sqrt();
            (Complex64::new(s, 0.0), r01.conj() / s)
        } else {
            let s = r11.sqrt();
            (r01 / s, Complex64::new(s, 0.0))
        };
        let rest: Vec<Complex64> =
            pairs.iter().map(|&(k0, k1)| phi0.conj() * self.amps[k0] + phi1.conj() * self.amps[k1]).collect();
        // `pairs` enumerates indices with bit `idx` cleared in increasing order,
        // which is exactly the index order of the remaining qubits.
        self.amps = rest;
        self.qubits.remove(idx);
        Ok(())
    }

    /// |<self|other>|^2 after matching qubits by id.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, VerifyError> {
        let mut a: Vec<VertexId> = self.qubits.clone();
        let mut b: Vec<VertexId> = other.qubits.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(VerifyError::QubitMismatch { found: self.qubits.clone(), expected: b });
        }
        let other_pos = other.qubit_map();
        let to_other: Vec<usize> = self.qubits.iter().map(|q| 1 << other_pos[q]).collect();
        let mut overlap = Complex64::new(0.0, 0.0);
        for (k, amp) in self.amps.iter().enumerate() {
            let j: usize = to_other
                .iter()
                .enumerate()
                .filter(|(i, _)| k >> i & 1 == 1)
                .map(|(_, &bit)| bit)
                .sum();
            overlap += amp.conj() * other.amps[j];
        }
        Ok(overlap.norm_sqr())
    }
}
