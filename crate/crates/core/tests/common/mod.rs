//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use emitseq::graph::{GraphState, VertexId, VertexKind};
use emitseq::qnet::{loss_and_gradient, QNetParams, Tensor};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn path(n: u32) -> GraphState {
    GraphState::with_photons(n, (1..n).map(|i| (i - 1, i))).unwrap()
}

pub fn random_graph(n: u32, p: f64, rng: &mut impl Rng) -> GraphState {
    let edges: Vec<(u32, u32)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|_| rng.gen_bool(p)).collect();
    GraphState::with_photons(n, edges).unwrap()
}

/// A photon/emitter state reached by three random backward steps from a 9-photon graph.
pub fn mixed_state(seed: u64) -> GraphState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = random_graph(9, 0.35, &mut rng);
    for _ in 0..3 {
        let ops = g.enumerate_actions(None);
        if ops.is_empty() {
            break;
        }
        g = g.apply_action(*ops.choose(&mut rng).unwrap()).unwrap().0;
    }
    g
}

/// The same graph under fresh distinct ids drawn from `0..1000`.
pub fn relabel(g: &GraphState, rng: &mut impl Rng) -> GraphState {
    let ids: Vec<VertexId> = g.vertices().map(|(v, _)| v).collect();
    let fresh: Vec<VertexId> =
        index::sample(rng, 1000, ids.len()).into_iter().map(|i| VertexId(i as u32)).collect();
    let map = |v: VertexId| fresh[ids.binary_search(&v).unwrap()];
    let vertices: Vec<(VertexId, VertexKind)> = g.vertices().map(|(v, k)| (map(v), k)).collect();
    let edges: Vec<(VertexId, VertexId)> = g.edges().map(|(u, v)| (map(u), map(v))).collect();
    GraphState::from_parts(vertices, edges).unwrap()
}

pub struct GradientCheck {
    pub checked: usize,
    /// Coordinates where a rectifier switches inside the difference interval.
    pub kinks: usize,
    pub failures: Vec<String>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central differences at `h = 1e-5` on up to `per_tensor` sampled coordinates of
/// every tensor. A coordinate fails the relative 1e-4 check unless its one-sided
/// slopes disagree, in which case the analytic value must match one of them.
pub fn gradient_check(p: &QNetParams, batch: &[(&GraphState, f64)], per_tensor: usize, seed: u64) -> GradientCheck {
    let (_, grad) = loss_and_gradient(p, batch);
    let loss = |q: &QNetParams| loss_and_gradient(q, batch).0;
    let base = loss(p);
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradientCheck { checked: 0, kinks: 0, failures: Vec::new() };
    for t in Tensor::ALL {
        for k in index::sample(&mut rng, t.len(), t.len().min(per_tensor)) {
            let idx = t.offset() + k;
            let mut plus = p.clone();
            plus.as_mut_slice()[idx] += h;
            let mut minus = p.clone();
            minus.as_mut_slice()[idx] -= h;
            let (up, down) = (loss(&plus), loss(&minus));
            let analytic = grad[idx];
            let central = (up - down) / (2.0 * h);
            out.checked += 1;
            if rel(analytic, central) <= 1e-4 {
                continue;
            }
            let (fwd, bwd) = ((up - base) / h, (base - down) / h);
            if rel(fwd, bwd) > 1e-4 && rel(analytic, fwd).min(rel(analytic, bwd)) <= 1e-4 {
                out.kinks += 1;
            } else {
                out.failures.push(format!("{t:?}[{k}]: analytic {analytic}, central {central}"));
            }
        }
    }
    out
}
