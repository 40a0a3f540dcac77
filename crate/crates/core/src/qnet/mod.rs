//! Graph-isomorphism Q-network scoring graph states.
//!
//! Two GIN layers (sum aggregation, learnable self weight `1 + eps`, two dense
//! layers with ReLU each), mean-pool readout and a three-layer head. The value
//! of an action is the score of the state it leads to.
//!
//! After layer one a vertex's activation depends only on its [`LocalSig`]
//! (kind, degree, neighbour kinds and degree sum, graph order); after layer two
//! only on its [`NbhdSig`]. The network is therefore evaluated once per
//! distinct signature. Neighbour sums run in signature order and the readout
//! sums classes in signature order, so the output is a pure function of the
//! signature multiset: bit-identical under relabelling and independent of cache
//! state.

mod params;

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{GraphState, VertexId, VertexKind};

pub use params::{param_count, QNetParams, Tensor, FEATURES, HIDDEN};

#[derive(Debug, Error)]
pub enum QNetError {
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("training diverged: loss {0}")]
    Divergence(f64),
    #[error("training batch is empty")]
    EmptyBatch,
}

/// Ascending-id view of a state as the network sees it.
#[derive(Clone, Debug, PartialEq)]
pub struct Features {
    pub ids: Vec<VertexId>,
    pub adjacency: Vec<Vec<usize>>,
    pub x: Vec<[f64; FEATURES]>,
}

pub fn featurize(state: &GraphState) -> Features {
    let ids: Vec<VertexId> = state.vertices().map(|(v, _)| v).collect();
    let norm = state.vertex_count().saturating_sub(1).max(1) as f64;
    let index: HashMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let adjacency = ids
        .iter()
        .map(|&v| state.neighbors(v).expect("listed vertex").iter().map(|u| index[u]).collect())
        .collect();
    let x = state
        .vertices()
        .map(|(v, kind)| {
            let photon = kind == VertexKind::Photon;
            [f64::from(u8::from(photon)), f64::from(u8::from(!photon)), state.degree(v) as f64 / norm]
        })
        .collect();
    Features { ids, adjacency, x }
}

/// Everything layer one sees of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalSig {
    emitter: bool,
    degree: u32,
    nbr_photons: u32,
    nbr_emitters: u32,
    nbr_degree_sum: u32,
    order: u32,
}

impl LocalSig {
    fn norm(&self) -> f64 {
        self.order.saturating_sub(1).max(1) as f64
    }

    fn features(&self) -> [f64; FEATURES] {
        let e = f64::from(u8::from(self.emitter));
        [1.0 - e, e, self.degree as f64 / self.norm()]
    }

    fn neighbor_sum(&self) -> [f64; FEATURES] {
        [
            self.nbr_photons as f64,
            self.nbr_emitters as f64,
            self.nbr_degree_sum as f64 / self.norm(),
        ]
    }
}

/// Everything layer two sees of a vertex: its own and its neighbours' local signatures.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NbhdSig {
    own: LocalSig,
    nbrs: Vec<LocalSig>,
}

/// Sorted distinct neighbourhood signatures with multiplicities.
pub fn vertex_classes(state: &GraphState) -> Vec<(NbhdSig, u32)> {
    let order = state.vertex_count() as u32;
    let local: HashMap<VertexId, LocalSig> = state
        .vertices()
        .map(|(v, kind)| {
            let nbrs = state.neighbors(v).expect("listed vertex");
            let mut sig = LocalSig {
                emitter: kind == VertexKind::Emitter,
                degree: nbrs.len() as u32,
                nbr_photons: 0,
                nbr_emitters: 0,
                nbr_degree_sum: 0,
                order,
            };
            for &u in nbrs {
                match state.kind(u).expect("neighbor exists") {
                    VertexKind::Photon => sig.nbr_photons += 1,
                    VertexKind::Emitter => sig.nbr_emitters += 1,
                }
                sig.nbr_degree_sum += state.degree(u) as u32;
            }
            (v, sig)
        })
        .collect();
    let mut sigs: Vec<NbhdSig> = state
        .vertices()
        .map(|(v, _)| {
            let mut nbrs: Vec<LocalSig> =
                state.neighbors(v).expect("listed vertex").iter().map(|u| local[u]).collect();
            nbrs.sort_unstable();
            NbhdSig { own: local[&v], nbrs }
        })
        .collect();
    sigs.sort_unstable();
    let mut classes: Vec<(NbhdSig, u32)> = Vec::new();
    for s in sigs {
        match classes.last_mut() {
            Some((last, count)) if *last == s => *count += 1,
            _ => classes.push((s, 1)),
        }
    }
    classes
}

fn relu(v: &mut [f64]) {
    for x in v {
        if !(*x > 0.0) {
            *x = 0.0;
        }
    }
}

/// `b + x W` for a row-major `W` of shape `(x.len(), b.len())`.
fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_out = b.len();
    let mut out = b.to_vec();
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            let row = &w[i * n_out..(i + 1) * n_out];
            for (o, &wio) in out.iter_mut().zip(row) {
                *o += xi * wio;
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients of [`affine`]; optionally returns the input gradient.
fn affine_backward(
    w: &[f64],
    x: &[f64],
    g_out: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    want_input: bool,
) -> Option<Vec<f64>> {
    let n_out = g_out.len();
    for (b, g) in gb.iter_mut().zip(g_out) {
        *b += g;
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            for (gwio, &g) in gw[i * n_out..(i + 1) * n_out].iter_mut().zip(g_out) {
                *gwio += xi * g;
            }
        }
    }
    want_input.then(|| {
        (0..x.len())
            .map(|i| w[i * n_out..(i + 1) * n_out].iter().zip(g_out).map(|(a, b)| a * b).sum())
            .collect()
    })
}

fn mask_relu(g: &mut [f64], post: &[f64]) {
    for (gi, &p) in g.iter_mut().zip(post) {
        if !(p > 0.0) {
            *gi = 0.0;
        }
    }
}

struct Layer1Node {
    x: [f64; FEATURES],
    h: [f64; FEATURES],
    u: Vec<f64>,
    z: Vec<f64>,
}

struct Layer2Node {
    own: usize,
    nbrs: Vec<usize>,
    h: Vec<f64>,
    u: Vec<f64>,
    z: Vec<f64>,
}

/// Per-signature activations for one parameter version.
#[derive(Default)]
struct Arena {
    l1: Vec<Layer1Node>,
    l1_index: HashMap<LocalSig, usize>,
    l2: Vec<Layer2Node>,
    l2_index: HashMap<NbhdSig, usize>,
}

/// Bound on cached layer-two classes before the cache is dropped.
const ARENA_LIMIT: usize = 50_000;

impl Arena {
    fn clear(&mut self) {
        *self = Arena::default();
    }

    fn layer1(&mut self, p: &QNetParams, sig: LocalSig) -> usize {
        if let Some(&i) = self.l1_index.get(&sig) {
            return i;
        }
        let x = sig.features();
        let agg = sig.neighbor_sum();
        let self_weight = 1.0 + p.tensor(Tensor::Eps1)[0];
        let h: [f64; FEATURES] = std::array::from_fn(|k| self_weight * x[k] + agg[k]);
        let mut u = affine(p.tensor(Tensor::Gin1AW), p.tensor(Tensor::Gin1AB), &h);
        relu(&mut u);
        let mut z = affine(p.tensor(Tensor::Gin1BW), p.tensor(Tensor::Gin1BB), &u);
        relu(&mut z);
        self.l1.push(Layer1Node { x, h, u, z });
        self.l1_index.insert(sig, self.l1.len() - 1);
        self.l1.len() - 1
    }

    fn layer2(&mut self, p: &QNetParams, sig: &NbhdSig) -> usize {
        if let Some(&i) = self.l2_index.get(sig) {
            return i;
        }
        let own = self.layer1(p, sig.own);
        let nbrs: Vec<usize> = sig.nbrs.iter().map(|&s| self.layer1(p, s)).collect();
        let self_weight = 1.0 + p.tensor(Tensor::Eps2)[0];
        let mut h: Vec<f64> = self.l1[own].z.iter().map(|z| self_weight * z).collect();
        for &n in &nbrs {
            for (hk, zk) in h.iter_mut().zip(&self.l1[n].z) {
                *hk += zk;
            }
        }
        let mut u = affine(p.tensor(Tensor::Gin2AW), p.tensor(Tensor::Gin2AB), &h);
        relu(&mut u);
        let mut z = affine(p.tensor(Tensor::Gin2BW), p.tensor(Tensor::Gin2BB), &u);
        relu(&mut z);
        self.l2.push(Layer2Node { own, nbrs, h, u, z });
        self.l2_index.insert(sig.clone(), self.l2.len() - 1);
        self.l2.len() - 1
    }

    /// Mean-pooled embedding plus the `(class index, multiplicity)` list behind it.
    fn embed(&mut self, p: &QNetParams, state: &GraphState) -> (Vec<f64>, Vec<(usize, u32)>) {
        if self.l2.len() > ARENA_LIMIT {
            self.clear();
        }
        let classes: Vec<(usize, u32)> =
            vertex_classes(state).iter().map(|(sig, c)| (self.layer2(p, sig), *c)).collect();
        let mut pooled = vec![0.0; HIDDEN];
        for &(i, c) in &classes {
            let c = c as f64;
            for (acc, z) in pooled.iter_mut().zip(&self.l2[i].z) {
                *acc += c * z;
            }
        }
        let n = state.vertex_count();
        if n > 0 {
            pooled.iter_mut().for_each(|x| *x /= n as f64);
        }
        (pooled, classes)
    }
}

struct HeadTrace {
    pooled: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    q: f64,
}

fn head(p: &QNetParams, pooled: Vec<f64>) -> HeadTrace {
    let mut a1 = affine(p.tensor(Tensor::Head1W), p.tensor(Tensor::Head1B), &pooled);
    relu(&mut a1);
    let mut a2 = affine(p.tensor(Tensor::Head2W), p.tensor(Tensor::Head2B), &a1);
    relu(&mut a2);
    let q = affine(p.tensor(Tensor::OutW), p.tensor(Tensor::OutB), &a2)[0];
    HeadTrace { pooled, a1, a2, q }
}

/// Parameters plus a signature cache valid for exactly those parameters.
pub struct Scorer {
    params: QNetParams,
    arena: Arena,
}

impl Clone for Scorer {
    fn clone(&self) -> Self {
        Scorer::new(self.params.clone())
    }
}

impl Scorer {
    pub fn new(params: QNetParams) -> Self {
        Scorer { params, arena: Arena::default() }
    }

    pub fn params(&self) -> &QNetParams {
        &self.params
    }

    pub fn into_params(self) -> QNetParams {
        self.params
    }

    pub fn set_params(&mut self, params: QNetParams) {
        self.params = params;
        self.arena.clear();
    }

    pub fn encode(&mut self, state: &GraphState) -> Vec<f64> {
        self.arena.embed(&self.params, state).0
    }

    pub fn q_value(&mut self, state: &GraphState) -> f64 {
        let pooled = self.encode(state);
        head(&self.params, pooled).q
    }
}

pub fn encode(state: &GraphState, params: &QNetParams) -> Vec<f64> {
    Arena::default().embed(params, state).0
}

pub fn q_value(state: &GraphState, params: &QNetParams) -> f64 {
    head(params, encode(state, params)).q
}

/// Mean squared error over `batch` and its gradient in flat parameter layout.
pub fn loss_and_gradient(params: &QNetParams, batch: &[(&GraphState, f64)]) -> (f64, Vec<f64>) {
    let mut arena = Arena::default();
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; param_count()];
    let mut loss = 0.0;
    let mut g_l2: Vec<Option<Vec<f64>>> = Vec::new();

    let tensor = |t: Tensor| t.offset()..t.offset() + t.len();

    for &(state, y) in batch {
        let (pooled, classes) = arena.embed(params, state);
        let trace = head(params, pooled);
        let diff = trace.q - y;
        loss += diff * diff * scale;

        let g_q = [2.0 * diff * scale];
        let (gw, gb) = split_pair(&mut grad, tensor(Tensor::OutW), tensor(Tensor::OutB));
        let mut g_a2 = affine_backward(params.tensor(Tensor::OutW), &trace.a2, &g_q, gw, gb, true)
            .expect("input gradient requested");
        mask_relu(&mut g_a2, &trace.a2);
        let (gw, gb) = split_pair(&mut grad, tensor(Tensor::Head2W), tensor(Tensor::Head2B));
        let mut g_a1 = affine_backward(params.tensor(Tensor::Head2W), &trace.a1, &g_a2, gw, gb, true)
            .expect("input gradient requested");
        mask_relu(&mut g_a1, &trace.a1);
        let (gw, gb) = split_pair(&mut grad, tensor(Tensor::Head1W), tensor(Tensor::Head1B));
        let g_pooled =
            affine_backward(params.tensor(Tensor::Head1W), &trace.pooled, &g_a1, gw, gb, true)
                .expect("input gradient requested");

        let n = state.vertex_count() as f64;
        g_l2.resize(arena.l2.len(), None);
        for (i, c) in classes {
            let w = c as f64 / n;
            let slot = g_l2[i].get_or_insert_with(|| vec![0.0; HIDDEN]);
            for (s, g) in slot.iter_mut().zip(&g_pooled) {
                *s += w * g;
            }
        }
    }

    let mut g_l1: Vec<Option<Vec<f64>>> = vec![None; arena.l1.len()];
    let self_weight2 = 1.0 + params.tensor(Tensor::Eps2)[0];
    let mut g_eps2 = 0.0;
    for (node, g) in arena.l2.iter().zip(g_l2) {
        let Some(mut g_z) = g else { continue };
        mask_relu(&mut g_z, &node.z);
        let (gw, gb) = split_pair(&mut grad, tensor(Tensor::Gin2BW), tensor(Tensor::Gin2BB));
        let mut g_u = affine_backward(params.tensor(Tensor::Gin2BW), &node.u, &g_z, gw, gb, true)
            .expect("input gradient requested");
        mask_relu(&mut g_u, &node.u);
        let (gw, gb) = split_pair(&mut grad, tensor(Tensor::Gin2AW), tensor(Tensor::Gin2AB));
        let g_h = affine_backward(params.tensor(Tensor::Gin2AW), &node.h, &g_u, gw, gb, true)
            .expect("input gradient requested");

        g_eps2 += g_h.iter().zip(&arena.l1[node.own].z).map(|(a, b)| a * b).sum::<f64>();
        let own = g_l1[node.own].get_or_insert_with(|| vec![0.0; HIDDEN]);
        for (s, g) in own.iter_mut().zip(&g_h) {
            *s += self_weight2 * g;
        }
        for &nb in &node.nbrs {
            let slot = g_l1[nb].get_or_insert_with(|| vec![0.0; HIDDEN]);
            for (s, g) in slot.iter_mut().zip(&g_h) {
                *s += g;
            }
        }
    }
    grad[Tensor::Eps2.offset()] += g_eps2;

    let mut g_eps1 = 0.0;
    for (node, g) in arena.l1.iter().zip(g_l1) {
        let Some(mut g_z) = g else { continue };
        mask_relu(&mut g_z, &node.z);
        let (gw, gb) = split_pair(&mut grad, tensor(Tensor::Gin1BW), tensor(Tensor::Gin1BB));
        let mut g_u = affine_backward(params.tensor(Tensor::Gin1BW), &node.u, &g_z, gw, gb, true)
            .expect("input gradient requested");
        mask_relu(&mut g_u, &node.u);
        let (gw, gb) = split_pair(&mut grad, tensor(Tensor::Gin1AW), tensor(Tensor::Gin1AB));
        let g_h = affine_backward(params.tensor(Tensor::Gin1AW), &node.h, &g_u, gw, gb, true)
            .expect("input gradient requested");
        g_eps1 += g_h.iter().zip(&node.x).map(|(a, b)| a * b).sum::<f64>();
    }
    grad[Tensor::Eps1.offset()] += g_eps1;

    (loss, grad)
}

/// Two disjoint mutable ranges of `v`; `a` must precede `b`.
fn split_pair(
    v: &mut [f64],
    a: std::ops::Range<usize>,
    b: std::ops::Range<usize>,
) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a.end <= b.start);
    let (left, right) = v.split_at_mut(b.start);
    (&mut left[a], &mut right[..b.end - b.start])
}

/// Adaptive moment estimation over the flat parameter vector.
#[derive(Clone, Debug)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam { m: vec![0.0; param_count()], v: vec![0.0; param_count()], t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl Adam {
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], step_size: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= step_size * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// The online network: a [`Scorer`] plus optimiser state.
#[derive(Clone)]
pub struct Trainer {
    scorer: Scorer,
    adam: Adam,
}

impl Trainer {
    pub fn new(params: QNetParams) -> Self {
        Trainer { scorer: Scorer::new(params), adam: Adam::default() }
    }

    pub fn scorer(&mut self) -> &mut Scorer {
        &mut self.scorer
    }

    pub fn params(&self) -> &QNetParams {
        self.scorer.params()
    }

    pub fn into_params(self) -> QNetParams {
        self.scorer.into_params()
    }

    /// One optimiser step on the squared error; returns the loss before the update.
    pub fn train_step(&mut self, batch: &[(&GraphState, f64)], step_size: f64) -> Result<f64, QNetError> {
        if batch.is_empty() {
            return Err(QNetError::EmptyBatch);
        }
        let (loss, grad) = loss_and_gradient(&self.scorer.params, batch);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(QNetError::Divergence(loss));
        }
        self.adam.step(self.scorer.params.as_mut_slice(), &grad, step_size);
        self.scorer.arena.clear();
        Ok(loss)
    }
}
