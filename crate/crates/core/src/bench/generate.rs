use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::graph::{GraphState, VertexId};

/// Attempts before a random family gives up on producing a connected simple graph.
const MAX_ATTEMPTS: usize = 1000;

/// Graph family. Textual forms: `path`, `star`, `cycle`, `tree`, `grid:RxC`,
/// `regular:D`, `er:P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GraphKind {
    Path,
    Star,
    Cycle,
    Grid { rows: usize, cols: usize },
    RandomRegular { degree: usize },
    ErdosRenyi { p: f64 },
    RandomTree,
}

impl GraphKind {
    pub fn is_random(&self) -> bool {
        matches!(self, GraphKind::RandomRegular { .. } | GraphKind::ErdosRenyi { .. } | GraphKind::RandomTree)
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Path => write!(f, "path"),
            GraphKind::Star => write!(f, "star"),
            GraphKind::Cycle => write!(f, "cycle"),
            GraphKind::Grid { rows, cols } => write!(f, "grid:{rows}x{cols}"),
            GraphKind::RandomRegular { degree } => write!(f, "regular:{degree}"),
            GraphKind::ErdosRenyi { p } => write!(f, "er:{p}"),
            GraphKind::RandomTree => write!(f, "tree"),
        }
    }
}

impl FromStr for GraphKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BenchError::Spec(format!("unknown graph kind '{s}'"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("path", None) => Ok(GraphKind::Path),
            ("star", None) => Ok(GraphKind::Star),
            ("cycle", None) => Ok(GraphKind::Cycle),
            ("tree", None) => Ok(GraphKind::RandomTree),
            ("grid", Some(a)) => {
                let (r, c) = a.split_once('x').ok_or_else(bad)?;
                Ok(GraphKind::Grid {
                    rows: r.parse().map_err(|_| bad())?,
                    cols: c.parse().map_err(|_| bad())?,
                })
            }
            ("regular", Some(a)) => Ok(GraphKind::RandomRegular { degree: a.parse().map_err(|_| bad())? }),
            ("er", Some(a)) => Ok(GraphKind::ErdosRenyi { p: a.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

/// A reproducible generator request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub n: usize,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, n: usize, seed: u64) -> Self {
        GraphSpec { kind, n, seed }
    }

    /// `kind-n`, with `-sSEED` appended for random families.
    pub fn name(&self) -> String {
        let kind = self.kind.to_string().replace(':', "");
        if self.kind.is_random() {
            format!("{kind}-{}-s{}", self.n, self.seed)
        } else {
            format!("{kind}-{}", self.n)
        }
    }
}

fn build(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<GraphState, BenchError> {
    let n = u32::try_from(n).map_err(|_| BenchError::Spec("graph too large".into()))?;
    GraphState::with_photons(n, edges.into_iter().map(|(u, v)| (u as u32, v as u32))).map_err(BenchError::from)
}

pub fn is_connected(g: &GraphState) -> bool {
    match g.vertices().next() {
        None => true,
        Some((v, _)) => g.hop_distances(v).map_or(false, |d| {
            d.values().filter(|&&x| x != crate::graph::UNREACHABLE).count() == g.vertex_count()
        }),
    }
}

/// Deterministic, connected, simple graph on photons `0..n` for `spec`.
pub fn generate_graph(spec: &GraphSpec) -> Result<GraphState, BenchError> {
    let n = spec.n;
    if n == 0 {
        return Err(BenchError::Spec("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GraphKind::Path => build(n, (1..n).map(|i| (i - 1, i))),
        GraphKind::Star => build(n, (1..n).map(|i| (0, i))),
        GraphKind::Cycle => {
            if n < 3 {
                return Err(BenchError::Spec("a cycle needs at least 3 vertices".into()));
            }
            build(n, (0..n).map(|i| (i, (i + 1) % n)))
        }
        GraphKind::Grid { rows, cols } => {
            if rows * cols != n {
                return Err(BenchError::Spec(format!("grid {rows}x{cols} does not have {n} vertices")));
            }
            let at = |r: usize, c: usize| r * cols + c;
            let horizontal = (0..rows).flat_map(|r| (1..cols).map(move |c| (at(r, c - 1), at(r, c))));
            let vertical = (1..rows).flat_map(|r| (0..cols).map(move |c| (at(r - 1, c), at(r, c))));
            build(n, horizontal.chain(vertical).collect::<Vec<_>>())
        }
        GraphKind::RandomRegular { degree } => random_regular(n, degree, &mut rng),
        GraphKind::ErdosRenyi { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(BenchError::Spec("edge probability must lie in [0, 1]".into()));
            }
            for _ in 0..MAX_ATTEMPTS {
                let edges: Vec<(usize, usize)> = (0..n)
                    .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                    .filter(|_| rng.gen_bool(p))
                    .collect();
                let g = build(n, edges)?;
                if is_connected(&g) {
                    return Ok(g);
                }
            }
            Err(BenchError::Spec(format!("no connected er:{p} graph on {n} vertices after {MAX_ATTEMPTS} draws")))
        }
        GraphKind::RandomTree => random_tree(n, &mut rng),
    }
}

/// Uniform labelled tree from a random Prüfer sequence.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Result<GraphState, BenchError> {
    if n <= 2 {
        return build(n, (1..n).map(|i| (i - 1, i)));
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &c in &code {
        let leaf = leaves.pop_first().expect("a Prüfer step always has a leaf");
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.insert(c);
        }
    }
    let last: Vec<usize> = leaves.into_iter().collect();
    edges.push((last[0], last[1]));
    build(n, edges)
}

/// Configuration-model pairing, redrawn until simple and connected.
fn random_regular(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> Result<GraphState, BenchError> {
    if (n * degree) % 2 != 0 {
        return Err(BenchError::Spec(format!("n * degree must be even (n = {n}, degree = {degree})")));
    }
    if degree >= n || (degree == 0 && n > 1) {
        return Err(BenchError::Spec(format!("no connected {degree}-regular graph on {n} vertices")));
    }
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(degree)).collect();
    'attempt: for _ in 0..MAX_ATTEMPTS {
        stubs.shuffle(rng);
        let mut edges = BTreeSet::new();
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !edges.insert((u, v)) {
                continue 'attempt;
            }
        }
        let g = build(n, edges)?;
        if is_connected(&g) {
            return Ok(g);
        }
    }
    Err(BenchError::Spec(format!("no simple connected {degree}-regular graph on {n} vertices found")))
}

/// Degree of every vertex, in id order.
pub fn degrees(g: &GraphState) -> Vec<usize> {
    g.vertices().map(|(v, _): (VertexId, _)| g.degree(v)).collect()
}
