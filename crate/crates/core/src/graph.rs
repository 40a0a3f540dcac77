//! Photon/emitter graph states and the six backward rewrite operations.
//!
//! A [`GraphState`] is rewritten towards the empty (terminal) graph one
//! [`GraphOp`] at a time. Every operation removes a photon, an emitter, or at
//! least one edge, so any sequence of operations terminates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hop distance reported for vertices that cannot be reached from the source.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VertexKind {
    Photon,
    Emitter,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("cannot apply {op}: {reason}")]
    Rejected { op: GraphOp, reason: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Node {
    kind: VertexKind,
    neighbors: BTreeSet<VertexId>,
}

/// Undirected simple graph whose vertices are photons or emitters.
///
/// Values are never mutated by the rewrite operations; [`GraphState::apply_action`]
/// returns a fresh state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GraphState {
    nodes: BTreeMap<VertexId, Node>,
    edge_count: usize,
    photon_count: usize,
    emitter_count: usize,
    next_emitter_label: u32,
}

impl Default for GraphState {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphState {
    pub fn new() -> Self {
        GraphState {
            nodes: BTreeMap::new(),
            edge_count: 0,
            photon_count: 0,
            emitter_count: 0,
            next_emitter_label: 0,
        }
    }

    /// Builds a photon-only graph on vertices `0..n`.
    pub fn with_photons(
        n: u32,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self, GraphError> {
        Self::from_parts(
            (0..n).map(|i| (VertexId(i), VertexKind::Photon)),
            edges.into_iter().map(|(u, v)| (VertexId(u), VertexId(v))),
        )
    }

    /// Builds an arbitrary state. Fresh emitter labels start above every id given.
    pub fn from_parts(
        vertices: impl IntoIterator<Item = (VertexId, VertexKind)>,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, GraphError> {
        let mut g = GraphState::new();
        for (id, kind) in vertices {
            if g.nodes.contains_key(&id) {
                return Err(GraphError::Invalid(format!("duplicate vertex {id}")));
            }
            g.insert_vertex(id, kind);
        }
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::Invalid(format!("self-loop on {u}")));
            }
            for w in [u, v] {
                if !g.nodes.contains_key(&w) {
                    return Err(GraphError::UnknownVertex(w));
                }
            }
            if !g.insert_edge(u, v) {
                return Err(GraphError::Invalid(format!("duplicate edge {u} {v}")));
            }
        }
        Ok(g)
    }

    /// Parses the `V E` header plus `E` lines of `u v` edge-list format.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let parse_err = |line: usize, message: String| GraphError::Parse { line, message };

        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing \"V E\" header".into()))?;
        let (v, e) = parse_pair(header).map_err(|m| parse_err(1, format!("malformed header: {m}")))?;

        let mut g = GraphState::new();
        for i in 0..v {
            g.insert_vertex(VertexId(i), VertexKind::Photon);
        }
        let mut seen = 0u32;
        for (line, content) in lines {
            if content.trim().is_empty() {
                continue;
            }
            if seen == e {
                return Err(parse_err(line, format!("more than the declared {e} edges")));
            }
            let (a, b) = parse_pair(content).map_err(|m| parse_err(line, m))?;
            if a >= v || b >= v {
                return Err(parse_err(line, format!("endpoint out of range 0..{v}")));
            }
            if a == b {
                return Err(parse_err(line, format!("self-loop on {a}")));
            }
            if !g.insert_edge(VertexId(a), VertexId(b)) {
                return Err(parse_err(line, format!("duplicate edge {a} {b}")));
            }
            seen += 1;
        }
        if seen != e {
            return Err(parse_err(
                text.lines().count().max(1),
                format!("expected {e} edges, found {seen}"),
            ));
        }
        Ok(g)
    }

    /// Writes the edge-list format. Only defined for photon-only graphs on `0..V`.
    pub fn to_edge_list(&self) -> Result<String, GraphError> {
        let contiguous = self.nodes.keys().enumerate().all(|(i, v)| v.0 as usize == i);
        if self.emitter_count > 0 || !contiguous {
            return Err(GraphError::Invalid(
                "edge lists require photons labelled 0..V".into(),
            ));
        }
        let mut out = format!("{} {}\n", self.vertex_count(), self.edge_count);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        Ok(out)
    }

    fn insert_vertex(&mut self, id: VertexId, kind: VertexKind) {
        self.nodes.insert(id, Node { kind, neighbors: BTreeSet::new() });
        match kind {
            VertexKind::Photon => self.photon_count += 1,
            VertexKind::Emitter => self.emitter_count += 1,
        }
        self.next_emitter_label = self.next_emitter_label.max(id.0 + 1);
    }

    fn insert_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        let fresh = self.nodes.get_mut(&u).expect("endpoint exists").neighbors.insert(v);
        if fresh {
            self.nodes.get_mut(&v).expect("endpoint exists").neighbors.insert(u);
            self.edge_count += 1;
        }
        fresh
    }

    fn remove_edge(&mut self, u: VertexId, v: VertexId) {
        if self.nodes.get_mut(&u).map_or(false, |n| n.neighbors.remove(&v)) {
            self.nodes.get_mut(&v).expect("symmetric adjacency").neighbors.remove(&u);
            self.edge_count -= 1;
        }
    }

    fn remove_vertex(&mut self, v: VertexId) {
        let node = self.nodes.remove(&v).expect("vertex exists");
        for u in &node.neighbors {
            self.nodes.get_mut(u).expect("symmetric adjacency").neighbors.remove(&v);
        }
        self.edge_count -= node.neighbors.len();
        match node.kind {
            VertexKind::Photon => self.photon_count -= 1,
            VertexKind::Emitter => self.emitter_count -= 1,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn photon_count(&self) -> usize {
        self.photon_count
    }

    pub fn emitter_count(&self) -> usize {
        self.emitter_count
    }

    pub fn next_emitter_label(&self) -> VertexId {
        VertexId(self.next_emitter_label)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.nodes.contains_key(&v)
    }

    pub fn kind(&self, v: VertexId) -> Option<VertexKind> {
        self.nodes.get(&v).map(|n| n.kind)
    }

    pub fn neighbors(&self, v: VertexId) -> Option<&BTreeSet<VertexId>> {
        self.nodes.get(&v).map(|n| &n.neighbors)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.nodes.get(&v).map_or(0, |n| n.neighbors.len())
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.nodes.get(&u).map_or(false, |n| n.neighbors.contains(&v))
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, VertexKind)> + '_ {
        self.nodes.iter().map(|(&id, n)| (id, n.kind))
    }

    pub fn photons(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|(_, k)| *k == VertexKind::Photon).map(|(v, _)| v)
    }

    pub fn emitters(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|(_, k)| *k == VertexKind::Emitter).map(|(v, _)| v)
    }

    /// Each edge once as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.nodes.iter().flat_map(|(&u, n)| {
            n.neighbors.range(VertexId(u.0 + 1)..).map(move |&v| (u, v))
        })
    }

    pub fn is_terminal(&self) -> bool {
        self.edge_count == 0 && self.photon_count == 0
    }

    /// Checks the structural invariants; used by tests and debug assertions.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut photons = 0;
        let mut half_edges = 0;
        for (&id, node) in &self.nodes {
            if node.kind == VertexKind::Photon {
                photons += 1;
            }
            if id.0 >= self.next_emitter_label {
                return Err(GraphError::Invalid(format!("{id} not below the emitter label")));
            }
            for &u in &node.neighbors {
                if u == id {
                    return Err(GraphError::Invalid(format!("self-loop on {id}")));
                }
                if !self.has_edge(u, id) {
                    return Err(GraphError::Invalid(format!("asymmetric edge {id} {u}")));
                }
            }
            half_edges += node.neighbors.len();
        }
        if half_edges != 2 * self.edge_count
            || photons != self.photon_count
            || photons + self.emitter_count != self.nodes.len()
        {
            return Err(GraphError::Invalid("cached counters out of sync".into()));
        }
        Ok(())
    }

    /// Breadth-first hop counts from `source`; [`UNREACHABLE`] marks other components.
    pub fn hop_distances(&self, source: VertexId) -> Result<BTreeMap<VertexId, u32>, GraphError> {
        if !self.contains(source) {
            return Err(GraphError::UnknownVertex(source));
        }
        let mut dist: BTreeMap<VertexId, u32> =
            self.nodes.keys().map(|&v| (v, UNREACHABLE)).collect();
        dist.insert(source, 0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            for &w in &self.nodes[&u].neighbors {
                let slot = dist.get_mut(&w).expect("neighbor exists");
                if *slot == UNREACHABLE {
                    *slot = d + 1;
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    /// Every applicable operation in canonical order. With a restriction, only
    /// operations whose operands all lie inside it.
    pub fn enumerate_actions(&self, restriction: Option<&BTreeSet<VertexId>>) -> Vec<GraphOp> {
        let allowed = |v: &VertexId| restriction.map_or(true, |r| r.contains(v));
        let mut ops = Vec::new();

        for p in self.photons().filter(allowed) {
            ops.push(GraphOp::EmitterSwap { photon: p });
        }

        for e in self.emitters().filter(allowed) {
            let ne = &self.nodes[&e].neighbors;

            if ne.len() == 1 {
                let p = *ne.first().expect("one neighbor");
                if self.kind(p) == Some(VertexKind::Photon) && allowed(&p) {
                    ops.push(GraphOp::TypeIAbsorb { emitter: e, photon: p });
                }
            }

            for &p in ne.iter().filter(|p| allowed(p)) {
                let node = &self.nodes[&p];
                if node.kind == VertexKind::Photon && node.neighbors.len() == 1 {
                    ops.push(GraphOp::TypeIIAbsorb { emitter: e, photon: p });
                }
            }

            for t in self.twins(e) {
                if !allowed(&t) {
                    continue;
                }
                match self.nodes[&t].kind {
                    VertexKind::Photon => {
                        ops.push(GraphOp::TypeIIIAbsorb { emitter: e, photon: t })
                    }
                    // Emitter twins sharing no neighbor are already disentangled.
                    VertexKind::Emitter if t > e && !ne.is_empty() => {
                        ops.push(GraphOp::TypeIIIReversedCz { kept: e, removed: t })
                    }
                    VertexKind::Emitter => {}
                }
            }

            for &f in ne.range(VertexId(e.0 + 1)..).filter(|f| allowed(f)) {
                if self.nodes[&f].kind == VertexKind::Emitter {
                    ops.push(GraphOp::ReversedCz { first: e, second: f });
                }
            }
        }

        ops.sort_unstable();
        ops
    }

    /// Non-adjacent vertices with exactly the neighborhood of `v`.
    fn twins(&self, v: VertexId) -> Vec<VertexId> {
        let nv = &self.nodes[&v].neighbors;
        let same = |u: &VertexId| *u != v && self.nodes[u].neighbors == *nv;
        match nv.first() {
            // Any twin of `v` is also adjacent to `v`'s first neighbor.
            Some(&anchor) => self.nodes[&anchor].neighbors.iter().copied().filter(same).collect(),
            None => self
                .nodes
                .iter()
                .filter(|(u, n)| n.neighbors.is_empty() && **u != v)
                .map(|(&u, _)| u)
                .collect(),
        }
    }

    fn precondition(&self, op: &GraphOp) -> Result<(), String> {
        let kind_is = |v: VertexId, k: VertexKind| -> Result<(), String> {
            match self.kind(v) {
                None => Err(format!("vertex {v} does not exist")),
                Some(actual) if actual != k => Err(format!("vertex {v} is not {k:?}")),
                Some(_) => Ok(()),
            }
        };
        let nbrs = |v: VertexId| &self.nodes[&v].neighbors;
        match *op {
            GraphOp::EmitterSwap { photon } => kind_is(photon, VertexKind::Photon),
            GraphOp::TypeIAbsorb { emitter, photon } => {
                kind_is(emitter, VertexKind::Emitter)?;
                kind_is(photon, VertexKind::Photon)?;
                if nbrs(emitter).len() != 1 || !nbrs(emitter).contains(&photon) {
                    return Err(format!("N({emitter}) is not {{{photon}}}"));
                }
                Ok(())
            }
            GraphOp::TypeIIAbsorb { emitter, photon } => {
                kind_is(emitter, VertexKind::Emitter)?;
                kind_is(photon, VertexKind::Photon)?;
                if nbrs(photon).len() != 1 || !nbrs(photon).contains(&emitter) {
                    return Err(format!("N({photon}) is not {{{emitter}}}"));
                }
                Ok(())
            }
            GraphOp::TypeIIIAbsorb { emitter, photon } => {
                kind_is(emitter, VertexKind::Emitter)?;
                kind_is(photon, VertexKind::Photon)?;
                self.twin_condition(emitter, photon)
            }
            GraphOp::ReversedCz { first, second } => {
                kind_is(first, VertexKind::Emitter)?;
                kind_is(second, VertexKind::Emitter)?;
                if first >= second {
                    return Err("operands must be ordered first < second".into());
                }
                if !self.has_edge(first, second) {
                    return Err(format!("no edge between {first} and {second}"));
                }
                Ok(())
            }
            GraphOp::TypeIIIReversedCz { kept, removed } => {
                kind_is(kept, VertexKind::Emitter)?;
                kind_is(removed, VertexKind::Emitter)?;
                if kept >= removed {
                    return Err("the removed emitter must carry the larger id".into());
                }
                if nbrs(kept).is_empty() {
                    return Err("both emitters are already disentangled".into());
                }
                self.twin_condition(kept, removed)
            }
        }
    }

    fn twin_condition(&self, a: VertexId, b: VertexId) -> Result<(), String> {
        if a == b {
            return Err("operands must be distinct".into());
        }
        if self.has_edge(a, b) {
            return Err(format!("{a} and {b} are adjacent"));
        }
        if self.nodes[&a].neighbors != self.nodes[&b].neighbors {
            return Err(format!("N({a}) differs from N({b})"));
        }
        Ok(())
    }

    /// Applies `op` to a copy of the state.
    pub fn apply_action(&self, op: GraphOp) -> Result<(GraphState, ActionRecord), GraphError> {
        self.precondition(&op)
            .map_err(|reason| GraphError::Rejected { op, reason })?;
        let mut next = self.clone();
        let mut resulting_emitter = None;
        match op {
            GraphOp::EmitterSwap { photon } => {
                let e = VertexId(next.next_emitter_label);
                let nbrs = next.nodes[&photon].neighbors.clone();
                next.remove_vertex(photon);
                next.insert_vertex(e, VertexKind::Emitter);
                for u in nbrs {
                    next.insert_edge(e, u);
                }
                resulting_emitter = Some(e);
            }
            GraphOp::TypeIAbsorb { emitter, photon } => {
                let nbrs = next.nodes[&photon].neighbors.clone();
                next.remove_vertex(photon);
                for u in nbrs.into_iter().filter(|&u| u != emitter) {
                    next.insert_edge(emitter, u);
                }
            }
            GraphOp::TypeIIAbsorb { photon, .. } | GraphOp::TypeIIIAbsorb { photon, .. } => {
                next.remove_vertex(photon);
            }
            GraphOp::ReversedCz { first, second } => next.remove_edge(first, second),
            GraphOp::TypeIIIReversedCz { removed, .. } => next.remove_vertex(removed),
        }
        debug_assert!(next.validate().is_ok());
        Ok((next, ActionRecord { op, resulting_emitter }))
    }

    /// Replays a log from this state, checking every recorded emitter label.
    pub fn replay(&self, log: &[ActionRecord]) -> Result<GraphState, GraphError> {
        let mut state = self.clone();
        for rec in log {
            let (next, produced) = state.apply_action(rec.op)?;
            if produced != *rec {
                return Err(GraphError::Invalid(format!(
                    "log entry {} does not match the replayed emitter label",
                    rec.op
                )));
            }
            state = next;
        }
        Ok(state)
    }
}

fn parse_pair(line: &str) -> Result<(u32, u32), String> {
    let mut it = line.split_whitespace();
    let mut next = |what: &str| -> Result<u32, String> {
        let tok = it.next().ok_or_else(|| format!("missing {what}"))?;
        tok.parse::<u32>().map_err(|_| format!("{what} {tok:?} is not a non-negative integer"))
    };
    let a = next("first field")?;
    let b = next("second field")?;
    if it.next().is_some() {
        return Err("trailing fields".into());
    }
    Ok((a, b))
}

/// One backward rewrite together with its operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphOp {
    EmitterSwap { photon: VertexId },
    TypeIAbsorb { emitter: VertexId, photon: VertexId },
    TypeIIAbsorb { emitter: VertexId, photon: VertexId },
    TypeIIIAbsorb { emitter: VertexId, photon: VertexId },
    ReversedCz { first: VertexId, second: VertexId },
    TypeIIIReversedCz { kept: VertexId, removed: VertexId },
}

impl GraphOp {
    pub fn rank(&self) -> u8 {
        match self {
            GraphOp::EmitterSwap { .. } => 0,
            GraphOp::TypeIAbsorb { .. } => 1,
            GraphOp::TypeIIAbsorb { .. } => 2,
            GraphOp::TypeIIIAbsorb { .. } => 3,
            GraphOp::ReversedCz { .. } => 4,
            GraphOp::TypeIIIReversedCz { .. } => 5,
        }
    }

    /// Operand ids in declaration order.
    pub fn operands(&self) -> Vec<VertexId> {
        match *self {
            GraphOp::EmitterSwap { photon } => vec![photon],
            GraphOp::TypeIAbsorb { emitter, photon }
            | GraphOp::TypeIIAbsorb { emitter, photon }
            | GraphOp::TypeIIIAbsorb { emitter, photon } => vec![emitter, photon],
            GraphOp::ReversedCz { first, second } => vec![first, second],
            GraphOp::TypeIIIReversedCz { kept, removed } => vec![kept, removed],
        }
    }

    pub fn is_swap(&self) -> bool {
        matches!(self, GraphOp::EmitterSwap { .. })
    }

    /// True for the two operations that cost an inter-emitter CZ.
    pub fn uses_cz(&self) -> bool {
        matches!(self, GraphOp::ReversedCz { .. } | GraphOp::TypeIIIReversedCz { .. })
    }

    fn sort_key(&self) -> (u8, VertexId, VertexId) {
        let ops = self.operands();
        let lo = *ops.iter().min().expect("operands non-empty");
        let hi = *ops.iter().max().expect("operands non-empty");
        (self.rank(), lo, hi)
    }
}

impl Ord for GraphOp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| self.operands().cmp(&other.operands()))
    }
}

impl PartialOrd for GraphOp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GraphOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphOp::EmitterSwap { photon } => write!(f, "swap {photon}"),
            GraphOp::TypeIAbsorb { emitter, photon } => write!(f, "type1 {emitter} {photon}"),
            GraphOp::TypeIIAbsorb { emitter, photon } => write!(f, "type2 {emitter} {photon}"),
            GraphOp::TypeIIIAbsorb { emitter, photon } => write!(f, "type3 {emitter} {photon}"),
            GraphOp::ReversedCz { first, second } => write!(f, "rcz {first} {second}"),
            GraphOp::TypeIIIReversedCz { kept, removed } => {
                write!(f, "type3rcz {kept} {removed}")
            }
        }
    }
}

impl FromStr for GraphOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        let id = |i: usize| -> Result<VertexId, String> {
            fields
                .get(i)
                .ok_or_else(|| format!("{s:?}: missing operand"))?
                .parse::<u32>()
                .map(VertexId)
                .map_err(|_| format!("{s:?}: bad operand"))
        };
        let arity = if fields.first() == Some(&"swap") { 2 } else { 3 };
        if fields.len() != arity {
            return Err(format!("{s:?}: expected {} operand(s)", arity - 1));
        }
        let op = match fields[0] {
            "swap" => GraphOp::EmitterSwap { photon: id(1)? },
            "type1" => GraphOp::TypeIAbsorb { emitter: id(1)?, photon: id(2)? },
            "type2" => GraphOp::TypeIIAbsorb { emitter: id(1)?, photon: id(2)? },
            "type3" => GraphOp::TypeIIIAbsorb { emitter: id(1)?, photon: id(2)? },
            "rcz" => GraphOp::ReversedCz { first: id(1)?, second: id(2)? },
            "type3rcz" => GraphOp::TypeIIIReversedCz { kept: id(1)?, removed: id(2)? },
            other => return Err(format!("unknown operation {other:?}")),
        };
        Ok(op)
    }
}

/// A log entry: the applied operation and, for swaps, the emitter it created.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionRecord {
    pub op: GraphOp,
    pub resulting_emitter: Option<VertexId>,
}

impl fmt::Display for ActionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.resulting_emitter {
            Some(e) => write!(f, "{} -> {e}", self.op),
            None => write!(f, "{}", self.op),
        }
    }
}

impl FromStr for ActionRecord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (op_text, emitter) = match s.split_once("->") {
            Some((lhs, rhs)) => {
                let e = rhs.trim().parse::<u32>().map_err(|_| format!("{s:?}: bad emitter"))?;
                (lhs, Some(VertexId(e)))
            }
            None => (s, None),
        };
        let op: GraphOp = op_text.parse()?;
        if op.is_swap() != emitter.is_some() {
            return Err(format!("{s:?}: swaps and only swaps name a resulting emitter"));
        }
        Ok(ActionRecord { op, resulting_emitter: emitter })
    }
}

/// Parses a log written one [`ActionRecord`] per line; blank lines and `#` comments skipped.
pub fn parse_log(text: &str) -> Result<Vec<ActionRecord>, GraphError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| l.parse().map_err(|message| GraphError::Parse { line: i + 1, message }))
        .collect()
}
