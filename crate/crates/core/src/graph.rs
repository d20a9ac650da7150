//! Labeled graphs: word acceptance, path-completeness, simulation maps and
//! the ordering verdict built on them.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use bitvec::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{Alphabet, Word};

/// An edge `(source, symbol, target)`; vertices are 0-based, symbols 1-based.
pub type Edge = (usize, usize, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    alphabet: Alphabet,
    nodes: Vec<String>,
    edges: BTreeSet<Edge>,
}

impl LabeledGraph {
    pub fn new(alphabet: Alphabet, nodes: Vec<String>, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let unique: HashSet<&String> = nodes.iter().collect();
        if unique.len() != nodes.len() {
            return Err(Error::InvalidGraph("duplicate node names".into()));
        }
        let mut g = Self { alphabet, nodes, edges: BTreeSet::new() };
        for e in edges {
            g.add_edge(e)?;
        }
        Ok(g)
    }

    /// Graph on vertices named `v1..vN`.
    pub fn with_vertices(alphabet: Alphabet, count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        Self::new(alphabet, (1..=count).map(|i| format!("v{i}")).collect(), edges)
    }

    /// Every triple in `V × Σ × V`.
    pub fn complete(alphabet: Alphabet, count: usize) -> Self {
        let edges = (0..count).flat_map(|v| alphabet.symbols().flat_map(move |s| (0..count).map(move |w| (v, s, w))));
        Self::with_vertices(alphabet, count, edges).expect("complete graph is well formed")
    }

    pub fn add_edge(&mut self, (v, s, w): Edge) -> Result<bool> {
        if v >= self.nodes.len() || w >= self.nodes.len() {
            return Err(Error::InvalidGraph(format!("edge ({v}, {s}, {w}) leaves the vertex set")));
        }
        self.alphabet.check(s)?;
        Ok(self.edges.insert((v, s, w)))
    }

    pub fn remove_edge(&mut self, e: Edge) -> bool {
        self.edges.remove(&e)
    }

    pub fn without_edge(&self, e: Edge) -> Self {
        let mut g = self.clone();
        g.remove_edge(e);
        g
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn num_vertices(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, v: usize) -> &str {
        &self.nodes[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn successors(&self, v: usize, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((v, s, 0)..=(v, s, usize::MAX)).map(|&(_, _, w)| w)
    }

    /// Triples of `V × Σ × V` that are not edges, in lexicographic order.
    pub fn non_edges(&self) -> Vec<Edge> {
        let n = self.num_vertices();
        let mut out = Vec::new();
        for v in 0..n {
            for s in self.alphabet.symbols() {
                for w in 0..n {
                    if !self.has_edge((v, s, w)) {
                        out.push((v, s, w));
                    }
                }
            }
        }
        out
    }

    /// Same vertex set, keeping only the edges selected by `keep`.
    pub fn edge_subgraph(&self, keep: impl Fn(Edge) -> bool) -> Self {
        Self { alphabet: self.alphabet, nodes: self.nodes.clone(), edges: self.edges.iter().copied().filter(|&e| keep(e)).collect() }
    }

    pub fn format_edge(&self, (v, s, w): Edge) -> String {
        format!("({}, {}, {})", self.nodes[v], s, self.nodes[w])
    }

    fn step_set(&self, set: &BitSlice, s: usize) -> BitVec {
        let mut next = bitvec![0; self.num_vertices()];
        for v in set.iter_ones() {
            for w in self.successors(v, s) {
                next.set(w, true);
            }
        }
        next
    }
}

impl fmt::Display for LabeledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges().map(|e| self.format_edge(e)).collect();
        write!(f, "{{{}}}", edges.join(", "))
    }
}

/// True iff some path of `g`, starting anywhere, is labeled by `w`.
pub fn accepts(g: &LabeledGraph, w: &Word) -> Result<bool> {
    w.check(g.alphabet())?;
    let mut active = bitvec![1; g.num_vertices()];
    for &s in w.letters() {
        active = g.step_set(&active, s);
        if active.not_any() {
            return Ok(false);
        }
    }
    Ok(active.any() || w.is_empty())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PathCompleteness {
    Complete,
    /// Shortest rejected word, lexicographically smallest among the shortest.
    Rejected { word: Word },
}

impl PathCompleteness {
    pub fn is_complete(&self) -> bool {
        matches!(self, PathCompleteness::Complete)
    }

    pub fn rejected_word(&self) -> Option<&Word> {
        match self {
            PathCompleteness::Rejected { word } => Some(word),
            PathCompleteness::Complete => None,
        }
    }
}

/// Breadth-first subset construction from the full vertex set. Letters are
/// expanded in increasing order from a FIFO queue, so the first word that
/// empties the set is the shortest one and lexicographically least.
pub fn is_path_complete(g: &LabeledGraph) -> PathCompleteness {
    let n = g.num_vertices();
    let m = g.alphabet().size();
    if n == 0 {
        return PathCompleteness::Rejected { word: Word::new(vec![1]) };
    }
    // Vertex sets as packed u64 blocks; rows[(v*m + s-1)*b ..] = successors of v under s.
    let b = n.div_ceil(64);
    let mut rows = vec![0u64; n * m * b];
    for (v, s, w) in g.edges() {
        rows[(v * m + s - 1) * b + w / 64] |= 1 << (w % 64);
    }
    let mut start = vec![u64::MAX; b];
    if !n.is_multiple_of(64) {
        start[b - 1] = (1 << (n % 64)) - 1;
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::from([start.clone()]);
    // Arena of visited sets plus the BFS tree: (parent index, letter).
    let mut sets = start;
    let mut tree: Vec<(usize, usize)> = vec![(usize::MAX, 0)];
    let mut next = vec![0u64; b];
    let mut head = 0;
    while head < tree.len() {
        for s in 1..=m {
            next.fill(0);
            for (blk, &word) in sets[head * b..(head + 1) * b].iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let v = blk * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let row = &rows[(v * m + s - 1) * b..][..b];
                    next.iter_mut().zip(row).for_each(|(x, r)| *x |= r);
                }
            }
            if next.iter().all(|&x| x == 0) {
                let mut letters = vec![s];
                let mut at = head;
                while at != 0 {
                    letters.push(tree[at].1);
                    at = tree[at].0;
                }
                letters.reverse();
                return PathCompleteness::Rejected { word: Word::new(letters) };
            }
            if !seen.contains(&next) {
                seen.insert(next.clone());
                sets.extend_from_slice(&next);
                tree.push((head, s));
            }
        }
        head += 1;
    }
    PathCompleteness::Complete
}

/// Vertex map `R: V̄ → V` (indices into Ḡ and G respectively).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimulationMap(pub Vec<usize>);

impl SimulationMap {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn image(&self, vbar: usize) -> usize {
        self.0[vbar]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Checks that every edge of `gbar` maps onto an edge of `g` under `map`.
/// Returns the first offending edge of `gbar` otherwise.
pub fn check_simulation(g: &LabeledGraph, gbar: &LabeledGraph, map: &SimulationMap) -> std::result::Result<(), Edge> {
    if map.0.len() != gbar.num_vertices() || map.0.iter().any(|&v| v >= g.num_vertices()) {
        return Err(gbar.edges().next().unwrap_or((0, 0, 0)));
    }
    match gbar.edges().find(|&(a, s, b)| !g.has_edge((map.0[a], s, map.0[b]))) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn verify_simulation(g: &LabeledGraph, gbar: &LabeledGraph, map: &SimulationMap) -> Result<()> {
    if map.0.len() != gbar.num_vertices() {
        return Err(Error::UnverifiedMap(format!("map has {} entries for {} vertices", map.0.len(), gbar.num_vertices())));
    }
    if let Some(&v) = map.0.iter().find(|&&v| v >= g.num_vertices()) {
        return Err(Error::UnverifiedMap(format!("image {v} is not a vertex")));
    }
    check_simulation(g, gbar, map).map_err(|e| {
        let (a, s, b) = e;
        Error::UnverifiedMap(format!(
            "edge {} maps to ({}, {}, {}), which is not an edge",
            gbar.format_edge(e),
            g.node_name(map.0[a]),
            s,
            g.node_name(map.0[b])
        ))
    })
}

/// Searches for a map under which `g` simulates `gbar`. Vertices of `gbar`
/// are assigned in index order and candidates tried in increasing order,
/// with forward checking on the unassigned neighbours, so the first map
/// found is the lexicographically smallest one.
pub fn find_simulation(g: &LabeledGraph, gbar: &LabeledGraph) -> Result<Option<SimulationMap>> {
    if g.alphabet() != gbar.alphabet() {
        return Err(Error::AlphabetMismatch(g.alphabet().size(), gbar.alphabet().size()));
    }
    let nb = gbar.num_vertices();
    let n = g.num_vertices();
    if nb == 0 {
        return Ok(Some(SimulationMap(Vec::new())));
    }
    if n == 0 {
        return Ok(None);
    }
    // Initial domains: v must offer every label v̄ uses, in both directions.
    let m = g.alphabet().size();
    let out_labels = |gr: &LabeledGraph, v: usize| -> Vec<bool> {
        (1..=m).map(|s| gr.successors(v, s).next().is_some()).collect()
    };
    let in_labels = |gr: &LabeledGraph, v: usize| -> Vec<bool> {
        (1..=m).map(|s| gr.edges().any(|(_, t, w)| t == s && w == v)).collect()
    };
    let g_out: Vec<Vec<bool>> = (0..n).map(|v| out_labels(g, v)).collect();
    let g_in: Vec<Vec<bool>> = (0..n).map(|v| in_labels(g, v)).collect();
    let domains: Vec<BitVec> = (0..nb)
        .map(|vb| {
            let (bo, bi) = (out_labels(gbar, vb), in_labels(gbar, vb));
            let mut d = bitvec![0; n];
            for v in 0..n {
                let ok = (0..m).all(|k| (!bo[k] || g_out[v][k]) && (!bi[k] || g_in[v][k]));
                d.set(v, ok);
            }
            d
        })
        .collect();
    let gbar_edges: Vec<Edge> = gbar.edges().collect();
    let mut assignment = vec![usize::MAX; nb];
    Ok(backtrack(g, &gbar_edges, 0, domains, &mut assignment).then_some(SimulationMap(assignment)))
}

fn backtrack(g: &LabeledGraph, gbar_edges: &[Edge], next: usize, domains: Vec<BitVec>, assignment: &mut [usize]) -> bool {
    if next == assignment.len() {
        return true;
    }
    for v in domains[next].iter_ones() {
        assignment[next] = v;
        if let Some(reduced) = forward_check(g, gbar_edges, next, v, &domains, assignment) {
            if backtrack(g, gbar_edges, next + 1, reduced, assignment) {
                return true;
            }
        }
    }
    assignment[next] = usize::MAX;
    false
}

fn forward_check(
    g: &LabeledGraph,
    gbar_edges: &[Edge],
    vb: usize,
    v: usize,
    domains: &[BitVec],
    assignment: &[usize],
) -> Option<Vec<BitVec>> {
    let n = g.num_vertices();
    let mut out = domains.to_vec();
    for &(a, s, b) in gbar_edges {
        if a != vb && b != vb {
            continue;
        }
        let other = if a == vb { b } else { a };
        if other <= vb {
            // Already assigned (or a self-loop): the edge must map exactly.
            let (ia, ib) = (assignment[a], assignment[b]);
            if !g.has_edge((ia, s, ib)) {
                return None;
            }
            continue;
        }
        let d = &mut out[other];
        for u in 0..n {
            if d[u] {
                let ok = if a == vb { g.has_edge((v, s, u)) } else { g.has_edge((u, s, v)) };
                if !ok {
                    d.set(u, false);
                }
            }
        }
        if d.not_any() {
            return None;
        }
    }
    Some(out)
}

/// Ordering verdict between two path-complete graphs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Comparison {
    /// `G ⪯ Ḡ`: `G` simulates `Ḡ` (map from Ḡ's vertices to G's).
    LessOrEqual { map: SimulationMap },
    /// `Ḡ ⪯ G`: `Ḡ` simulates `G` (map from G's vertices to Ḡ's).
    GreaterOrEqual { map: SimulationMap },
    Both { forward: SimulationMap, backward: SimulationMap },
    Incomparable,
}

pub fn compare(g: &LabeledGraph, gbar: &LabeledGraph) -> Result<Comparison> {
    for (which, graph) in [("G", g), ("Gbar", gbar)] {
        if let PathCompleteness::Rejected { word } = is_path_complete(graph) {
            return Err(Error::NonPathComplete { which: which.into(), word });
        }
    }
    let forward = find_simulation(g, gbar)?;
    let backward = find_simulation(gbar, g)?;
    Ok(match (forward, backward) {
        (Some(forward), Some(backward)) => Comparison::Both { forward, backward },
        (Some(map), None) => Comparison::LessOrEqual { map },
        (None, Some(map)) => Comparison::GreaterOrEqual { map },
        (None, None) => Comparison::Incomparable,
    })
}

/// Random graph on `count` vertices; each triple is an edge with probability `density`.
pub fn random_graph(rng: &mut impl Rng, alphabet: Alphabet, count: usize, density: f64) -> LabeledGraph {
    let mut edges = Vec::new();
    for v in 0..count {
        for s in alphabet.symbols() {
            for w in 0..count {
                if rng.gen_bool(density) {
                    edges.push((v, s, w));
                }
            }
        }
    }
    LabeledGraph::with_vertices(alphabet, count, edges).expect("random graph is well formed")
}
