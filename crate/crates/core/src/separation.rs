//! Separating gadget: for a graph `G`, a linear system and diagonal quadratic
//! family whose decrease condition holds on exactly the edges of `G`.
//!
//! Every non-edge `ẽ = (ṽ, σ, ṽ')` owns a 2×2 block of the state. Mode `σ`
//! shifts the first coordinate of each block labeled `σ` into the second;
//! the weights `q_v` are chosen so that the shift is non-increasing across
//! every edge and increasing by exactly `1/6` across `ẽ`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, LabeledGraph};
use crate::rational::{rat, ratio, Rat, RatMatrix};
use crate::region::SafetySpec;
use crate::system::SwitchedSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationInstance {
    pub graph: LabeledGraph,
    /// Non-edges in lexicographic order; block `t` covers coordinates `2t, 2t+1`.
    pub tilde_edges: Vec<Edge>,
    pub system: SwitchedSystem,
    pub spec: SafetySpec,
    /// `q_v` per vertex; `B_v(x) = Σ q_v[i]·x[i]² − 1`.
    pub qcoeffs: Vec<Vec<Rat>>,
}

/// Block weights of vertex `v` for non-edge `(ṽ, σ, ṽ')`.
pub fn block_weights(v: usize, (src, _, dst): Edge) -> (Rat, Rat) {
    let third = ratio(1, 3);
    let half = ratio(1, 2);
    match (v == src, v == dst) {
        (true, true) => (third, half),
        (true, false) => (third.clone(), third),
        (false, true) => (half.clone(), half),
        (false, false) => (half, third),
    }
}

pub fn build_separating_instance(g: &LabeledGraph) -> Result<SeparationInstance> {
    let tilde_edges = g.non_edges();
    if tilde_edges.is_empty() {
        return Err(Error::EmptyTildeSet);
    }
    let n = 2 * tilde_edges.len();
    let modes = g
        .alphabet()
        .symbols()
        .map(|s| {
            let mut a = RatMatrix::zeros(n, n);
            for (t, &(_, label, _)) in tilde_edges.iter().enumerate() {
                if label == s {
                    a[(2 * t + 1, 2 * t)] = rat(1);
                }
            }
            a
        })
        .collect();
    let system = SwitchedSystem::linear(modes)?;
    let qcoeffs = (0..g.num_vertices())
        .map(|v| {
            tilde_edges
                .iter()
                .flat_map(|&e| {
                    let (a, b) = block_weights(v, e);
                    [a, b]
                })
                .collect()
        })
        .collect();
    let spec = SafetySpec::balls(rat(1), rat(3))?;
    Ok(SeparationInstance { graph: g.clone(), tilde_edges, system, spec, qcoeffs })
}

/// `Σ q[i]·x[i]² − 1`.
pub fn diagonal_barrier(q: &[Rat], x: &[Rat]) -> Rat {
    q.iter().zip(x).fold(-Rat::one(), |acc, (c, xi)| acc + c * xi * xi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCheck {
    pub edge: Edge,
    /// Index into `tilde_edges` of the block being checked.
    pub block: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonEdgeWitness {
    pub block: usize,
    pub edge: Edge,
    /// The witness is the basis vector `e_{coordinate}`.
    pub coordinate: usize,
    /// `B_{ṽ'}(A_σ x) − B_ṽ(x)`.
    pub gap: Rat,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub edge_checks: Vec<BlockCheck>,
    pub witnesses: Vec<NonEdgeWitness>,
    /// `1/3 ≤ q_v[i] ≤ 1` everywhere.
    pub weights_in_range: bool,
    pub pass: bool,
}

/// Exact verification. Edges: `q_{v'}[2t+1] ≤ q_v[2t]` on every block `t`
/// sharing the edge's label. Non-edges: the basis vector of the block's
/// first coordinate increases the barrier by exactly `1/6`.
pub fn verify_separation(inst: &SeparationInstance) -> SeparationReport {
    let q = &inst.qcoeffs;
    let mut edge_checks = Vec::new();
    for e @ (v, s, w) in inst.graph.edges() {
        for (t, &(_, label, _)) in inst.tilde_edges.iter().enumerate() {
            if label == s {
                edge_checks.push(BlockCheck { edge: e, block: t, pass: q[w][2 * t + 1] <= q[v][2 * t] });
            }
        }
    }
    let n = inst.system.dimension();
    let sixth = ratio(1, 6);
    let witnesses = inst
        .tilde_edges
        .iter()
        .enumerate()
        .map(|(t, &e @ (v, s, w))| {
            let mut x = vec![Rat::zero(); n];
            x[2 * t] = Rat::one();
            let next = inst.system.modes()[s - 1].apply(&x).expect("dimensions agree");
            let gap = diagonal_barrier(&q[w], &next) - diagonal_barrier(&q[v], &x);
            let pass = gap == sixth;
            NonEdgeWitness { block: t, edge: e, coordinate: 2 * t, gap, pass }
        })
        .collect::<Vec<_>>();
    let (lo, hi) = (ratio(1, 3), Rat::one());
    let weights_in_range = q.iter().flatten().all(|c| *c >= lo && *c <= hi);
    let pass = weights_in_range && edge_checks.iter().all(|c| c.pass) && witnesses.iter().all(|w| w.pass);
    SeparationReport { edge_checks, witnesses, weights_in_range, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::system::Alphabet;

    #[test]
    fn weight_cases() {
        assert_eq!(block_weights(0, (0, 1, 0)), (ratio(1, 3), ratio(1, 2)));
        // v = ṽ' ≠ v' = ṽ
        let e = (1, 1, 0);
        assert_eq!(block_weights(0, e), (ratio(1, 2), ratio(1, 2)));
        assert_eq!(block_weights(1, e), (ratio(1, 3), ratio(1, 3)));
        assert_eq!(block_weights(2, (0, 1, 1)), (ratio(1, 2), ratio(1, 3)));
    }

    #[test]
    fn single_vertex_no_edges() {
        let g = LabeledGraph::with_vertices(Alphabet::new(1).unwrap(), 1, []).unwrap();
        let inst = build_separating_instance(&g).unwrap();
        assert_eq!(inst.qcoeffs, vec![vec![ratio(1, 3), ratio(1, 2)]]);
        let report = verify_separation(&inst);
        assert!(report.pass);
        assert_eq!(report.witnesses[0].gap, ratio(1, 2) - ratio(1, 3));
    }

    #[test]
    fn complete_graph_is_vacuous() {
        let g = LabeledGraph::complete(Alphabet::new(2).unwrap(), 2);
        assert!(matches!(build_separating_instance(&g), Err(Error::EmptyTildeSet)));
    }

    #[test]
    fn shipped_graph_separates() {
        let report = verify_separation(&build_separating_instance(&catalog::graph_platoon()).unwrap());
        assert!(report.pass);
        assert!(report.witnesses.iter().all(|w| w.gap == ratio(1, 6)));
    }
}
