//! Counterexample construction for non-path-complete graphs.
//!
//! Given a graph and a word it rejects, builds a linear switched system that
//! is unsafe along that word, together with a diagonal quadratic family
//! `B_v(x) = Σ p_v[i]·x[i]² − 1` that satisfies every barrier condition on
//! the graph. Everything is checked in exact rational arithmetic.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_path_complete, Edge, LabeledGraph, PathCompleteness};
use crate::rational::{rat, Rat, RatMatrix};
use crate::region::SafetySpec;
use crate::system::{simulate, Alphabet, SwitchedSystem, Trajectory, Word};

/// Shift pattern `Â_σ`: `Â_σ[j+1, j] = 1` (0-based) iff `w[j] = σ`.
pub fn shift_pattern(w: &Word, symbol: usize) -> RatMatrix {
    let n = w.len() + 1;
    let mut a = RatMatrix::zeros(n, n);
    for (j, &s) in w.letters().iter().enumerate() {
        if s == symbol {
            a[(j + 1, j)] = rat(1);
        }
    }
    a
}

/// `A_σ = 2·Â_σ` on `ℝ^{k+1}`, with `X0 = {‖x‖² ≤ 4^{-k}}` and `Xu = {‖x‖² ≥ 1}`.
pub fn build_unsafe_system(w: &Word, alphabet: Alphabet) -> Result<(SwitchedSystem, SafetySpec)> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    w.check(alphabet)?;
    let modes = alphabet.symbols().map(|s| shift_pattern(w, s).scale(&rat(2))).collect();
    let system = SwitchedSystem::linear(modes)?;
    let spec = SafetySpec::balls(Rat::one() / four_pow(w.len()), rat(1))?;
    Ok((system, spec))
}

fn four_pow(k: usize) -> Rat {
    Rat::from_integer(num_bigint::BigInt::from(4u8).pow(k as u32))
}

/// Exact trajectory from `x0 = [2^{-k}, 0, …, 0]` along `w`; ends at `e_n`.
pub fn witness_violation(system: &SwitchedSystem, w: &Word) -> Result<Trajectory> {
    let n = system.dimension();
    let mut x0 = vec![Rat::zero(); n];
    x0[0] = Rat::one() / Rat::from_integer(num_bigint::BigInt::from(2u8).pow(w.len() as u32));
    let tr = simulate(system, &x0, w)?;
    let mut target = vec![Rat::zero(); n];
    target[n - 1] = Rat::one();
    if tr.final_state() != target.as_slice() {
        return Err(Error::Dimension("witness does not reach the last basis vector; system/word mismatch".into()));
    }
    Ok(tr)
}

/// Node `(v, i)` with both components 0-based.
pub type AuxNode = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxiliaryGraph {
    pub vertices: usize,
    pub dimension: usize,
    /// `((v, i), σ, (v', i'))` for `(v, σ, v') ∈ E` and `A_σ[i', i] ≠ 0`.
    pub edges: Vec<(AuxNode, usize, AuxNode)>,
}

impl AuxiliaryGraph {
    fn index(&self, (v, i): AuxNode) -> usize {
        v * self.dimension + i
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.vertices * self.dimension];
        for &(a, _, b) in &self.edges {
            succ[self.index(a)].push(self.index(b));
        }
        succ
    }

    /// Level of each node: 1 for sinks, otherwise one more than the largest
    /// successor level. Fails on a directed cycle.
    pub fn levels(&self) -> Result<Vec<Vec<u32>>> {
        let succ = self.successors();
        let total = succ.len();
        let mut level = vec![0u32; total];
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; total];
        for root in 0..total {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&child) = succ[node].get(*next) {
                    *next += 1;
                    match state[child] {
                        0 => {
                            state[child] = 1;
                            stack.push((child, 0));
                        }
                        1 => return Err(Error::CycleDetected(child / self.dimension + 1, child % self.dimension + 1)),
                        _ => {}
                    }
                } else {
                    level[node] = 1 + succ[node].iter().map(|&c| level[c]).max().unwrap_or(0);
                    state[node] = 2;
                    stack.pop();
                }
            }
        }
        Ok(level.chunks(self.dimension).map(<[u32]>::to_vec).collect())
    }

    /// Number of edges on the longest path.
    pub fn longest_path(&self) -> Result<usize> {
        Ok(self.levels()?.iter().flatten().copied().max().unwrap_or(1) as usize - 1)
    }
}

pub fn build_auxiliary_graph(g: &LabeledGraph, system: &SwitchedSystem) -> Result<AuxiliaryGraph> {
    if g.alphabet() != system.alphabet() {
        return Err(Error::AlphabetMismatch(g.alphabet().size(), system.alphabet().size()));
    }
    let n = system.dimension();
    let mut edges = Vec::new();
    for (v, s, w) in g.edges() {
        let a = system.modes()[s - 1].as_linear().ok_or_else(|| Error::UnsupportedSpec("linear modes required".into()))?;
        for i in 0..n {
            for ip in 0..n {
                if !a[(ip, i)].is_zero() {
                    edges.push(((v, i), s, (w, ip)));
                }
            }
        }
    }
    Ok(AuxiliaryGraph { vertices: g.num_vertices(), dimension: n, edges })
}

/// `p_v[i] = 4^{level(v, i)}`.
pub fn assign_coefficients(aux: &AuxiliaryGraph, k: usize) -> Result<Vec<Vec<Rat>>> {
    let levels = aux.levels()?;
    let longest = levels.iter().flatten().copied().max().unwrap_or(1) as usize - 1;
    if longest + 1 > k.max(1) {
        return Err(Error::PathTooLong(longest, k.saturating_sub(1)));
    }
    Ok(levels.iter().map(|row| row.iter().map(|&a| four_pow(a as usize)).collect()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub edge: Edge,
    pub pass: bool,
    /// First coordinate `j` with `(A_σ∘A_σ)ᵀ p_{v'} [j] > p_v[j]`.
    pub violating_component: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `(v, i)` where `1 < p_v[i] ≤ 4^k` fails.
    pub bound_violations: Vec<(usize, usize)>,
    pub edges: Vec<EdgeCheck>,
    pub pass: bool,
}

/// Exact check of `1 < p_v[i] ≤ 4^k` and, per edge, `4·Â_σᵀ p_{v'} ≤ p_v`.
/// Written as `(A_σ∘A_σ)ᵀ p_{v'} ≤ p_v`, which is the same vector for
/// `A_σ = 2Â_σ` and is equivalent to the decrease condition whenever every
/// row and column of `A_σ` has at most one nonzero.
pub fn check_admissibility(
    g: &LabeledGraph,
    coeffs: &[Vec<Rat>],
    system: &SwitchedSystem,
    k: usize,
) -> Result<AdmissibilityReport> {
    let n = system.dimension();
    if coeffs.len() != g.num_vertices() || coeffs.iter().any(|p| p.len() != n) {
        return Err(Error::Dimension(format!("expected {} coefficient vectors of length {n}", g.num_vertices())));
    }
    let upper = four_pow(k);
    let one = Rat::one();
    let bound_violations: Vec<(usize, usize)> = coeffs
        .iter()
        .enumerate()
        .flat_map(|(v, p)| p.iter().enumerate().filter(|(_, c)| !(**c > one && **c <= upper)).map(move |(i, _)| (v, i)))
        .collect();
    let mut edges = Vec::new();
    for e @ (v, s, w) in g.edges() {
        let a = system.modes()[s - 1].as_linear().ok_or_else(|| Error::UnsupportedSpec("linear modes required".into()))?;
        let violating_component = (0..n).find(|&j| {
            let lhs = (0..n).fold(Rat::zero(), |acc, i| acc + &a[(i, j)] * &a[(i, j)] * &coeffs[w][i]);
            lhs > coeffs[v][j]
        });
        edges.push(EdgeCheck { edge: e, pass: violating_component.is_none(), violating_component });
    }
    let pass = bound_violations.is_empty() && edges.iter().all(|e| e.pass);
    Ok(AdmissibilityReport { bound_violations, edges, pass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NecessityInstance {
    pub graph: LabeledGraph,
    pub word: Word,
    pub system: SwitchedSystem,
    pub spec: SafetySpec,
    pub aux: AuxiliaryGraph,
    pub levels: Vec<Vec<u32>>,
    pub coeffs: Vec<Vec<Rat>>,
    pub witness: Trajectory,
    pub report: AdmissibilityReport,
}

impl NecessityInstance {
    /// `P_v = diag(p_v)` so that `B_v(x) = xᵀP_v x − 1`.
    pub fn quadratic_family(&self) -> Vec<RatMatrix> {
        self.coeffs
            .iter()
            .map(|p| {
                let mut m = RatMatrix::zeros(p.len(), p.len());
                for (i, c) in p.iter().enumerate() {
                    m[(i, i)] = c.clone();
                }
                m
            })
            .collect()
    }

    /// Both halves of the counterexample hold: the witness ends in `Xu` and
    /// the family is admissible.
    pub fn verified(&self) -> bool {
        self.report.pass && self.spec.unsafe_set.contains(self.witness.final_state()).unwrap_or(false)
            && self.spec.initial.contains(self.witness.initial()).unwrap_or(false)
    }
}

pub fn run_necessity_pipeline(g: &LabeledGraph) -> Result<NecessityInstance> {
    let word = match is_path_complete(g) {
        PathCompleteness::Complete => return Err(Error::GraphIsPathComplete),
        PathCompleteness::Rejected { word } => word,
    };
    let k = word.len();
    let (system, spec) = build_unsafe_system(&word, g.alphabet())?;
    let witness = witness_violation(&system, &word)?;
    let aux = build_auxiliary_graph(g, &system)?;
    let levels = aux.levels()?;
    let coeffs = assign_coefficients(&aux, k)?;
    let report = check_admissibility(g, &coeffs, &system, k)?;
    Ok(NecessityInstance { graph: g.clone(), word, system, spec, aux, levels, coeffs, witness, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rational::ratio;
    use crate::region::Region;

    #[test]
    fn unsafe_system_for_single_letter() {
        let w = Word::new(vec![1]);
        let (sys, spec) = build_unsafe_system(&w, Alphabet::new(1).unwrap()).unwrap();
        assert_eq!(sys.dimension(), 2);
        assert_eq!(shift_pattern(&w, 1), RatMatrix::from_rows(vec![vec![rat(0), rat(0)], vec![rat(1), rat(0)]]).unwrap());
        assert_eq!(spec.initial, Region::Ball { r2: ratio(1, 4) });
        let tr = witness_violation(&sys, &w).unwrap();
        assert_eq!(tr.initial(), &[ratio(1, 2), rat(0)]);
        assert_eq!(tr.final_state(), &[rat(0), rat(1)]);
    }

    #[test]
    fn empty_word_is_rejected() {
        assert!(matches!(build_unsafe_system(&Word::empty(), Alphabet::new(2).unwrap()), Err(Error::EmptyWord)));
    }

    #[test]
    fn edgeless_graph_levels_are_one() {
        let g = LabeledGraph::with_vertices(Alphabet::new(1).unwrap(), 1, []).unwrap();
        let inst = run_necessity_pipeline(&g).unwrap();
        assert!(inst.aux.edges.is_empty());
        assert_eq!(inst.levels, vec![vec![1, 1]]);
        assert!(inst.verified());
    }

    #[test]
    fn uniform_coefficients_fail_on_shift_edge() {
        let g = catalog::graph_b();
        let (sys, _) = build_unsafe_system(&catalog::counterexample_word(), g.alphabet()).unwrap();
        let coeffs = vec![vec![rat(4); 4]; 2];
        let report = check_admissibility(&g, &coeffs, &sys, 3).unwrap();
        assert!(!report.pass);
        assert!(report.edges.iter().any(|e| e.violating_component.is_some()));
    }

    #[test]
    fn path_complete_input_is_an_error() {
        assert!(matches!(run_necessity_pipeline(&catalog::graph_a()), Err(Error::GraphIsPathComplete)));
    }
}
