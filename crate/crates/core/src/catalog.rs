//! Shipped graphs and case-study systems.
//!
//! The graphs are reconstructions of small pictorial examples; only the
//! properties asserted in the test suite (rejected words, simulation maps,
//! coefficient vectors) are relied on.

use crate::graph::LabeledGraph;
use crate::polynomial::RatPoly;
use crate::rational::{rat, ratio, Rat};
use crate::region::{Region, SafetySpec};
use crate::system::{Alphabet, ModeDynamics, SwitchedSystem, Word};

fn two() -> Alphabet {
    Alphabet::new(2).expect("nonzero")
}

/// Two-node path-complete graph: deterministic and complete over `{1, 2}`.
pub fn graph_a() -> LabeledGraph {
    LabeledGraph::with_vertices(two(), 2, [(0, 1, 0), (0, 2, 1), (1, 2, 1), (1, 1, 0)]).unwrap()
}

/// Two-node graph whose shortest rejected word is `(121)`.
pub fn graph_b() -> LabeledGraph {
    LabeledGraph::with_vertices(two(), 2, [(0, 1, 0), (0, 2, 1), (1, 2, 0), (1, 2, 1)]).unwrap()
}

/// Three-node graph simulated by [`graph_a`] through `(v1, v2, v1)`.
pub fn graph_a_lift() -> LabeledGraph {
    LabeledGraph::with_vertices(two(), 3, [(0, 1, 0), (0, 2, 1), (1, 1, 2), (1, 2, 1), (2, 1, 0), (2, 2, 1)]).unwrap()
}

/// Two-node path-complete graph used for the platoon and random-system studies.
pub fn graph_platoon() -> LabeledGraph {
    LabeledGraph::with_vertices(two(), 2, [(0, 1, 0), (0, 1, 1), (0, 2, 1), (1, 2, 0)]).unwrap()
}

/// [`graph_platoon`] without `(v2, 2, v1)`; rejects `(22)`.
pub fn graph_platoon_non_pc() -> LabeledGraph {
    graph_platoon().without_edge((1, 2, 0))
}

/// Three-node path-complete graph simulated by [`graph_platoon`] through `(v1, v2, v1)`.
pub fn graph_platoon_lift() -> LabeledGraph {
    LabeledGraph::with_vertices(two(), 3, [(0, 1, 0), (0, 2, 1), (1, 2, 0), (1, 2, 2), (2, 1, 1), (2, 1, 2)]).unwrap()
}

pub fn counterexample_word() -> Word {
    Word::new(vec![1, 2, 1])
}

fn x(i: usize) -> RatPoly {
    RatPoly::var(2, i)
}

fn c(v: Rat) -> RatPoly {
    RatPoly::constant(2, v)
}

/// `0.9·x1 − 0.02·x1²`
fn follower_decay() -> RatPoly {
    &x(0).scale(&ratio(9, 10)) - &x(0).pow(2).scale(&ratio(1, 50))
}

/// `0.8·x2 − 0.04·x2²`
fn leader_decay() -> RatPoly {
    &x(1).scale(&ratio(4, 5)) - &x(1).pow(2).scale(&ratio(1, 25))
}

/// Two-vehicle platoon: mode 1 with both communication links, mode 2 with
/// the follower's link lost.
pub fn platoon() -> SwitchedSystem {
    let lead = &c(rat(2)) + &leader_decay();
    let f1 = vec![&x(1).scale(&ratio(1, 100)) + &follower_decay(), lead.clone()];
    let f2 = vec![follower_decay(), lead];
    SwitchedSystem::new(2, vec![ModeDynamics::Poly(f1), ModeDynamics::Poly(f2)]).unwrap()
}

/// Platoon whose second mode also loses the leader's input.
pub fn platoon_modified() -> SwitchedSystem {
    let f1 = platoon().modes()[0].clone();
    let f2 = vec![follower_decay(), leader_decay()];
    SwitchedSystem::new(2, vec![f1, ModeDynamics::Poly(f2)]).unwrap()
}

/// `X = [0,10]²`, `X0 = {0 ≤ x1 ≤ 3, 1 ≤ x2 − x1 ≤ 2}`, and the unsafe set as
/// written, `{x2 − x1 − 0.2 ≥ 0}`. The loader flips it to `x2 − x1 ≤ 0.2`
/// because the written form contains the whole initial set.
pub fn platoon_spec() -> SafetySpec {
    let gap = &x(1) - &x(0);
    let state = Region::semialgebraic(
        vec![&x(0) * &(&c(rat(10)) - &x(0)), &x(1) * &(&c(rat(10)) - &x(1))],
        Some(vec![(rat(0), rat(10)), (rat(0), rat(10))]),
    )
    .unwrap();
    let lo1 = x(0);
    let hi1 = &c(rat(3)) - &x(0);
    let lo_gap = &gap - &c(rat(1));
    let hi_gap = &c(rat(2)) - &gap;
    let initial = Region::semialgebraic(
        vec![lo1.clone(), hi1.clone(), lo_gap.clone(), hi_gap.clone(), &lo1 * &hi1, &lo_gap * &hi_gap],
        Some(vec![(rat(0), rat(3)), (rat(1), rat(5))]),
    )
    .unwrap();
    let unsafe_set = Region::semialgebraic(vec![&gap - &c(ratio(1, 5))], None).unwrap();
    SafetySpec::new(state, initial, unsafe_set).with_auto_flip(2).expect("flipped platoon spec is disjoint")
}
