//! Safety oracles: bounded-horizon unsafety search and the random stable
//! system generator used by the comparison experiment.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::FloatPoly;
use crate::rational::{rat_from_f64, to_f64, Rat, RatMatrix};
use crate::region::{grid_points, SafetySpec};
use crate::system::{step_f64, Alphabet, SwitchedSystem, Word};

/// Default cap on the number of word expansions.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Clone, Debug)]
pub struct BruteForceOptions {
    pub budget: u128,
    /// Grid points per axis when the initial set has to be sampled.
    pub grid: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, grid: 11 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnsafeWitness {
    pub word: Word,
    pub x0: Vec<f64>,
    /// Time step at which the unsafe set is reached (`word.len()`).
    pub t: usize,
    pub final_state: Vec<f64>,
    /// True when the verdict came from the exact singular-value test.
    pub exact: bool,
}

/// Searches all words up to `horizon` for a trajectory from `X0` that
/// reaches `Xu`. Returns the shortest witness, lexicographically smallest
/// among the shortest.
///
/// Linear modes with a ball / ball-complement spec are decided exactly:
/// `A_w` is unsafe iff `r0 · σ_max(A_w)² ≥ ru`, tested as "`(ru/r0)·I − A_wᵀA_w`
/// is not positive definite" in rational arithmetic. Everything else is
/// sampled on a grid over the initial set's bounding box; such witnesses are
/// genuine but the search is incomplete.
pub fn brute_force_unsafe(
    sys: &SwitchedSystem,
    spec: &SafetySpec,
    horizon: usize,
    opts: &BruteForceOptions,
) -> Result<Option<UnsafeWitness>> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let m = sys.alphabet().size() as u128;
    let needed = (1..=horizon as u32).try_fold(0u128, |acc, l| m.checked_pow(l).and_then(|p| acc.checked_add(p)));
    let needed = needed.unwrap_or(u128::MAX);
    if needed > opts.budget {
        return Err(Error::BudgetExceeded { needed, budget: opts.budget });
    }
    let n = sys.dimension();
    spec.initial.check_dimension(n)?;
    spec.unsafe_set.check_dimension(n)?;
    match (sys.is_linear(), spec.ball_radii()) {
        (true, Some((r0, ru))) => Ok(exact_linear_search(sys, r0, ru, horizon)),
        _ => sampled_search(sys, spec, horizon, opts.grid),
    }
}

fn word_product(sys: &SwitchedSystem, word: &Word) -> RatMatrix {
    let n = sys.dimension();
    word.letters().iter().fold(RatMatrix::identity(n), |acc, &s| {
        let a = sys.modes()[s - 1].as_linear().expect("linear mode");
        a.mul(&acc).expect("square modes")
    })
}

fn exact_linear_search(sys: &SwitchedSystem, r0: &Rat, ru: &Rat, horizon: usize) -> Option<UnsafeWitness> {
    let n = sys.dimension();
    let ratio = ru / r0;
    for len in 1..=horizon {
        let words: Vec<Word> = Word::all_of_length(sys.alphabet(), len).collect();
        let hit = words.par_iter().find_first(|w| {
            let a = word_product(sys, w);
            let gram = a.transpose().mul(&a).expect("square");
            let shifted = RatMatrix::identity(n).scale(&ratio);
            let mut diff = shifted.clone();
            for i in 0..n {
                for j in 0..n {
                    diff[(i, j)] = &shifted[(i, j)] - &gram[(i, j)];
                }
            }
            !diff.is_positive_definite()
        });
        if let Some(word) = hit {
            let a = word_product(sys, word).to_nalgebra();
            let x0 = top_right_singular_vector(&a).map(|v| v * to_f64(r0).sqrt());
            let final_state = &a * &x0;
            return Some(UnsafeWitness {
                word: word.clone(),
                x0: x0.iter().copied().collect(),
                t: len,
                final_state: final_state.iter().copied().collect(),
                exact: true,
            });
        }
    }
    None
}

fn top_right_singular_vector(a: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &s)| if s > best.1 { (i, s) } else { best });
    let mut v: nalgebra::DVector<f64> = v_t.row(idx).transpose();
    // Sign convention: largest-magnitude entry positive.
    let (imax, _) = v.iter().enumerate().fold((0, 0.0), |b, (i, &x)| if x.abs() > b.1 { (i, x.abs()) } else { b });
    if v[imax] < 0.0 {
        v = -v;
    }
    v
}

fn sampled_search(sys: &SwitchedSystem, spec: &SafetySpec, horizon: usize, grid: usize) -> Result<Option<UnsafeWitness>> {
    let n = sys.dimension();
    let bounds = spec
        .initial
        .bounding_box(n)
        .or_else(|| spec.state.bounding_box(n))
        .ok_or_else(|| Error::UnsupportedSpec("sampling needs a bounded initial set".into()))?;
    let points: Vec<Vec<f64>> = grid_points(&bounds, grid)
        .into_iter()
        .filter(|x| spec.initial.contains_f64(x) && spec.state.contains_f64(x))
        .collect();
    let polys = sys.float_polys();
    let m = sys.alphabet().size();
    for len in 1..=horizon {
        let mut word = Vec::with_capacity(len);
        if let Some((w, idx, final_state)) = depth_search(&polys, spec, m, len, &points, &mut word) {
            return Ok(Some(UnsafeWitness { word: w, x0: points[idx].clone(), t: len, final_state, exact: false }));
        }
    }
    Ok(None)
}

/// Depth-first search over words of exactly `len` letters in lexicographic
/// order, carrying the states of every sample point. Sample order is kept,
/// so a hit's index points back into the initial grid.
fn depth_search(
    polys: &[Vec<FloatPoly>],
    spec: &SafetySpec,
    m: usize,
    len: usize,
    states: &[Vec<f64>],
    word: &mut Vec<usize>,
) -> Option<(Word, usize, Vec<f64>)> {
    for s in 1..=m {
        word.push(s);
        let next: Vec<Vec<f64>> = states.iter().map(|x| step_f64(&polys[s - 1], x)).collect();
        let hit = if word.len() == len {
            next.iter()
                .position(|x| spec.unsafe_set.contains_f64(x))
                .map(|i| (Word::new(word.clone()), i, next[i].clone()))
        } else {
            depth_search(polys, spec, m, len, &next, word)
        };
        word.pop();
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// Spectral radius of a real square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random mode matrices with entries uniform on `[-1, 1]`, each divided by
/// 1.05 until its spectral radius is below one.
pub fn random_stable_system(n: usize, alphabet: Alphabet, seed: u64) -> Result<SwitchedSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_stable_system_with(n, alphabet, &mut rng)
}

pub fn random_stable_system_with(n: usize, alphabet: Alphabet, rng: &mut impl Rng) -> Result<SwitchedSystem> {
    if n == 0 {
        return Err(Error::Dimension("state dimension must be positive".into()));
    }
    let mut modes = Vec::with_capacity(alphabet.size());
    for _ in alphabet.symbols() {
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
        while spectral_radius(&a) >= 1.0 {
            a /= 1.05;
        }
        let rows: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..n).map(|j| rat_from_f64(a[(i, j)])).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        modes.push(RatMatrix::from_rows(rows)?);
    }
    SwitchedSystem::linear(modes)
}
