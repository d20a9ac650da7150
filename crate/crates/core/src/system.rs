//! Switched systems, switching words and trajectories.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{FloatPoly, RatPoly};
use crate::rational::{Rat, RatMatrix};

/// Mode alphabet `{1, …, m}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidAlphabet(m));
        }
        Ok(Self(m))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn symbols(self) -> impl Iterator<Item = usize> {
        1..=self.0
    }

    pub fn check(self, symbol: usize) -> Result<()> {
        if symbol == 0 || symbol > self.0 {
            return Err(Error::SymbolOutOfRange { symbol, size: self.0 });
        }
        Ok(())
    }
}

impl TryFrom<usize> for Alphabet {
    type Error = Error;
    fn try_from(m: usize) -> Result<Self> {
        Self::new(m)
    }
}

impl From<Alphabet> for usize {
    fn from(a: Alphabet) -> usize {
        a.0
    }
}

/// Finite switching sequence; letters are 1-based mode indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Self(letters)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, s: usize) {
        self.0.push(s);
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn check(&self, alphabet: Alphabet) -> Result<()> {
        self.0.iter().try_for_each(|&s| alphabet.check(s))
    }

    /// Parses `"121"`, `"1,2,1"` or `"(121)"`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let letters: Result<Vec<usize>> = if t.contains(',') || t.contains(' ') {
            t.split([',', ' '])
                .filter(|p| !p.is_empty())
                .map(|p| p.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad word {s:?}"))))
                .collect()
        } else {
            t.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| Error::Parse(format!("bad word {s:?}"))))
                .collect()
        };
        Ok(Self(letters?))
    }

    /// Every word over `alphabet` of exactly `len` letters, in lexicographic order.
    pub fn all_of_length(alphabet: Alphabet, len: usize) -> impl Iterator<Item = Word> {
        let m = alphabet.size();
        let total = (m as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
        (0..total).map(move |mut idx| {
            let mut letters = vec![1; len];
            for slot in letters.iter_mut().rev() {
                *slot = (idx % m as u128) as usize + 1;
                idx /= m as u128;
            }
            Word(letters)
        })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.0.iter().any(|&s| s > 9) { "," } else { "" };
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(sep))
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModeDynamics {
    Linear(RatMatrix),
    Poly(Vec<RatPoly>),
}

impl ModeDynamics {
    pub fn apply(&self, x: &[Rat]) -> Result<Vec<Rat>> {
        match self {
            ModeDynamics::Linear(a) => a.mul_vec(x),
            ModeDynamics::Poly(f) => f.iter().map(|p| p.eval(x)).collect(),
        }
    }

    pub fn as_linear(&self) -> Option<&RatMatrix> {
        match self {
            ModeDynamics::Linear(a) => Some(a),
            ModeDynamics::Poly(_) => None,
        }
    }

    /// Polynomial view of the mode (linear maps become degree-1 polynomials).
    pub fn to_polys(&self, n: usize) -> Vec<RatPoly> {
        match self {
            ModeDynamics::Poly(f) => f.clone(),
            ModeDynamics::Linear(a) => (0..n)
                .map(|i| {
                    let mut p = RatPoly::zero(n);
                    for j in 0..n {
                        let mut e = vec![0; n];
                        e[j] = 1;
                        p.add_term(e, a[(i, j)].clone());
                    }
                    p
                })
                .collect(),
        }
    }
}

/// `x(t+1) = f_{σ(t)}(x(t))` over a shared state dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchedSystem {
    dimension: usize,
    alphabet: Alphabet,
    modes: Vec<ModeDynamics>,
}

impl SwitchedSystem {
    pub fn new(dimension: usize, modes: Vec<ModeDynamics>) -> Result<Self> {
        let alphabet = Alphabet::new(modes.len())?;
        if dimension == 0 {
            return Err(Error::Dimension("state dimension must be positive".into()));
        }
        for (idx, mode) in modes.iter().enumerate() {
            let ok = match mode {
                ModeDynamics::Linear(a) => a.rows() == dimension && a.cols() == dimension,
                ModeDynamics::Poly(f) => f.len() == dimension && f.iter().all(|p| p.nvars() == dimension),
            };
            if !ok {
                return Err(Error::Dimension(format!("mode {} does not match dimension {dimension}", idx + 1)));
            }
        }
        Ok(Self { dimension, alphabet, modes })
    }

    pub fn linear(matrices: Vec<RatMatrix>) -> Result<Self> {
        let n = matrices.first().map_or(0, RatMatrix::rows);
        Self::new(n, matrices.into_iter().map(ModeDynamics::Linear).collect())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn modes(&self) -> &[ModeDynamics] {
        &self.modes
    }

    /// Mode for a 1-based symbol.
    pub fn mode(&self, symbol: usize) -> Result<&ModeDynamics> {
        self.alphabet.check(symbol)?;
        Ok(&self.modes[symbol - 1])
    }

    pub fn is_linear(&self) -> bool {
        self.modes.iter().all(|m| matches!(m, ModeDynamics::Linear(_)))
    }

    /// Float copies of the mode matrices, if every mode is linear.
    pub fn float_matrices(&self) -> Option<Vec<DMatrix<f64>>> {
        self.modes.iter().map(|m| m.as_linear().map(RatMatrix::to_nalgebra)).collect()
    }

    pub fn float_polys(&self) -> Vec<Vec<FloatPoly>> {
        self.modes
            .iter()
            .map(|m| m.to_polys(self.dimension).iter().map(RatPoly::to_float).collect())
            .collect()
    }

    pub fn step(&self, symbol: usize, x: &[Rat]) -> Result<Vec<Rat>> {
        self.check_state(x.len())?;
        self.mode(symbol)?.apply(x)
    }

    fn check_state(&self, len: usize) -> Result<()> {
        if len != self.dimension {
            return Err(Error::Dimension(format!("state of length {len} for a {}-dimensional system", self.dimension)));
        }
        Ok(())
    }
}

/// Float evaluation of a mode, used by sampling-based searches.
pub fn step_f64(polys: &[FloatPoly], x: &[f64]) -> Vec<f64> {
    polys.iter().map(|p| p.eval(x).unwrap_or(f64::NAN)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<Rat>>,
    pub word: Word,
}

impl Trajectory {
    pub fn initial(&self) -> &[Rat] {
        &self.states[0]
    }

    pub fn final_state(&self) -> &[Rat] {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// Exact trajectory of `sys` from `x0` under `word`.
pub fn simulate(sys: &SwitchedSystem, x0: &[Rat], word: &Word) -> Result<Trajectory> {
    sys.check_state(x0.len())?;
    word.check(sys.alphabet())?;
    let mut states = Vec::with_capacity(word.len() + 1);
    states.push(x0.to_vec());
    for &s in word.letters() {
        let next = sys.modes[s - 1].apply(states.last().unwrap())?;
        states.push(next);
    }
    Ok(Trajectory { states, word: word.clone() })
}

/// Floating-point trajectory; used where exact growth of digits is impractical.
pub fn simulate_f64(sys: &SwitchedSystem, x0: &[f64], word: &Word) -> Result<Vec<Vec<f64>>> {
    sys.check_state(x0.len())?;
    word.check(sys.alphabet())?;
    let polys = sys.float_polys();
    let mut states = vec![x0.to_vec()];
    for &s in word.letters() {
        let next = step_f64(&polys[s - 1], states.last().unwrap());
        states.push(next);
    }
    Ok(states)
}
