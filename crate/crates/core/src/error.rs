use thiserror::Error;

use crate::system::Word;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("symbol {symbol} outside alphabet 1..={size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("invalid alphabet size {0}")]
    InvalidAlphabet(usize),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("initial and unsafe sets intersect: {0}")]
    OverlappingSpec(String),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("search budget exceeded: {needed} expansions > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("graph `{which}` is not path-complete (rejects {word})")]
    NonPathComplete { which: String, word: Word },
    #[error("graph is path-complete; no rejected word exists")]
    GraphIsPathComplete,
    #[error("word must be non-empty")]
    EmptyWord,
    #[error("auxiliary graph has a cycle through ({0}, {1})")]
    CycleDetected(usize, usize),
    #[error("auxiliary graph path of {0} edges exceeds bound {1}")]
    PathTooLong(usize, usize),
    #[error("graph has no non-edges; the separation gadget is vacuous")]
    EmptyTildeSet,
    #[error("not a simulation: {0}")]
    UnverifiedMap(String),
    #[error("unsupported specification: {0}")]
    UnsupportedSpec(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("malformed conic problem: {0}")]
    MalformedProblem(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown report format `{0}`")]
    UnknownFormat(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, Error>;
