//! JSON file formats. Every artifact written carries `"schema_version": 1`.
//!
//! Exact quantities (matrix entries, polynomial coefficients, radii) are
//! decimal strings parsed as rationals; plain JSON numbers are accepted too.
//! Solver-produced floats are written with round-trip precision.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::polynomial::{Exponent, FloatPoly, RatPoly};
use crate::rational::{format_rat, parse_rat, Rat, RatMatrix};
use crate::region::{Region, SafetySpec};
use crate::synthesis::{Certificate, Condition, GramBlock, QuadraticCertificate, SosCertificate, SosIdentity};
use crate::safety::UnsafeWitness;
use crate::system::{Alphabet, ModeDynamics, SwitchedSystem, Trajectory};

pub const SCHEMA_VERSION: u32 = 1;

/// A number written either as a JSON number or as a string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumLit {
    Int(i64),
    Float(f64),
    Str(String),
}

impl NumLit {
    pub fn to_rat(&self) -> Result<Rat> {
        match self {
            NumLit::Int(i) => Ok(Rat::from_integer((*i).into())),
            // Shortest round-trip text keeps `0.9` as 9/10.
            NumLit::Float(f) => parse_rat(&format!("{f:?}")),
            NumLit::Str(s) => parse_rat(s),
        }
    }

    pub fn to_f64(&self) -> Result<f64> {
        match self {
            NumLit::Int(i) => Ok(*i as f64),
            NumLit::Float(f) => Ok(*f),
            NumLit::Str(s) => s.trim().parse::<f64>().or_else(|_| parse_rat(s).map(|r| crate::rational::to_f64(&r))),
        }
    }
}

fn float_str(x: f64) -> String {
    format!("{x:?}")
}

fn check_version(v: &Option<u32>) -> Result<()> {
    match v {
        Some(SCHEMA_VERSION) | None => Ok(()),
        Some(other) => Err(Error::Parse(format!("unsupported schema_version {other}"))),
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| file_error(path, source))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn file_error(path: &Path, source: std::io::Error) -> Error {
    Error::File { path: path.display().to_string(), source }
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|source| file_error(path, source))?;
    Ok(())
}

// ---- polynomials ---------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u32>,
    pub coef: NumLit,
}

pub fn poly_from_json(n: usize, terms: &[TermJson]) -> Result<RatPoly> {
    RatPoly::from_terms(n, terms.iter().map(|t| Ok((t.exp.clone(), t.coef.to_rat()?))).collect::<Result<Vec<_>>>()?)
}

pub fn rat_poly_to_json(p: &RatPoly) -> Value {
    Value::Array(p.terms().map(|(e, c)| json!({"exp": e, "coef": format_rat(c)})).collect())
}

pub fn float_poly_to_json(p: &FloatPoly) -> Value {
    Value::Array(p.terms().map(|(e, c)| json!({"exp": e, "coef": float_str(*c)})).collect())
}

pub fn float_poly_from_json(n: usize, v: &Value) -> Result<FloatPoly> {
    let terms: Vec<TermJson> = serde_json::from_value(v.clone())?;
    FloatPoly::from_terms(n, terms.iter().map(|t| Ok((t.exp.clone(), t.coef.to_f64()?))).collect::<Result<Vec<_>>>()?)
}

// ---- systems -------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModeJson {
    Linear {
        #[serde(rename = "A")]
        a: Vec<Vec<NumLit>>,
    },
    Poly {
        f: Vec<Vec<TermJson>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemJson {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub dimension: usize,
    pub alphabet: usize,
    pub modes: BTreeMap<String, ModeJson>,
}

pub fn system_from_json(s: &SystemJson) -> Result<SwitchedSystem> {
    check_version(&s.schema_version)?;
    let alphabet = Alphabet::new(s.alphabet)?;
    let mut modes = Vec::with_capacity(s.alphabet);
    for sym in alphabet.symbols() {
        let mode = s.modes.get(&sym.to_string()).ok_or_else(|| Error::Parse(format!("mode {sym} missing")))?;
        modes.push(match mode {
            ModeJson::Linear { a } => ModeDynamics::Linear(RatMatrix::from_rows(
                a.iter().map(|row| row.iter().map(NumLit::to_rat).collect()).collect::<Result<_>>()?,
            )?),
            ModeJson::Poly { f } => {
                ModeDynamics::Poly(f.iter().map(|comp| poly_from_json(s.dimension, comp)).collect::<Result<_>>()?)
            }
        });
    }
    if s.modes.len() != s.alphabet {
        return Err(Error::Parse(format!("{} modes given for alphabet of size {}", s.modes.len(), s.alphabet)));
    }
    SwitchedSystem::new(s.dimension, modes)
}

pub fn system_to_json(sys: &SwitchedSystem) -> Value {
    let n = sys.dimension();
    let modes: serde_json::Map<String, Value> = sys
        .modes()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let v = match m {
                ModeDynamics::Linear(a) => json!({
                    "type": "linear",
                    "A": a.to_rows().iter().map(|r| r.iter().map(format_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
                }),
                ModeDynamics::Poly(_) => json!({
                    "type": "poly",
                    "f": m.to_polys(n).iter().map(rat_poly_to_json).collect::<Vec<_>>(),
                }),
            };
            ((k + 1).to_string(), v)
        })
        .collect();
    json!({"schema_version": SCHEMA_VERSION, "dimension": n, "alphabet": sys.alphabet().size(), "modes": modes})
}

pub fn load_system(path: &Path) -> Result<SwitchedSystem> {
    system_from_json(&read_json(path)?)
}

// ---- regions and specs ---------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegionJson {
    Ball { r2: NumLit },
    BallComplement { r2: NumLit },
    #[serde(alias = "semi_algebraic")]
    Semialgebraic {
        ineqs: Vec<Vec<TermJson>>,
        #[serde(default)]
        bounds: Option<Vec<(NumLit, NumLit)>>,
    },
    #[serde(alias = "full_space")]
    Full,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpecJson {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(rename = "X", default)]
    pub state: Option<RegionJson>,
    #[serde(rename = "X0")]
    pub initial: RegionJson,
    #[serde(rename = "Xu")]
    pub unsafe_set: RegionJson,
}

pub fn region_from_json(r: &RegionJson, n: usize) -> Result<Region> {
    match r {
        RegionJson::Ball { r2 } => Region::ball(r2.to_rat()?),
        RegionJson::BallComplement { r2 } => Region::ball_complement(r2.to_rat()?),
        RegionJson::Semialgebraic { ineqs, bounds } => {
            let ineqs = ineqs.iter().map(|g| poly_from_json(n, g)).collect::<Result<_>>()?;
            let bounds = bounds
                .as_ref()
                .map(|b| b.iter().map(|(lo, hi)| Ok((lo.to_rat()?, hi.to_rat()?))).collect::<Result<Vec<_>>>())
                .transpose()?;
            Region::semialgebraic(ineqs, bounds)
        }
        RegionJson::Full => Ok(Region::FullSpace),
    }
}

pub fn region_to_json(r: &Region) -> Value {
    match r {
        Region::Ball { r2 } => json!({"type": "ball", "r2": format_rat(r2)}),
        Region::BallComplement { r2 } => json!({"type": "ball_complement", "r2": format_rat(r2)}),
        Region::SemiAlgebraic { ineqs, bounds } => {
            let mut v = json!({"type": "semialgebraic", "ineqs": ineqs.iter().map(rat_poly_to_json).collect::<Vec<_>>()});
            if let Some(b) = bounds {
                v["bounds"] = json!(b.iter().map(|(lo, hi)| [format_rat(lo), format_rat(hi)]).collect::<Vec<_>>());
            }
            v
        }
        Region::FullSpace => json!({"type": "full"}),
    }
}

/// Parses a spec for an `n`-dimensional system. A single-inequality unsafe
/// set that swallows the initial set is flipped, with a warning.
pub fn spec_from_json(s: &SpecJson, n: usize) -> Result<SafetySpec> {
    check_version(&s.schema_version)?;
    let state = s.state.as_ref().map_or(Ok(Region::FullSpace), |r| region_from_json(r, n))?;
    let spec = SafetySpec::new(state, region_from_json(&s.initial, n)?, region_from_json(&s.unsafe_set, n)?);
    spec.with_auto_flip(n)
}

pub fn spec_to_json(spec: &SafetySpec) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "X": region_to_json(&spec.state),
        "X0": region_to_json(&spec.initial),
        "Xu": region_to_json(&spec.unsafe_set),
    })
}

pub fn load_spec(path: &Path, n: usize) -> Result<SafetySpec> {
    spec_from_json(&read_json(path)?, n)
}

// ---- graphs --------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub alphabet: usize,
    pub nodes: Vec<String>,
    pub edges: Vec<(String, usize, String)>,
}

pub fn graph_from_json(g: &GraphJson) -> Result<LabeledGraph> {
    check_version(&g.schema_version)?;
    let idx = |name: &str| {
        g.nodes.iter().position(|n| n == name).ok_or_else(|| Error::InvalidGraph(format!("unknown node `{name}`")))
    };
    let edges = g.edges.iter().map(|(a, s, b)| Ok((idx(a)?, *s, idx(b)?))).collect::<Result<Vec<_>>>()?;
    let mut graph = LabeledGraph::new(Alphabet::new(g.alphabet)?, g.nodes.clone(), [])?;
    for e in edges {
        if !graph.add_edge(e)? {
            return Err(Error::InvalidGraph(format!("duplicate edge {}", graph.format_edge(e))));
        }
    }
    Ok(graph)
}

pub fn graph_to_json(g: &LabeledGraph) -> Value {
    let edges: Vec<Value> = g.edges().map(|(a, s, b)| json!([g.node_name(a), s, g.node_name(b)])).collect();
    json!({"schema_version": SCHEMA_VERSION, "alphabet": g.alphabet().size(), "nodes": g.nodes(), "edges": edges})
}

pub fn load_graph(path: &Path) -> Result<LabeledGraph> {
    graph_from_json(&read_json(path)?)
}

// ---- certificates --------------------------------------------------------

fn matrix_to_json(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| float_str(m[(i, j)])).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn matrix_from_json(v: &Value) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<NumLit>> = serde_json::from_value(v.clone())?;
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("ragged matrix".into()));
    }
    let mut out = DMatrix::zeros(n, m);
    for (i, r) in rows.iter().enumerate() {
        for (j, x) in r.iter().enumerate() {
            out[(i, j)] = x.to_f64()?;
        }
    }
    Ok(out)
}

fn gram_to_json(g: &GramBlock) -> Value {
    json!({"basis": g.basis, "gram": matrix_to_json(&g.gram)})
}

fn gram_from_json(v: &Value) -> Result<GramBlock> {
    let basis: Vec<Exponent> = serde_json::from_value(v["basis"].clone())?;
    let gram = matrix_from_json(&v["gram"])?;
    if gram.shape() != (basis.len(), basis.len()) {
        return Err(Error::Parse("Gram matrix does not match its basis".into()));
    }
    Ok(GramBlock { basis, gram })
}

/// Certificate JSON; node names come from the graph it was built for.
pub fn certificate_to_json(cert: &Certificate, g: &LabeledGraph) -> Value {
    match cert {
        Certificate::Quadratic(q) => json!({
            "schema_version": SCHEMA_VERSION,
            "template": "quadratic",
            "eps": float_str(q.eps),
            "nodes": (0..q.p.len()).map(|v| json!({
                "name": g.nodes().get(v).cloned().unwrap_or_else(|| format!("v{}", v + 1)),
                "P": matrix_to_json(&q.p[v]),
                "lambda": float_str(q.lambda[v]),
            })).collect::<Vec<_>>(),
        }),
        Certificate::Sos(s) => json!({
            "schema_version": SCHEMA_VERSION,
            "template": "sos",
            "degree": s.degree,
            "eps": float_str(s.eps),
            "nodes": s.barriers.iter().enumerate().map(|(v, b)| json!({
                "name": g.nodes().get(v).cloned().unwrap_or_else(|| format!("v{}", v + 1)),
                "B": float_poly_to_json(b),
            })).collect::<Vec<_>>(),
            "identities": s.identities.iter().map(|id| json!({
                "condition": id.condition,
                "sos": gram_to_json(&id.sos),
                "multipliers": id.multipliers.iter().map(|(gk, m)| json!({
                    "g": float_poly_to_json(gk),
                    "basis": m.basis,
                    "gram": matrix_to_json(&m.gram),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
    }
}

fn num_field(v: &Value, key: &str) -> Result<f64> {
    let lit: NumLit = serde_json::from_value(v.get(key).cloned().ok_or_else(|| Error::Parse(format!("missing `{key}`")))?)?;
    lit.to_f64()
}

pub fn certificate_from_json(v: &Value, n: usize) -> Result<Certificate> {
    let version = v.get("schema_version").and_then(Value::as_u64).map(|x| x as u32);
    check_version(&version)?;
    let eps = num_field(v, "eps")?;
    let nodes = v["nodes"].as_array().ok_or_else(|| Error::Parse("missing `nodes`".into()))?;
    match v["template"].as_str() {
        Some("quadratic") => {
            let p = nodes.iter().map(|node| matrix_from_json(&node["P"])).collect::<Result<_>>()?;
            let lambda = nodes.iter().map(|node| num_field(node, "lambda")).collect::<Result<_>>()?;
            Ok(Certificate::Quadratic(QuadraticCertificate { p, lambda, eps }))
        }
        Some("sos") => {
            let barriers = nodes.iter().map(|node| float_poly_from_json(n, &node["B"])).collect::<Result<_>>()?;
            let identities = v["identities"]
                .as_array()
                .ok_or_else(|| Error::Parse("missing `identities`".into()))?
                .iter()
                .map(|id| {
                    let condition: Condition = serde_json::from_value(id["condition"].clone())?;
                    let sos = gram_from_json(&id["sos"])?;
                    let multipliers = id["multipliers"]
                        .as_array()
                        .map(Vec::as_slice)
                        .unwrap_or(&[])
                        .iter()
                        .map(|m| Ok((float_poly_from_json(n, &m["g"])?, gram_from_json(m)?)))
                        .collect::<Result<_>>()?;
                    Ok(SosIdentity { condition, sos, multipliers })
                })
                .collect::<Result<_>>()?;
            let degree = v["degree"].as_u64().unwrap_or(0) as u32;
            Ok(Certificate::Sos(SosCertificate { degree, barriers, identities, eps }))
        }
        other => Err(Error::Parse(format!("unknown certificate template {other:?}"))),
    }
}

/// Exact diagonal family `B_v(x) = Σ p_v[i]·x[i]² − 1` as certificate JSON.
pub fn diagonal_family_to_json(coeffs: &[Vec<Rat>], g: &LabeledGraph, eps: &Rat) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "template": "quadratic",
        "exact": true,
        "eps": format_rat(eps),
        "nodes": coeffs.iter().enumerate().map(|(v, p)| {
            let n = p.len();
            let rows: Vec<Vec<String>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { format_rat(&p[i]) } else { "0".into() }).collect())
                .collect();
            let lambda = p.iter().min().map(format_rat).unwrap_or_else(|| "0".into());
            json!({"name": g.node_name(v), "P": rows, "lambda": lambda})
        }).collect::<Vec<_>>(),
    })
}

// ---- trajectories and witnesses -------------------------------------------

pub fn trajectory_to_json(t: &Trajectory) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "word": t.word.to_string(),
        "states": t.states.iter().map(|x| x.iter().map(format_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn float_trajectory_to_json(word: &crate::system::Word, states: &[Vec<f64>]) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "word": word.to_string(),
        "states": states.iter().map(|x| x.iter().map(|v| float_str(*v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn unsafe_witness_to_json(w: &UnsafeWitness) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "word": w.word.to_string(),
        "t": w.t,
        "x0": w.x0.iter().map(|v| float_str(*v)).collect::<Vec<_>>(),
        "final_state": w.final_state.iter().map(|v| float_str(*v)).collect::<Vec<_>>(),
        "exact": w.exact,
    })
}
