//! Barrier certificate synthesis, validation and transport.
//!
//! Two templates are supported: pure quadratics `xᵀP_v x − 1` solved as
//! LMIs for linear modes, and fixed-degree polynomials with sum-of-squares
//! multipliers for polynomial modes. Solver output is never trusted
//! directly; every certificate goes through [`validate_certificate`].

mod quadratic;
mod sos;
mod validate;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use quadratic::{quadratic_problem, synth_quadratic_pcbf, QuadraticLayout, QuadraticOptions};
pub use sos::{synth_sos_pcbf, SosOptions};
pub use validate::{validate_certificate, ValidationOptions};

use crate::error::Result;
use crate::graph::{verify_simulation, Edge, LabeledGraph, SimulationMap};
use crate::polynomial::{Exponent, FloatPoly};

/// Default strictness margin for the unsafe-set condition.
pub const DEFAULT_EPS: f64 = 1e-6;

/// `B_v(x) = xᵀ P_v x − 1`, with S-procedure multipliers `λ_v` for the unsafe set.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticCertificate {
    pub p: Vec<DMatrix<f64>>,
    pub lambda: Vec<f64>,
    pub eps: f64,
}

impl QuadraticCertificate {
    pub fn barrier_value(&self, v: usize, x: &[f64]) -> f64 {
        let n = x.len();
        let mut acc = -1.0;
        for i in 0..n {
            for j in 0..n {
                acc += x[i] * self.p[v][(i, j)] * x[j];
            }
        }
        acc
    }
}

/// `basisᵀ · gram · basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramBlock {
    pub basis: Vec<Exponent>,
    pub gram: DMatrix<f64>,
}

impl GramBlock {
    pub fn to_poly(&self, nvars: usize) -> FloatPoly {
        let mut p = FloatPoly::zero(nvars);
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let e: Exponent = a.iter().zip(b).map(|(x, y)| x + y).collect();
                p.add_term(e, self.gram[(i, j)]);
            }
        }
        p
    }
}

/// Which barrier condition an SOS identity certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    /// `−B_v ≥ 0` on the initial set.
    Initial { node: usize },
    /// `B_v − ε ≥ 0` on the unsafe set.
    Unsafe { node: usize },
    /// `B_v − B_{v'}∘f_σ ≥ 0` on the state set.
    Decrease { edge: Edge },
}

impl Condition {
    pub fn tag(&self) -> &'static str {
        match self {
            Condition::Initial { .. } => "pcbf1",
            Condition::Unsafe { .. } => "pcbf2",
            Condition::Decrease { .. } => "pcbf3",
        }
    }
}

/// `target = sos + Σ multiplier_k · g_k`, with every Gram block PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct SosIdentity {
    pub condition: Condition,
    pub sos: GramBlock,
    pub multipliers: Vec<(FloatPoly, GramBlock)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SosCertificate {
    pub degree: u32,
    pub barriers: Vec<FloatPoly>,
    pub identities: Vec<SosIdentity>,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    Quadratic(QuadraticCertificate),
    Sos(SosCertificate),
}

impl Certificate {
    pub fn template(&self) -> &'static str {
        match self {
            Certificate::Quadratic(_) => "quadratic",
            Certificate::Sos(_) => "sos",
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            Certificate::Quadratic(q) => q.p.len(),
            Certificate::Sos(s) => s.barriers.len(),
        }
    }

    pub fn eps(&self) -> f64 {
        match self {
            Certificate::Quadratic(q) => q.eps,
            Certificate::Sos(s) => s.eps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    /// `pcbf1`, `pcbf2`, `pcbf3`, or `structure`.
    pub condition: String,
    pub location: String,
    pub pass: bool,
    /// Smallest eigenvalue margin or worst sampled slack; negative means violated.
    pub residual: f64,
    pub witness: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub pass: bool,
}

impl ValidationReport {
    pub(crate) fn from_rows(rows: Vec<ValidationRow>) -> Self {
        let pass = !rows.is_empty() && rows.iter().all(|r| r.pass);
        Self { rows, pass }
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Result of a synthesis call.
#[derive(Clone, Debug, PartialEq)]
pub enum SynthOutcome {
    /// Solver found values and the certificate passed validation.
    Certified { certificate: Certificate, report: ValidationReport },
    /// The backend proved the conic program infeasible.
    Infeasible,
    /// The backend returned values that did not survive validation.
    Rejected { report: ValidationReport },
    /// The backend stopped without a verdict.
    Unknown(String),
}

impl SynthOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            SynthOutcome::Certified { certificate, .. } => Some(certificate),
            _ => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, SynthOutcome::Certified { .. })
    }

    pub fn status(&self) -> &'static str {
        match self {
            SynthOutcome::Certified { .. } => "certified",
            SynthOutcome::Infeasible => "infeasible",
            SynthOutcome::Rejected { .. } => "rejected",
            SynthOutcome::Unknown(_) => "unknown",
        }
    }
}

/// Certificate for `gbar` obtained by giving each vertex `v̄` the function of
/// `R(v̄)`. `g` must simulate `gbar` through `map`.
pub fn transport_certificate(
    cert: &Certificate,
    g: &LabeledGraph,
    gbar: &LabeledGraph,
    map: &SimulationMap,
) -> Result<Certificate> {
    verify_simulation(g, gbar, map)?;
    let r = |vb: usize| map.image(vb);
    Ok(match cert {
        Certificate::Quadratic(q) => Certificate::Quadratic(QuadraticCertificate {
            p: (0..gbar.num_vertices()).map(|vb| q.p[r(vb)].clone()).collect(),
            lambda: (0..gbar.num_vertices()).map(|vb| q.lambda[r(vb)]).collect(),
            eps: q.eps,
        }),
        Certificate::Sos(s) => {
            let find = |c: Condition| s.identities.iter().find(|id| id.condition == c).cloned();
            let mut identities = Vec::new();
            for vb in 0..gbar.num_vertices() {
                for (src, dst) in [
                    (Condition::Initial { node: r(vb) }, Condition::Initial { node: vb }),
                    (Condition::Unsafe { node: r(vb) }, Condition::Unsafe { node: vb }),
                ] {
                    if let Some(mut id) = find(src) {
                        id.condition = dst;
                        identities.push(id);
                    }
                }
            }
            for e @ (a, sym, b) in gbar.edges() {
                if let Some(mut id) = find(Condition::Decrease { edge: (r(a), sym, r(b)) }) {
                    id.condition = Condition::Decrease { edge: e };
                    identities.push(id);
                }
            }
            Certificate::Sos(SosCertificate {
                degree: s.degree,
                barriers: (0..gbar.num_vertices()).map(|vb| s.barriers[r(vb)].clone()).collect(),
                identities,
                eps: s.eps,
            })
        }
    })
}
