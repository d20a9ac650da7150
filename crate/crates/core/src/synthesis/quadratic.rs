use nalgebra::DMatrix;

use super::{validate_certificate, Certificate, QuadraticCertificate, SynthOutcome, ValidationOptions, DEFAULT_EPS};
use crate::conic::{ConicBackend, ConicOutcome, ConicProblem, LinExpr, Lmi, Var};
use crate::error::{Error, Result};
use crate::graph::{is_path_complete, LabeledGraph};
use crate::rational::to_f64;
use crate::region::{Region, SafetySpec};
use crate::system::SwitchedSystem;

#[derive(Clone, Debug)]
pub struct QuadraticOptions {
    pub eps: f64,
    pub validation: ValidationOptions,
}

impl Default for QuadraticOptions {
    fn default() -> Self {
        Self { eps: DEFAULT_EPS, validation: ValidationOptions::default() }
    }
}

/// Variable layout of the quadratic program.
#[derive(Clone, Debug)]
pub struct QuadraticLayout {
    n: usize,
    /// `p_vars[v][(i, j)]` for `i ≤ j`.
    p_vars: Vec<DMatrix<usize>>,
    lambda: Vec<Var>,
}

impl QuadraticLayout {
    fn p(&self, v: usize, i: usize, j: usize) -> Var {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        Var::Scalar(self.p_vars[v][(a, b)])
    }

    fn extract(&self, values: &crate::conic::ConicSolution, eps: f64) -> QuadraticCertificate {
        let p = (0..self.p_vars.len())
            .map(|v| DMatrix::from_fn(self.n, self.n, |i, j| values.value(self.p(v, i, j))))
            .collect();
        let lambda = self.lambda.iter().map(|&l| values.value(l)).collect();
        QuadraticCertificate { p, lambda, eps }
    }
}

/// `E_ij + E_ji` (or `E_ii`).
fn sym_unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m[(j, i)] = 1.0;
    m
}

/// Builds the LMI program for ball specs:
/// `(1/r0)·I − P_v ⪰ 0`, `P_v − λ_v·I ⪰ 0`, `λ_v·ru ≥ 1 + ε`, and
/// `P_v − A_σᵀ P_{v'} A_σ ⪰ 0` per edge. Pure feasibility: an interior
/// point method then lands away from the boundary, which leaves slack for
/// validation.
pub fn quadratic_problem(
    sys: &SwitchedSystem,
    g: &LabeledGraph,
    spec: &SafetySpec,
    eps: f64,
) -> Result<(ConicProblem, QuadraticLayout)> {
    let mats = sys.float_matrices().ok_or_else(|| Error::UnsupportedSpec("quadratic template needs linear modes".into()))?;
    let (r0, ru) = match (&spec.state, spec.ball_radii()) {
        (Region::FullSpace, Some((r0, ru))) => (to_f64(r0), to_f64(ru)),
        _ => return Err(Error::UnsupportedSpec("quadratic template needs X = ℝⁿ, a ball X0 and a ball-complement Xu".into())),
    };
    if g.alphabet() != sys.alphabet() {
        return Err(Error::AlphabetMismatch(g.alphabet().size(), sys.alphabet().size()));
    }
    let n = sys.dimension();
    let mut prob = ConicProblem::new();
    let p_vars: Vec<DMatrix<usize>> = (0..g.num_vertices())
        .map(|_| {
            let mut m = DMatrix::from_element(n, n, usize::MAX);
            for j in 0..n {
                for i in 0..=j {
                    let Var::Scalar(k) = prob.add_scalar() else { unreachable!() };
                    m[(i, j)] = k;
                }
            }
            m
        })
        .collect();
    let lambda: Vec<Var> = (0..g.num_vertices()).map(|_| prob.add_scalar()).collect();
    let layout = QuadraticLayout { n, p_vars, lambda };

    for v in 0..g.num_vertices() {
        let mut c1 = Lmi::new(n, format!("C1 {}", g.node_name(v)));
        c1.constant = DMatrix::identity(n, n) / r0;
        let mut c2 = Lmi::new(n, format!("C2 {}", g.node_name(v)));
        for j in 0..n {
            for i in 0..=j {
                c1.add_term(layout.p(v, i, j), -sym_unit(n, i, j));
                c2.add_term(layout.p(v, i, j), sym_unit(n, i, j));
            }
        }
        c2.add_term(layout.lambda[v], -DMatrix::identity(n, n));
        prob.add_lmi(c1);
        prob.add_lmi(c2);
        let mut lam = LinExpr::new();
        lam.add(layout.lambda[v], ru);
        prob.add_inequality(lam, 1.0 + eps);
    }
    for e @ (v, s, w) in g.edges() {
        let a = &mats[s - 1];
        let mut c3 = Lmi::new(n, format!("C3 {}", g.format_edge(e)));
        for j in 0..n {
            for i in 0..=j {
                let unit = sym_unit(n, i, j);
                c3.add_term(layout.p(v, i, j), unit.clone());
                c3.add_term(layout.p(w, i, j), -(a.transpose() * &unit * a));
            }
        }
        prob.add_lmi(c3);
    }
    Ok((prob, layout))
}

/// Quadratic barrier synthesis. A non-path-complete graph is allowed (with a
/// warning) since such "certificates" are exactly what the necessity
/// construction warns about.
pub fn synth_quadratic_pcbf(
    sys: &SwitchedSystem,
    g: &LabeledGraph,
    spec: &SafetySpec,
    opts: &QuadraticOptions,
    backend: &dyn ConicBackend,
) -> Result<SynthOutcome> {
    if let Some(w) = is_path_complete(g).rejected_word() {
        log::warn!("graph is not path-complete (rejects {w}); a certificate would not imply safety");
    }
    let (prob, layout) = quadratic_problem(sys, g, spec, opts.eps)?;
    match backend.solve(&prob)? {
        ConicOutcome::Infeasible => Ok(SynthOutcome::Infeasible),
        ConicOutcome::Unknown(msg) => Ok(SynthOutcome::Unknown(msg)),
        ConicOutcome::Feasible(values) => {
            let cert = Certificate::Quadratic(layout.extract(&values, opts.eps));
            let report = validate_certificate(&cert, sys, g, spec, &opts.validation);
            Ok(if report.pass {
                SynthOutcome::Certified { certificate: cert, report }
            } else {
                SynthOutcome::Rejected { report }
            })
        }
    }
}
