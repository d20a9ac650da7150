use std::collections::BTreeMap;

use super::{
    validate_certificate, Certificate, Condition, GramBlock, SosCertificate, SosIdentity, SynthOutcome, ValidationOptions,
    DEFAULT_EPS,
};
use crate::conic::{ConicBackend, ConicOutcome, ConicProblem, ConicSolution, LinExpr, Var};
use crate::error::{Error, Result};
use crate::graph::{is_path_complete, LabeledGraph};
use crate::polynomial::{monomials_up_to, Exponent, FloatPoly, RatPoly};
use crate::rational::rat;
use crate::region::{Region, SafetySpec};
use crate::system::SwitchedSystem;

#[derive(Clone, Debug)]
pub struct SosOptions {
    /// Barrier degree (even).
    pub degree: u32,
    /// Largest multiplier degree.
    pub mult_degree: u32,
    pub eps: f64,
    pub validation: ValidationOptions,
}

impl Default for SosOptions {
    fn default() -> Self {
        Self { degree: 2, mult_degree: 2, eps: DEFAULT_EPS, validation: ValidationOptions::default() }
    }
}

/// `{g ≥ 0}` description of a region.
fn inequalities(r: &Region, n: usize) -> Vec<RatPoly> {
    let norm2 = (0..n).fold(RatPoly::zero(n), |acc, i| &acc + &RatPoly::var(n, i).pow(2));
    match r {
        Region::Ball { r2 } => vec![&RatPoly::constant(n, r2.clone()) - &norm2],
        Region::BallComplement { r2 } => vec![&norm2 - &RatPoly::constant(n, r2.clone())],
        Region::SemiAlgebraic { ineqs, .. } => ineqs.clone(),
        Region::FullSpace => Vec::new(),
    }
}

/// Polynomial whose coefficients are affine in the decision variables.
type AffinePoly = BTreeMap<Exponent, (LinExpr, f64)>;

fn even_ceil(d: u32) -> u32 {
    d + d % 2
}

fn add_exp(a: &[u32], b: &[u32]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

struct IdentityLayout {
    condition: Condition,
    main: (usize, Vec<Exponent>),
    multipliers: Vec<(FloatPoly, usize, Vec<Exponent>)>,
}

/// Appends `target = zᵀQz + Σ g_k·(z_kᵀQ_k z_k)` to `prob`.
fn compile_identity(
    prob: &mut ConicProblem,
    n: usize,
    condition: Condition,
    target: &AffinePoly,
    gs: &[FloatPoly],
    mult_degree: u32,
) -> Result<IdentityLayout> {
    let deg_t = target.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0);
    let deg_g = gs.iter().map(FloatPoly::degree).max().unwrap_or(0);
    let top = even_ceil(deg_t.max(deg_g));
    let main_basis = monomials_up_to(n, top / 2);
    let main = prob.add_block(main_basis.len());

    let mut rows: AffinePoly = target.clone();
    let sub = |rows: &mut AffinePoly, e: Exponent, var: Var, coef: f64| {
        rows.entry(e).or_insert_with(|| (LinExpr::new(), 0.0)).0.add(var, -coef);
    };
    for (i, a) in main_basis.iter().enumerate() {
        for (j, b) in main_basis.iter().enumerate() {
            sub(&mut rows, add_exp(a, b), Var::Entry { block: main, i, j }, 1.0);
        }
    }
    let mut multipliers = Vec::new();
    for gk in gs {
        let dg = gk.degree();
        if dg > top {
            return Err(Error::DegreeMismatch(format!("inequality of degree {dg} exceeds identity degree {top}")));
        }
        let room = top - dg;
        let md = mult_degree.min(room - room % 2);
        let basis = monomials_up_to(n, md / 2);
        let block = prob.add_block(basis.len());
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let ab = add_exp(a, b);
                for (ge, gc) in gk.terms() {
                    sub(&mut rows, add_exp(&ab, ge), Var::Entry { block, i, j }, *gc);
                }
            }
        }
        multipliers.push((gk.clone(), block, basis));
    }
    for (_, (expr, constant)) in rows {
        if expr.is_empty() {
            if constant.abs() > 0.0 {
                return Err(Error::DegreeMismatch(format!(
                    "constant term {constant} cannot be matched by the monomial basis"
                )));
            }
            continue;
        }
        prob.add_equality(expr, -constant);
    }
    Ok(IdentityLayout { condition, main: (main, main_basis), multipliers })
}

struct SosLayout {
    n: usize,
    basis: Vec<Exponent>,
    coeffs: Vec<Vec<Var>>,
    identities: Vec<IdentityLayout>,
}

fn build_problem(sys: &SwitchedSystem, g: &LabeledGraph, spec: &SafetySpec, opts: &SosOptions) -> Result<(ConicProblem, SosLayout)> {
    if opts.degree == 0 || opts.degree % 2 == 1 {
        return Err(Error::DegreeMismatch(format!("barrier degree must be even and positive, got {}", opts.degree)));
    }
    if g.alphabet() != sys.alphabet() {
        return Err(Error::AlphabetMismatch(g.alphabet().size(), sys.alphabet().size()));
    }
    let n = sys.dimension();
    for r in [&spec.state, &spec.initial, &spec.unsafe_set] {
        r.check_dimension(n)?;
    }
    let to_float = |v: Vec<RatPoly>| v.iter().map(RatPoly::to_float).collect::<Vec<_>>();
    let g_state = to_float(inequalities(&spec.state, n));
    let g_init = to_float(inequalities(&spec.initial, n));
    let g_unsafe = to_float(inequalities(&spec.unsafe_set, n));

    let basis = monomials_up_to(n, opts.degree);
    let mut prob = ConicProblem::new();
    let coeffs: Vec<Vec<Var>> =
        (0..g.num_vertices()).map(|_| basis.iter().map(|_| prob.add_scalar()).collect()).collect();
    // f_σ^α for every template monomial α, computed exactly.
    let powers: Vec<Vec<FloatPoly>> = sys
        .modes()
        .iter()
        .map(|m| {
            let f = m.to_polys(n);
            basis.iter().map(|a| RatPoly::monomial(n, a.clone(), rat(1)).compose(&f).map(|p| p.to_float())).collect()
        })
        .collect::<Result<_>>()?;

    let barrier = |v: usize, sign: f64| -> AffinePoly {
        let mut p = AffinePoly::new();
        for (a, &var) in basis.iter().zip(&coeffs[v]) {
            p.entry(a.clone()).or_insert_with(|| (LinExpr::new(), 0.0)).0.add(var, sign);
        }
        p
    };

    let mut identities = Vec::new();
    for v in 0..g.num_vertices() {
        let s1 = barrier(v, -1.0);
        let gs: Vec<FloatPoly> = g_init.iter().chain(&g_state).cloned().collect();
        identities.push(compile_identity(&mut prob, n, Condition::Initial { node: v }, &s1, &gs, opts.mult_degree)?);

        let mut s2 = barrier(v, 1.0);
        s2.entry(vec![0; n]).or_insert_with(|| (LinExpr::new(), 0.0)).1 -= opts.eps;
        let gs: Vec<FloatPoly> = g_unsafe.iter().chain(&g_state).cloned().collect();
        identities.push(compile_identity(&mut prob, n, Condition::Unsafe { node: v }, &s2, &gs, opts.mult_degree)?);
    }
    for edge @ (v, s, w) in g.edges() {
        let mut s3 = barrier(v, 1.0);
        for (k, &var) in coeffs[w].iter().enumerate() {
            for (e, c) in powers[s - 1][k].terms() {
                s3.entry(e.clone()).or_insert_with(|| (LinExpr::new(), 0.0)).0.add(var, -c);
            }
        }
        identities.push(compile_identity(&mut prob, n, Condition::Decrease { edge }, &s3, &g_state, opts.mult_degree)?);
    }
    Ok((prob, SosLayout { n, basis, coeffs, identities }))
}

/// Spreads each monomial's residual evenly over the main Gram entries that
/// produce it, so the identity holds up to rounding.
fn project_gram(sos: &mut GramBlock, residual: &FloatPoly) {
    let mut slots: BTreeMap<Exponent, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, a) in sos.basis.iter().enumerate() {
        for (j, b) in sos.basis.iter().enumerate() {
            slots.entry(add_exp(a, b)).or_default().push((i, j));
        }
    }
    for (e, r) in residual.terms() {
        if let Some(cells) = slots.get(e) {
            let share = r / cells.len() as f64;
            for &(i, j) in cells {
                sos.gram[(i, j)] += share;
            }
        }
    }
}

fn extract(layout: &SosLayout, values: &ConicSolution, sys: &SwitchedSystem, opts: &SosOptions) -> SosCertificate {
    let n = layout.n;
    let barriers: Vec<FloatPoly> = layout
        .coeffs
        .iter()
        .map(|vars| {
            let mut p = FloatPoly::zero(n);
            for (a, &var) in layout.basis.iter().zip(vars) {
                p.add_term(a.clone(), values.value(var));
            }
            p
        })
        .collect();
    let gram = |block: usize, basis: &[Exponent]| GramBlock { basis: basis.to_vec(), gram: values.blocks[block].clone() };
    let mut cert = SosCertificate {
        degree: opts.degree,
        barriers,
        identities: layout
            .identities
            .iter()
            .map(|id| SosIdentity {
                condition: id.condition,
                sos: gram(id.main.0, &id.main.1),
                multipliers: id.multipliers.iter().map(|(gk, b, basis)| (gk.clone(), gram(*b, basis))).collect(),
            })
            .collect(),
        eps: opts.eps,
    };
    let fpolys = sys.float_polys();
    for k in 0..cert.identities.len() {
        let id = &cert.identities[k];
        let t = match id.condition {
            Condition::Initial { node } => -&cert.barriers[node],
            Condition::Unsafe { node } => &cert.barriers[node] - &FloatPoly::constant(n, cert.eps),
            Condition::Decrease { edge: (v, s, w) } => {
                &cert.barriers[v] - &cert.barriers[w].compose(&fpolys[s - 1]).expect("dimensions agree")
            }
        };
        let mut residual = &t - &id.sos.to_poly(n);
        for (gk, m) in &id.multipliers {
            residual = &residual - &(gk * &m.to_poly(n));
        }
        project_gram(&mut cert.identities[k].sos, &residual);
    }
    cert
}

/// Sum-of-squares barrier synthesis with one Gram block per identity and
/// per multiplier, solved as a single conic program.
pub fn synth_sos_pcbf(
    sys: &SwitchedSystem,
    g: &LabeledGraph,
    spec: &SafetySpec,
    opts: &SosOptions,
    backend: &dyn ConicBackend,
) -> Result<SynthOutcome> {
    if let Some(w) = is_path_complete(g).rejected_word() {
        log::warn!("graph is not path-complete (rejects {w}); a certificate would not imply safety");
    }
    let (prob, layout) = build_problem(sys, g, spec, opts)?;
    match backend.solve(&prob)? {
        ConicOutcome::Infeasible => Ok(SynthOutcome::Infeasible),
        ConicOutcome::Unknown(msg) => Ok(SynthOutcome::Unknown(msg)),
        ConicOutcome::Feasible(values) => {
            let cert = Certificate::Sos(extract(&layout, &values, sys, opts));
            let report = validate_certificate(&cert, sys, g, spec, &opts.validation);
            Ok(if report.pass {
                SynthOutcome::Certified { certificate: cert, report }
            } else {
                SynthOutcome::Rejected { report }
            })
        }
    }
}

