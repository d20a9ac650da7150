use nalgebra::{DMatrix, DVector};

use super::{Certificate, Condition, QuadraticCertificate, SosCertificate, ValidationReport, ValidationRow};
use crate::conic::min_eigenvalue;
use crate::graph::LabeledGraph;
use crate::polynomial::FloatPoly;
use crate::rational::to_f64;
use crate::region::{grid_points, Region, SafetySpec};
use crate::system::SwitchedSystem;

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    /// Smallest eigenvalue allowed for matrices that must be PSD.
    pub eig_tol: f64,
    /// Largest coefficient residual allowed in SOS identities.
    pub coeff_tol: f64,
    /// Grid points per axis for sampled checks.
    pub grid: usize,
    /// Violation allowed at sampled points.
    pub sample_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { eig_tol: 1e-7, coeff_tol: 1e-7, grid: 21, sample_tol: 1e-6 }
    }
}

fn row(condition: &str, location: String, pass: bool, residual: f64, witness: Option<Vec<f64>>, detail: String) -> ValidationRow {
    ValidationRow { condition: condition.into(), location, pass, residual, witness, detail }
}

fn structure_failure(detail: impl Into<String>) -> ValidationReport {
    ValidationReport::from_rows(vec![row("structure", "certificate".into(), false, f64::NEG_INFINITY, None, detail.into())])
}

/// Checks every barrier condition of `cert` for `sys` on graph `g`.
/// Never fails; problems are reported as failing rows.
pub fn validate_certificate(
    cert: &Certificate,
    sys: &SwitchedSystem,
    g: &LabeledGraph,
    spec: &SafetySpec,
    opts: &ValidationOptions,
) -> ValidationReport {
    if cert.num_nodes() != g.num_vertices() {
        return structure_failure(format!("certificate has {} nodes, graph has {}", cert.num_nodes(), g.num_vertices()));
    }
    if g.alphabet() != sys.alphabet() {
        return structure_failure("graph and system alphabets differ");
    }
    match cert {
        Certificate::Quadratic(q) => validate_quadratic(q, sys, g, spec, opts),
        Certificate::Sos(s) => validate_sos(s, sys, g, spec, opts),
    }
}

/// Eigenvector of the smallest eigenvalue.
fn min_eigvec(m: &DMatrix<f64>) -> DVector<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let (k, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
    eig.eigenvectors.column(k).into_owned()
}

fn validate_quadratic(
    q: &QuadraticCertificate,
    sys: &SwitchedSystem,
    g: &LabeledGraph,
    spec: &SafetySpec,
    opts: &ValidationOptions,
) -> ValidationReport {
    let n = sys.dimension();
    let Some(mats) = sys.float_matrices() else {
        return structure_failure("quadratic certificates need linear modes");
    };
    let Some((r0, ru)) = spec.ball_radii().map(|(a, b)| (to_f64(a), to_f64(b))) else {
        return structure_failure("quadratic certificates need ball-shaped initial and unsafe sets");
    };
    if q.p.iter().any(|p| p.shape() != (n, n)) || q.lambda.len() != q.p.len() {
        return structure_failure("matrix dimensions do not match the system");
    }
    let tol = opts.eig_tol;
    let mut rows = Vec::new();
    for v in 0..g.num_vertices() {
        let name = g.node_name(v).to_string();
        let p = &q.p[v];
        let c1 = DMatrix::identity(n, n) / r0 - p;
        let e1 = min_eigenvalue(&c1);
        let w1 = (e1 < -tol).then(|| (min_eigvec(&c1) * r0.sqrt()).iter().copied().collect());
        rows.push(row("pcbf1", name.clone(), e1 >= -tol, e1, w1, "min eig of (1/r0)·I − P_v".into()));

        let c2 = p - DMatrix::identity(n, n) * q.lambda[v];
        let e2 = min_eigenvalue(&c2);
        let slack = q.lambda[v] * ru - (1.0 + q.eps);
        let res = e2.min(slack).min(q.lambda[v]);
        let w2 = (res < -tol).then(|| (min_eigvec(p) * ru.sqrt()).iter().copied().collect());
        rows.push(row(
            "pcbf2",
            name,
            res >= -tol,
            res,
            w2,
            format!("min eig of P_v − λ_v·I = {e2:.3e}; λ_v·ru − 1 − ε = {slack:.3e}"),
        ));
    }
    for e @ (v, s, w) in g.edges() {
        let a = &mats[s - 1];
        let c3 = &q.p[v] - a.transpose() * &q.p[w] * a;
        let e3 = min_eigenvalue(&c3);
        let w3 = (e3 < -tol).then(|| min_eigvec(&c3).iter().copied().collect());
        rows.push(row("pcbf3", g.format_edge(e), e3 >= -tol, e3, w3, "min eig of P_v − A_σᵀ P_v' A_σ".into()));
    }
    ValidationReport::from_rows(rows)
}

/// Polynomial each identity must reproduce.
fn target(cert: &SosCertificate, cond: Condition, fpolys: &[Vec<FloatPoly>]) -> Option<FloatPoly> {
    let n = fpolys.first()?.len();
    Some(match cond {
        Condition::Initial { node } => {
            let b: &FloatPoly = cert.barriers.get(node)?;
            -b
        }
        Condition::Unsafe { node } => cert.barriers.get(node)? - &FloatPoly::constant(n, cert.eps),
        Condition::Decrease { edge: (v, s, w) } => {
            let after = cert.barriers.get(w)?.compose(fpolys.get(s - 1)?).ok()?;
            cert.barriers.get(v)? - &after
        }
    })
}

fn location(g: &LabeledGraph, cond: Condition) -> String {
    match cond {
        Condition::Initial { node } | Condition::Unsafe { node } => {
            g.nodes().get(node).cloned().unwrap_or_else(|| format!("#{node}"))
        }
        Condition::Decrease { edge } => g.format_edge(edge),
    }
}

fn validate_sos(
    cert: &SosCertificate,
    sys: &SwitchedSystem,
    g: &LabeledGraph,
    spec: &SafetySpec,
    opts: &ValidationOptions,
) -> ValidationReport {
    let n = sys.dimension();
    if cert.barriers.iter().any(|b| b.nvars() != n) {
        return structure_failure("barrier polynomials do not match the system dimension");
    }
    let fpolys = sys.float_polys();
    let mut required: Vec<Condition> = (0..g.num_vertices())
        .flat_map(|node| [Condition::Initial { node }, Condition::Unsafe { node }])
        .collect();
    required.extend(g.edges().map(|edge| Condition::Decrease { edge }));

    let mut rows = Vec::new();
    for cond in required {
        let loc = location(g, cond);
        let Some(id) = cert.identities.iter().find(|id| id.condition == cond) else {
            rows.push(row(cond.tag(), loc, false, f64::NEG_INFINITY, None, "no SOS identity for this condition".into()));
            continue;
        };
        let Some(t) = target(cert, cond, &fpolys) else {
            rows.push(row(cond.tag(), loc, false, f64::NEG_INFINITY, None, "condition refers to a missing node or mode".into()));
            continue;
        };
        let mut residual = &t - &id.sos.to_poly(n);
        let mut min_eig = min_eigenvalue(&id.sos.gram);
        for (gk, mult) in &id.multipliers {
            residual = &residual - &(gk * &mult.to_poly(n));
            min_eig = min_eig.min(min_eigenvalue(&mult.gram));
        }
        let coeff_res = residual.max_abs_coeff(|c| c.abs());
        let pass = coeff_res <= opts.coeff_tol && min_eig >= -opts.eig_tol;
        rows.push(row(
            cond.tag(),
            loc,
            pass,
            min_eig.min(-coeff_res),
            None,
            format!("identity residual {coeff_res:.3e}, min Gram eigenvalue {min_eig:.3e}"),
        ));
    }
    rows.extend(grid_rows(cert, g, spec, &fpolys, opts));
    ValidationReport::from_rows(rows)
}

fn region_box(r: &Region, fallback: &Region, n: usize) -> Option<Vec<(f64, f64)>> {
    match (r.bounding_box(n), fallback.bounding_box(n)) {
        (Some(a), Some(b)) => Some(a.iter().zip(&b).map(|(x, y)| (x.0.max(y.0), x.1.min(y.1))).collect()),
        (a, b) => a.or(b),
    }
}

/// Sampled corroboration of the three conditions.
fn grid_rows(
    cert: &SosCertificate,
    g: &LabeledGraph,
    spec: &SafetySpec,
    fpolys: &[Vec<FloatPoly>],
    opts: &ValidationOptions,
) -> Vec<ValidationRow> {
    let n = fpolys.first().map_or(0, Vec::len);
    let tol = opts.sample_tol;
    let sample = |region: &Region, bx: Option<Vec<(f64, f64)>>| -> Option<Vec<Vec<f64>>> {
        bx.map(|b| {
            grid_points(&b, opts.grid)
                .into_iter()
                .filter(|x| region.contains_f64(x) && spec.state.contains_f64(x))
                .collect()
        })
    };
    let eval = |p: &FloatPoly, x: &[f64]| p.eval(x).unwrap_or(f64::NAN);
    let skipped = |cond: &str, loc: String| row(cond, loc, true, f64::NAN, None, "grid check skipped: no bounding box".into());

    let mut rows = Vec::new();
    let x0_pts = sample(&spec.initial, region_box(&spec.initial, &spec.state, n));
    let xu_pts = sample(&spec.unsafe_set, region_box(&spec.unsafe_set, &spec.state, n));
    let state_box = spec.state.bounding_box(n).or_else(|| {
        let a = spec.initial.bounding_box(n)?;
        let b = spec.unsafe_set.bounding_box(n)?;
        Some(a.iter().zip(&b).map(|(x, y)| (x.0.min(y.0), x.1.max(y.1))).collect())
    });
    let x_pts = sample(&Region::FullSpace, state_box);

    for v in 0..g.num_vertices() {
        let b = &cert.barriers[v];
        let loc = format!("{} (grid)", g.node_name(v));
        match &x0_pts {
            Some(pts) => {
                let worst = pts.iter().map(|x| (eval(b, x), x)).fold(None, |acc: Option<(f64, &Vec<f64>)>, (val, x)| {
                    if acc.is_none_or(|(m, _)| val > m) { Some((val, x)) } else { acc }
                });
                let (val, x) = worst.map_or((f64::NEG_INFINITY, None), |(v, x)| (v, Some(x.clone())));
                let pass = val <= tol;
                rows.push(row("pcbf1", loc.clone(), pass, -val, (!pass).then_some(x).flatten(), format!("max B_v on {} initial samples", pts.len())));
            }
            None => rows.push(skipped("pcbf1", loc.clone())),
        }
        match &xu_pts {
            Some(pts) => {
                let worst = pts.iter().map(|x| (eval(b, x) - cert.eps, x)).fold(None, |acc: Option<(f64, &Vec<f64>)>, (val, x)| {
                    if acc.is_none_or(|(m, _)| val < m) { Some((val, x)) } else { acc }
                });
                let (val, x) = worst.map_or((f64::INFINITY, None), |(v, x)| (v, Some(x.clone())));
                let pass = val >= -tol;
                rows.push(row("pcbf2", loc, pass, val, (!pass).then_some(x).flatten(), format!("min B_v − ε on {} unsafe samples", pts.len())));
            }
            None => rows.push(skipped("pcbf2", loc)),
        }
    }
    for e @ (v, s, w) in g.edges() {
        let loc = format!("{} (grid)", g.format_edge(e));
        let Some(pts) = &x_pts else {
            rows.push(skipped("pcbf3", loc));
            continue;
        };
        let mut worst = (f64::NEG_INFINITY, None);
        for x in pts {
            let fx: Vec<f64> = fpolys[s - 1].iter().map(|p| eval(p, x)).collect();
            let inc = eval(&cert.barriers[w], &fx) - eval(&cert.barriers[v], x);
            if inc > worst.0 {
                worst = (inc, Some(x.clone()));
            }
        }
        let pass = worst.0 <= tol;
        rows.push(row("pcbf3", loc, pass, -worst.0, if pass { None } else { worst.1 }, format!("max increase on {} state samples", pts.len())));
    }
    rows
}
