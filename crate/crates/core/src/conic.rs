//! Backend-agnostic semidefinite feasibility problems and the bundled
//! interior-point backend.
//!
//! A [`ConicProblem`] has free scalar variables and symmetric matrix
//! variables (each constrained PSD), linear equalities and inequalities
//! over both, and affine LMIs `F0 + Σ x·F ⪰ 0`. The objective is linear.

use std::collections::BTreeMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A scalar decision variable: either a free scalar or the `(i, j)` entry of
/// a matrix variable (`(i, j)` and `(j, i)` name the same variable).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Scalar(usize),
    Entry { block: usize, i: usize, j: usize },
}

impl Var {
    fn canonical(self) -> Self {
        match self {
            Var::Entry { block, i, j } if i > j => Var::Entry { block, i: j, j: i },
            v => v,
        }
    }
}

/// `Σ coef·var`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: BTreeMap<Var, f64>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, var: Var, coef: f64) -> &mut Self {
        if coef != 0.0 {
            *self.terms.entry(var.canonical()).or_insert(0.0) += coef;
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (Var, f64)> + '_ {
        self.terms.iter().map(|(v, c)| (*v, *c))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, sol: &ConicSolution) -> f64 {
        self.terms.iter().map(|(v, c)| c * sol.value(*v)).sum()
    }
}

/// `F0 + Σ var·F_var ⪰ 0` with symmetric `size × size` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Lmi {
    pub size: usize,
    pub constant: DMatrix<f64>,
    pub terms: Vec<(Var, DMatrix<f64>)>,
    pub label: String,
}

impl Lmi {
    pub fn new(size: usize, label: impl Into<String>) -> Self {
        Self { size, constant: DMatrix::zeros(size, size), terms: Vec::new(), label: label.into() }
    }

    pub fn add_term(&mut self, var: Var, coef: DMatrix<f64>) -> &mut Self {
        self.terms.push((var.canonical(), coef));
        self
    }

    pub fn eval(&self, sol: &ConicSolution) -> DMatrix<f64> {
        self.terms.iter().fold(self.constant.clone(), |acc, (v, f)| acc + f * sol.value(*v))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConicProblem {
    pub num_scalars: usize,
    /// Sizes of the PSD matrix variables.
    pub blocks: Vec<usize>,
    /// `expr = rhs`
    pub equalities: Vec<(LinExpr, f64)>,
    /// `expr ≥ rhs`
    pub inequalities: Vec<(LinExpr, f64)>,
    pub lmis: Vec<Lmi>,
    /// Minimized; empty means pure feasibility.
    pub objective: LinExpr,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_scalar(&mut self) -> Var {
        self.num_scalars += 1;
        Var::Scalar(self.num_scalars - 1)
    }

    /// Adds a `size × size` PSD matrix variable and returns its block index.
    pub fn add_block(&mut self, size: usize) -> usize {
        self.blocks.push(size);
        self.blocks.len() - 1
    }

    pub fn add_equality(&mut self, expr: LinExpr, rhs: f64) {
        self.equalities.push((expr, rhs));
    }

    pub fn add_inequality(&mut self, expr: LinExpr, rhs: f64) {
        self.inequalities.push((expr, rhs));
    }

    pub fn add_lmi(&mut self, lmi: Lmi) {
        self.lmis.push(lmi);
    }

    pub fn constraint_count(&self) -> usize {
        self.equalities.len() + self.inequalities.len() + self.lmis.len() + self.blocks.len()
    }

    /// Layout: scalars first, then the upper triangle of each block.
    fn index_of(&self, var: Var) -> Result<usize> {
        match var.canonical() {
            Var::Scalar(k) if k < self.num_scalars => Ok(k),
            Var::Entry { block, i, j } if block < self.blocks.len() && j < self.blocks[block] => {
                let offset: usize = self.num_scalars + self.blocks[..block].iter().map(|&s| s * (s + 1) / 2).sum::<usize>();
                Ok(offset + svec_index(i, j))
            }
            v => Err(Error::MalformedProblem(format!("unknown variable {v:?}"))),
        }
    }

    pub fn num_variables(&self) -> usize {
        self.num_scalars + self.blocks.iter().map(|&s| s * (s + 1) / 2).sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraint_count() == 0 {
            return Err(Error::MalformedProblem("no constraints".into()));
        }
        let exprs = self.equalities.iter().chain(&self.inequalities).map(|(e, _)| e).chain([&self.objective]);
        for e in exprs {
            for (v, c) in e.terms() {
                self.index_of(v)?;
                if !c.is_finite() {
                    return Err(Error::MalformedProblem("non-finite coefficient".into()));
                }
            }
        }
        for lmi in &self.lmis {
            if lmi.constant.shape() != (lmi.size, lmi.size) || lmi.terms.iter().any(|(_, f)| f.shape() != (lmi.size, lmi.size)) {
                return Err(Error::MalformedProblem(format!("LMI `{}` has inconsistent sizes", lmi.label)));
            }
            for (v, _) in &lmi.terms {
                self.index_of(*v)?;
            }
        }
        Ok(())
    }
}

/// Position of `(i, j)`, `i ≤ j`, in the column-wise upper triangle.
fn svec_index(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicSolution {
    pub scalars: Vec<f64>,
    pub blocks: Vec<DMatrix<f64>>,
}

impl ConicSolution {
    pub fn value(&self, var: Var) -> f64 {
        match var {
            Var::Scalar(k) => self.scalars[k],
            Var::Entry { block, i, j } => self.blocks[block][(i, j)],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConicOutcome {
    Feasible(ConicSolution),
    Infeasible,
    /// The backend stopped without a verdict (iteration limit, stall, …).
    Unknown(String),
}

pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &ConicProblem) -> Result<ConicOutcome>;
}

/// Primal-dual interior point backend (Clarabel).
#[derive(Clone, Debug)]
pub struct ClarabelBackend {
    pub max_iter: u32,
    pub tol: f64,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-9 }
    }
}

struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let r = self.b.len();
        for (col, val) in entries {
            if val != 0.0 {
                self.i.push(r);
                self.j.push(col);
                self.v.push(val);
            }
        }
        self.b.push(rhs);
    }
}

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve(&self, problem: &ConicProblem) -> Result<ConicOutcome> {
        problem.validate()?;
        let nv = problem.num_variables();
        let mut rows = Rows { i: Vec::new(), j: Vec::new(), v: Vec::new(), b: Vec::new() };
        let mut cones = Vec::new();
        let sqrt2 = std::f64::consts::SQRT_2;

        // Equalities: a·x + s = b, s = 0.
        for (e, rhs) in &problem.equalities {
            let entries: Result<Vec<_>> = e.terms().map(|(v, c)| Ok((problem.index_of(v)?, c))).collect();
            rows.push_row(entries?, *rhs);
        }
        if !problem.equalities.is_empty() {
            cones.push(SupportedConeT::ZeroConeT(problem.equalities.len()));
        }
        // a·x ≥ b  ⇔  −a·x + s = −b, s ≥ 0.
        for (e, rhs) in &problem.inequalities {
            let entries: Result<Vec<_>> = e.terms().map(|(v, c)| Ok((problem.index_of(v)?, -c))).collect();
            rows.push_row(entries?, -rhs);
        }
        if !problem.inequalities.is_empty() {
            cones.push(SupportedConeT::NonnegativeConeT(problem.inequalities.len()));
        }
        // Matrix variables: s = svec(X).
        for (block, &size) in problem.blocks.iter().enumerate() {
            for j in 0..size {
                for i in 0..=j {
                    let col = problem.index_of(Var::Entry { block, i, j })?;
                    let scale = if i == j { 1.0 } else { sqrt2 };
                    rows.push_row([(col, -scale)], 0.0);
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(size));
        }
        // LMIs: s = svec(F0 + Σ x·F).
        for lmi in &problem.lmis {
            for j in 0..lmi.size {
                for i in 0..=j {
                    let scale = if i == j { 1.0 } else { sqrt2 };
                    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                    for (v, f) in &lmi.terms {
                        *acc.entry(problem.index_of(*v)?).or_insert(0.0) -= scale * f[(i, j)];
                    }
                    rows.push_row(acc, scale * lmi.constant[(i, j)]);
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(lmi.size));
        }

        let m = rows.b.len();
        let a = CscMatrix::new_from_triplets(m, nv, rows.i, rows.j, rows.v);
        let p = CscMatrix::zeros((nv, nv));
        let mut q = vec![0.0; nv];
        for (v, c) in problem.objective.terms() {
            q[problem.index_of(v)?] += c;
        }
        let settings = DefaultSettings::<f64> {
            verbose: false,
            max_iter: self.max_iter,
            tol_feas: self.tol,
            tol_gap_abs: self.tol,
            tol_gap_rel: self.tol,
            max_threads: 1,
            ..Default::default()
        };
        let mut solver = DefaultSolver::new(&p, &q, &a, &rows.b, &cones, settings)
            .map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        Ok(match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                ConicOutcome::Feasible(unpack(problem, &sol.x))
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => ConicOutcome::Infeasible,
            other => ConicOutcome::Unknown(format!("{other:?}")),
        })
    }
}

fn unpack(problem: &ConicProblem, x: &[f64]) -> ConicSolution {
    let scalars = x[..problem.num_scalars].to_vec();
    let mut offset = problem.num_scalars;
    let blocks = problem
        .blocks
        .iter()
        .map(|&s| {
            let mut m = DMatrix::zeros(s, s);
            for j in 0..s {
                for i in 0..=j {
                    let v = x[offset + svec_index(i, j)];
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            offset += s * (s + 1) / 2;
            m
        })
        .collect();
    ConicSolution { scalars, blocks }
}

/// Smallest eigenvalue of a symmetric matrix (after symmetrization).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
