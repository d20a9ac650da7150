//! Python bindings. Graphs, systems and specs are opaque handles; results come
//! back as plain dicts and lists built from the same JSON the CLI writes.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde_json::{json, Value};

use pathbarrier::conic::ClarabelBackend;
use pathbarrier::experiment::{run_experiment, ExperimentConfig, ExperimentTemplate};
use pathbarrier::graph::{self, Comparison, LabeledGraph, PathCompleteness, SimulationMap};
use pathbarrier::io;
use pathbarrier::necessity::run_necessity_pipeline;
use pathbarrier::rational::{format_rat, norm2, parse_rat, rat_from_f64, Rat, RatMatrix};
use pathbarrier::region::SafetySpec;
use pathbarrier::safety::{brute_force_unsafe, random_stable_system, BruteForceOptions};
use pathbarrier::separation::{build_separating_instance, verify_separation};
use pathbarrier::synthesis::{
    synth_quadratic_pcbf, synth_sos_pcbf, validate_certificate, QuadraticOptions, SosOptions, SynthOutcome,
    ValidationOptions, DEFAULT_EPS,
};
use pathbarrier::system::{simulate, simulate_f64, Alphabet, SwitchedSystem, Word};
use pathbarrier::catalog;

create_exception!(pathbarrier_py, PathbarrierError, PyException);

fn err(e: pathbarrier::Error) -> PyErr {
    PathbarrierError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PathbarrierError::new_err(e.to_string())
}

/// Hands a JSON value to Python through `json.loads`.
fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (v.to_string(),))?.unbind())
}

/// Accepts ints, floats, or strings such as `"3/4"` and `"0.1"`.
fn to_rat(obj: &Bound<'_, PyAny>) -> PyResult<Rat> {
    if let Ok(s) = obj.extract::<String>() {
        return parse_rat(&s).map_err(err);
    }
    if let Ok(i) = obj.extract::<i64>() {
        return Ok(Rat::from_integer(i.into()));
    }
    let f: f64 = obj.extract()?;
    rat_from_f64(f).map_err(err)
}

fn to_rats(items: &[Bound<'_, PyAny>]) -> PyResult<Vec<Rat>> {
    items.iter().map(to_rat).collect()
}

fn word(letters: Vec<usize>) -> Word {
    Word::new(letters)
}

fn map_names(map: &SimulationMap, from: &LabeledGraph, to: &LabeledGraph) -> Value {
    map.as_slice().iter().enumerate().map(|(v, &r)| (from.node_name(v).to_string(), json!(to.node_name(r)))).collect()
}

#[pyclass(name = "Graph", module = "pathbarrier_py", frozen)]
struct PyGraph {
    inner: LabeledGraph,
}

#[pymethods]
impl PyGraph {
    /// `edges` are `(source, symbol, target)` with node names and 1-based symbols.
    #[new]
    fn new(alphabet: usize, nodes: Vec<String>, edges: Vec<(String, usize, String)>) -> PyResult<Self> {
        let g = io::GraphJson { schema_version: None, alphabet, nodes, edges };
        Ok(Self { inner: io::graph_from_json(&g).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let g: io::GraphJson = serde_json::from_str(text).map_err(json_err)?;
        Ok(Self { inner: io::graph_from_json(&g).map_err(err)? })
    }

    /// One of `a`, `b`, `a_lift`, `platoon`, `platoon_non_pc`, `platoon_lift`.
    #[staticmethod]
    fn catalog(name: &str) -> PyResult<Self> {
        let inner = match name {
            "a" => catalog::graph_a(),
            "b" => catalog::graph_b(),
            "a_lift" => catalog::graph_a_lift(),
            "platoon" => catalog::graph_platoon(),
            "platoon_non_pc" => catalog::graph_platoon_non_pc(),
            "platoon_lift" => catalog::graph_platoon_lift(),
            other => return Err(PathbarrierError::new_err(format!("no catalog graph `{other}`"))),
        };
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        io::graph_to_json(&self.inner).to_string()
    }

    #[getter]
    fn alphabet(&self) -> usize {
        self.inner.alphabet().size()
    }

    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.inner.nodes().to_vec()
    }

    #[getter]
    fn edges(&self) -> Vec<(String, usize, String)> {
        let g = &self.inner;
        g.edges().map(|(v, s, w)| (g.node_name(v).to_string(), s, g.node_name(w).to_string())).collect()
    }

    fn is_path_complete(&self) -> bool {
        graph::is_path_complete(&self.inner).is_complete()
    }

    /// Shortest rejected word (lexicographically least), or `None`.
    fn rejected_word(&self) -> Option<Vec<usize>> {
        match graph::is_path_complete(&self.inner) {
            PathCompleteness::Complete => None,
            PathCompleteness::Rejected { word } => Some(word.letters().to_vec()),
        }
    }

    fn accepts(&self, letters: Vec<usize>) -> PyResult<bool> {
        graph::accepts(&self.inner, &word(letters)).map_err(err)
    }

    /// Ordering by simulation; maps are keyed by the simulated graph's nodes.
    fn compare(&self, py: Python<'_>, other: &PyGraph) -> PyResult<Py<PyAny>> {
        let (g, gbar) = (&self.inner, &other.inner);
        let verdict = graph::compare(g, gbar).map_err(err)?;
        let mut j = json!({"verdict": serde_json::to_value(&verdict).map_err(json_err)?["verdict"]});
        match &verdict {
            Comparison::LessOrEqual { map } => j["map"] = map_names(map, gbar, g),
            Comparison::GreaterOrEqual { map } => j["map"] = map_names(map, g, gbar),
            Comparison::Both { forward, backward } => {
                j["forward"] = map_names(forward, gbar, g);
                j["backward"] = map_names(backward, g, gbar);
            }
            Comparison::Incomparable => {}
        }
        to_py(py, &j)
    }

    fn __len__(&self) -> usize {
        self.inner.num_vertices()
    }

    fn __repr__(&self) -> String {
        format!("Graph(alphabet={}, nodes={}, edges={})", self.alphabet(), self.inner.num_vertices(), self.inner.num_edges())
    }
}

#[pyclass(name = "System", module = "pathbarrier_py", frozen)]
struct PySystem {
    inner: SwitchedSystem,
}

#[pymethods]
impl PySystem {
    /// One square matrix per mode; entries are ints, floats or rational strings.
    #[staticmethod]
    fn linear(matrices: Vec<Vec<Vec<Bound<'_, PyAny>>>>) -> PyResult<Self> {
        let mats = matrices
            .iter()
            .map(|rows| {
                let rows = rows.iter().map(|r| to_rats(r)).collect::<PyResult<Vec<_>>>()?;
                RatMatrix::from_rows(rows).map_err(err)
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self { inner: SwitchedSystem::linear(mats).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let s: io::SystemJson = serde_json::from_str(text).map_err(json_err)?;
        Ok(Self { inner: io::system_from_json(&s).map_err(err)? })
    }

    /// `platoon` or `platoon_modified`.
    #[staticmethod]
    fn catalog(name: &str) -> PyResult<Self> {
        let inner = match name {
            "platoon" => catalog::platoon(),
            "platoon_modified" => catalog::platoon_modified(),
            other => return Err(PathbarrierError::new_err(format!("no catalog system `{other}`"))),
        };
        Ok(Self { inner })
    }

    /// Entries uniform on `[-1, 1]`, shrunk by 1.05 until each mode is Schur stable.
    #[staticmethod]
    fn random_stable(dimension: usize, modes: usize, seed: u64) -> PyResult<Self> {
        let alphabet = Alphabet::new(modes).map_err(err)?;
        Ok(Self { inner: random_stable_system(dimension, alphabet, seed).map_err(err)? })
    }

    fn to_json(&self) -> String {
        io::system_to_json(&self.inner).to_string()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.alphabet().size()
    }

    /// Exact trajectory as rational strings, one row per time step.
    fn simulate(&self, x0: Vec<Bound<'_, PyAny>>, letters: Vec<usize>) -> PyResult<Vec<Vec<String>>> {
        let traj = simulate(&self.inner, &to_rats(&x0)?, &word(letters)).map_err(err)?;
        Ok(traj.states.iter().map(|x| x.iter().map(format_rat).collect()).collect())
    }

    fn simulate_float(&self, x0: Vec<f64>, letters: Vec<usize>) -> PyResult<Vec<Vec<f64>>> {
        simulate_f64(&self.inner, &x0, &word(letters)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("System(dimension={}, modes={}, linear={})", self.dimension(), self.modes(), self.inner.is_linear())
    }
}

#[pyclass(name = "Spec", module = "pathbarrier_py", frozen)]
struct PySpec {
    inner: SafetySpec,
}

#[pymethods]
impl PySpec {
    /// `X0 = {‖x‖² ≤ r0}`, `Xu = {‖x‖² ≥ ru}`.
    #[staticmethod]
    fn balls(r0: Bound<'_, PyAny>, ru: Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(Self { inner: SafetySpec::balls(to_rat(&r0)?, to_rat(&ru)?).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str, dimension: usize) -> PyResult<Self> {
        let s: io::SpecJson = serde_json::from_str(text).map_err(json_err)?;
        Ok(Self { inner: io::spec_from_json(&s, dimension).map_err(err)? })
    }

    /// `platoon`: the two-car spec with the unsafe set oriented away from X0.
    #[staticmethod]
    fn catalog(name: &str) -> PyResult<Self> {
        match name {
            "platoon" => Ok(Self { inner: catalog::platoon_spec() }),
            other => Err(PathbarrierError::new_err(format!("no catalog spec `{other}`"))),
        }
    }

    fn to_json(&self) -> String {
        io::spec_to_json(&self.inner).to_string()
    }

    fn in_initial(&self, x: Vec<f64>) -> bool {
        self.inner.initial.contains_f64(&x)
    }

    fn in_unsafe(&self, x: Vec<f64>) -> bool {
        self.inner.unsafe_set.contains_f64(&x)
    }
}

fn validation(tol: f64) -> ValidationOptions {
    ValidationOptions { eig_tol: tol, coeff_tol: tol, ..ValidationOptions::default() }
}

fn outcome_json(outcome: &SynthOutcome, g: &LabeledGraph) -> PyResult<Value> {
    let mut j = json!({"status": outcome.status()});
    match outcome {
        SynthOutcome::Certified { certificate, report } => {
            j["certificate"] = io::certificate_to_json(certificate, g);
            j["validation"] = serde_json::to_value(report).map_err(json_err)?;
        }
        SynthOutcome::Rejected { report } => j["validation"] = serde_json::to_value(report).map_err(json_err)?,
        SynthOutcome::Infeasible => {}
        SynthOutcome::Unknown(msg) => j["detail"] = json!(msg),
    }
    Ok(j)
}

/// Barrier synthesis with the quadratic (LMI) or SOS template. Returns a dict
/// with `status`, plus `certificate` and `validation` when available.
#[pyfunction]
#[pyo3(signature = (system, graph, spec, template = "quadratic", degree = 2, mult_degree = 2, eps = DEFAULT_EPS, tol = 1e-7))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    py: Python<'_>,
    system: &PySystem,
    graph: &PyGraph,
    spec: &PySpec,
    template: &str,
    degree: u32,
    mult_degree: u32,
    eps: f64,
    tol: f64,
) -> PyResult<Py<PyAny>> {
    let (sys, g, spec) = (&system.inner, &graph.inner, &spec.inner);
    let backend = ClarabelBackend::default();
    let outcome = match template {
        "quadratic" => py.detach(|| synth_quadratic_pcbf(sys, g, spec, &QuadraticOptions { eps, validation: validation(tol) }, &backend)),
        "sos" => py.detach(|| {
            synth_sos_pcbf(sys, g, spec, &SosOptions { degree, mult_degree, eps, validation: validation(tol) }, &backend)
        }),
        other => return Err(PathbarrierError::new_err(format!("unknown template `{other}`"))),
    }
    .map_err(err)?;
    to_py(py, &outcome_json(&outcome, g)?)
}

/// Re-checks a certificate given as the JSON text `synthesize` or the CLI produce.
#[pyfunction]
#[pyo3(signature = (certificate, system, graph, spec, tol = 1e-7))]
fn validate(py: Python<'_>, certificate: &str, system: &PySystem, graph: &PyGraph, spec: &PySpec, tol: f64) -> PyResult<Py<PyAny>> {
    let v: Value = serde_json::from_str(certificate).map_err(json_err)?;
    let cert = io::certificate_from_json(&v, system.inner.dimension()).map_err(err)?;
    let report = validate_certificate(&cert, &system.inner, &graph.inner, &spec.inner, &validation(tol));
    to_py(py, &serde_json::to_value(&report).map_err(json_err)?)
}

/// Unsafe linear system plus an admissible barrier family on a non-path-complete graph.
#[pyfunction]
fn counterexample(py: Python<'_>, graph: &PyGraph) -> PyResult<Py<PyAny>> {
    let g = &graph.inner;
    let inst = run_necessity_pipeline(g).map_err(err)?;
    let mut witness = io::trajectory_to_json(&inst.witness);
    witness["final_norm2"] = json!(format_rat(&norm2(inst.witness.final_state())));
    let j = json!({
        "word": inst.word.letters(),
        "system": io::system_to_json(&inst.system),
        "spec": io::spec_to_json(&inst.spec),
        "witness": witness,
        "coefficients": inst.coeffs.iter().map(|p| p.iter().map(format_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "admissibility": inst.report,
        "verified": inst.verified(),
    });
    to_py(py, &j)
}

/// Separating instance for a graph with at least one non-edge.
#[pyfunction]
fn separate(py: Python<'_>, graph: &PyGraph) -> PyResult<Py<PyAny>> {
    let g = &graph.inner;
    let inst = build_separating_instance(g).map_err(err)?;
    let report = verify_separation(&inst);
    let j = json!({
        "non_edges": inst.tilde_edges.iter().map(|&e| g.format_edge(e)).collect::<Vec<_>>(),
        "system": io::system_to_json(&inst.system),
        "coefficients": inst.qcoeffs.iter().map(|p| p.iter().map(format_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "report": report,
    });
    to_py(py, &j)
}

/// Searches words up to `horizon` for a trajectory from X0 into Xu.
#[pyfunction]
#[pyo3(signature = (system, spec, horizon, grid = 11))]
fn brute_force(py: Python<'_>, system: &PySystem, spec: &PySpec, horizon: usize, grid: usize) -> PyResult<Option<Py<PyAny>>> {
    let opts = BruteForceOptions { grid, ..BruteForceOptions::default() };
    let found = py.detach(|| brute_force_unsafe(&system.inner, &spec.inner, horizon, &opts)).map_err(err)?;
    found.map(|w| to_py(py, &io::unsafe_witness_to_json(&w))).transpose()
}

/// Random-system comparison of two graphs; defaults to the two-node and
/// three-node graphs related by simulation.
#[pyfunction]
#[pyo3(signature = (count = 300, dimension = 3, seed = 0, g = None, gbar = None, template = "quadratic", eps = DEFAULT_EPS))]
#[allow(clippy::too_many_arguments)]
fn experiment(
    py: Python<'_>,
    count: usize,
    dimension: usize,
    seed: u64,
    g: Option<&PyGraph>,
    gbar: Option<&PyGraph>,
    template: &str,
    eps: f64,
) -> PyResult<Py<PyAny>> {
    let g = g.map_or_else(catalog::graph_platoon, |p| p.inner.clone());
    let gbar = gbar.map_or_else(catalog::graph_platoon_lift, |p| p.inner.clone());
    let mut cfg = ExperimentConfig::new(count, dimension, seed, g, gbar);
    cfg.template = match template {
        "quadratic" => ExperimentTemplate::Quadratic(QuadraticOptions { eps, ..QuadraticOptions::default() }),
        "sos" => ExperimentTemplate::Sos(SosOptions { eps, ..SosOptions::default() }),
        other => return Err(PathbarrierError::new_err(format!("unknown template `{other}`"))),
    };
    let tally = py.detach(|| run_experiment(&cfg, &ClarabelBackend::default())).map_err(err)?;
    to_py(py, &serde_json::to_value(&tally).map_err(json_err)?)
}

#[pymodule]
fn pathbarrier_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PySpec>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(separate, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(experiment, m)?)?;
    m.add("PathbarrierError", m.py().get_type::<PathbarrierError>())?;
    m.add("SCHEMA_VERSION", io::SCHEMA_VERSION)?;
    Ok(())
}
