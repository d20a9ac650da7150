//! `pathbarrier` command-line tool.
//!
//! Exit codes: 0 success, 1 property violated (not path-complete,
//! infeasible, unsafe, failed validation), 2 usage or I/O error,
//! 3 backend failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pathbarrier::catalog;
use pathbarrier::experiment::{emit_report, run_experiment, ExperimentConfig, ExperimentTally, ExperimentTemplate, ReportFormat};
use pathbarrier::graph::{compare, is_path_complete, Comparison, LabeledGraph, PathCompleteness, SimulationMap};
use pathbarrier::io;
use pathbarrier::necessity::run_necessity_pipeline;
use pathbarrier::rational::{format_rat, parse_rat, to_f64};
use pathbarrier::safety::{brute_force_unsafe, BruteForceOptions};
use pathbarrier::separation::{build_separating_instance, verify_separation};
use pathbarrier::synthesis::{
    synth_quadratic_pcbf, synth_sos_pcbf, validate_certificate, QuadraticOptions, SosOptions, SynthOutcome,
    ValidationOptions, ValidationReport, DEFAULT_EPS,
};
use pathbarrier::system::{simulate, simulate_f64, Word};
use pathbarrier::{ClarabelBackend, Error};

#[derive(Parser)]
#[command(name = "pathbarrier", version, about = "Path-complete barrier functions for switched systems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for commands that write artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Validation tolerance (eigenvalue and coefficient residuals).
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Template {
    Quadratic,
    Sos,
}

#[derive(Subcommand)]
enum Command {
    /// Decide path-completeness; prints a rejected word otherwise.
    CheckPc { graph: PathBuf },
    /// Order two path-complete graphs by simulation.
    Compare { g: PathBuf, gbar: PathBuf },
    /// Build the unsafe system that defeats a non-path-complete graph.
    Counterexample { graph: PathBuf },
    /// Build the instance on which a path-complete graph beats every graph lacking one of its edges.
    Separate { graph: PathBuf },
    /// Synthesize a path-complete barrier certificate.
    Synth {
        system: PathBuf,
        graph: PathBuf,
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Template::Quadratic)]
        template: Template,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 2)]
        mult_degree: u32,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Check a certificate file against a system, graph and spec.
    Validate { certificate: PathBuf, system: PathBuf, graph: PathBuf, spec: PathBuf },
    /// Simulate a switching sequence.
    Simulate {
        system: PathBuf,
        /// Initial state, comma separated (decimal strings allowed).
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Switching word, e.g. `(121)` or `1,2,1`.
        #[arg(long)]
        word: String,
        /// Repeat the word this many times.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        /// Report the first visit to the unsafe set of this spec.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Use floating point even for linear systems.
        #[arg(long)]
        float: bool,
    },
    /// Search all words up to a horizon for an unsafe trajectory.
    BruteForce {
        system: PathBuf,
        spec: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Grid points per axis for sampled search.
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u128,
    },
    /// Random-system feasibility comparison of two graphs.
    Experiment {
        #[arg(long, default_value_t = 300)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Graph G (default: the two-vertex graph of the experiment).
        #[arg(long)]
        g: Option<PathBuf>,
        /// Graph Ḡ (default: the three-vertex graph it simulates).
        #[arg(long)]
        gbar: Option<PathBuf>,
        /// Spec file (default: initial ball of radius² 4, unsafe outside radius² 9).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Template::Quadratic)]
        template: Template,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Use this system for every instance instead of random draws.
        #[arg(long)]
        system_override: Option<PathBuf>,
    },
}

/// What a command produced: exit code plus text and JSON renderings.
struct Outcome {
    code: u8,
    text: String,
    json: Value,
}

impl Outcome {
    fn new(code: u8, text: String, json: Value) -> Self {
        Self { code, text, json }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonPathComplete { .. } | Error::GraphIsPathComplete => 1,
        Error::SolverFailure(_) | Error::MalformedProblem(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let global = cli.global.clone();
    match run(cli.command, &global) {
        Ok(out) => {
            match global.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("serializable")),
                _ => print!("{}", out.text),
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn validation_options(tol: f64) -> ValidationOptions {
    ValidationOptions { eig_tol: tol, coeff_tol: tol, ..ValidationOptions::default() }
}

fn require_out(global: &Global) -> pathbarrier::Result<&Path> {
    let dir = global.out.as_deref().ok_or_else(|| Error::Parse("--out <dir> is required".into()))?;
    std::fs::create_dir_all(dir)?;
    Ok(dir)
}

fn map_text(map: &SimulationMap, from: &LabeledGraph, to: &LabeledGraph) -> String {
    map.as_slice()
        .iter()
        .enumerate()
        .map(|(v, &r)| format!("{}->{}", from.node_name(v), to.node_name(r)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn map_json(map: &SimulationMap, from: &LabeledGraph, to: &LabeledGraph) -> Value {
    map.as_slice().iter().enumerate().map(|(v, &r)| (from.node_name(v).to_string(), json!(to.node_name(r)))).collect()
}

fn report_text(report: &ValidationReport) -> String {
    let mut s = String::new();
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{:<6} {:<28} {:<4} residual {:+.3e}{}",
            row.condition,
            row.location,
            if row.pass { "ok" } else { "FAIL" },
            row.residual,
            if row.detail.is_empty() { String::new() } else { format!("  {}", row.detail) }
        );
    }
    let _ = writeln!(s, "validation: {}", if report.pass { "pass" } else { "FAIL" });
    s
}

fn run(command: Command, global: &Global) -> pathbarrier::Result<Outcome> {
    match command {
        Command::CheckPc { graph } => {
            let g = io::load_graph(&graph)?;
            Ok(match is_path_complete(&g) {
                PathCompleteness::Complete => {
                    Outcome::new(0, "path-complete\n".into(), json!({"schema_version": 1, "status": "complete"}))
                }
                PathCompleteness::Rejected { word } => Outcome::new(
                    1,
                    format!("not path-complete: rejects {word}\n"),
                    json!({"schema_version": 1, "status": "rejected", "word": word.to_string()}),
                ),
            })
        }
        Command::Compare { g, gbar } => {
            let (g, gbar) = (io::load_graph(&g)?, io::load_graph(&gbar)?);
            let verdict = compare(&g, &gbar)?;
            let (text, detail, code) = match &verdict {
                Comparison::LessOrEqual { map } => {
                    (format!("G <= Gbar (G simulates Gbar via {})\n", map_text(map, &gbar, &g)), json!({"map": map_json(map, &gbar, &g)}), 0)
                }
                Comparison::GreaterOrEqual { map } => {
                    (format!("Gbar <= G (Gbar simulates G via {})\n", map_text(map, &g, &gbar)), json!({"map": map_json(map, &g, &gbar)}), 0)
                }
                Comparison::Both { forward, backward } => (
                    format!(
                        "equivalent (G simulates Gbar via {}; Gbar simulates G via {})\n",
                        map_text(forward, &gbar, &g),
                        map_text(backward, &g, &gbar)
                    ),
                    json!({"forward": map_json(forward, &gbar, &g), "backward": map_json(backward, &g, &gbar)}),
                    0,
                ),
                Comparison::Incomparable => ("incomparable\n".into(), json!({}), 1),
            };
            let verdict_name = serde_json::to_value(&verdict)?["verdict"].clone();
            let mut j = json!({"schema_version": 1, "verdict": verdict_name});
            j.as_object_mut().unwrap().extend(detail.as_object().unwrap().clone());
            Ok(Outcome::new(code, text, j))
        }
        Command::Counterexample { graph } => counterexample(&io::load_graph(&graph)?, global),
        Command::Separate { graph } => separate(&io::load_graph(&graph)?, global),
        Command::Synth { system, graph, spec, template, degree, mult_degree, eps } => {
            let sys = io::load_system(&system)?;
            let g = io::load_graph(&graph)?;
            let spec = io::load_spec(&spec, sys.dimension())?;
            let validation = validation_options(global.tol);
            let backend = ClarabelBackend::default();
            let outcome = match template {
                Template::Quadratic => synth_quadratic_pcbf(&sys, &g, &spec, &QuadraticOptions { eps, validation }, &backend)?,
                Template::Sos => {
                    synth_sos_pcbf(&sys, &g, &spec, &SosOptions { degree, mult_degree, eps, validation }, &backend)?
                }
            };
            synth_outcome(outcome, &g, global)
        }
        Command::Validate { certificate, system, graph, spec } => {
            let sys = io::load_system(&system)?;
            let g = io::load_graph(&graph)?;
            let spec = io::load_spec(&spec, sys.dimension())?;
            let cert = io::certificate_from_json(&io::read_json(&certificate)?, sys.dimension())?;
            let report = validate_certificate(&cert, &sys, &g, &spec, &validation_options(global.tol));
            let mut j = serde_json::to_value(&report)?;
            j["schema_version"] = json!(1);
            Ok(Outcome::new(if report.pass { 0 } else { 1 }, report_text(&report), j))
        }
        Command::Simulate { system, x0, word, repeat, spec, float } => {
            let sys = io::load_system(&system)?;
            let base = Word::parse(&word)?;
            let word = (0..repeat).fold(Word::empty(), |acc, _| acc.concat(&base));
            let spec = spec.map(|p| io::load_spec(&p, sys.dimension())).transpose()?;
            let parts: Vec<&str> = x0.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            let (states, mut j): (Vec<Vec<f64>>, Value) = if sys.is_linear() && !float {
                let x = parts.iter().map(|p| parse_rat(p)).collect::<pathbarrier::Result<Vec<_>>>()?;
                let traj = simulate(&sys, &x, &word)?;
                let states = traj.states.iter().map(|s| s.iter().map(to_f64).collect()).collect();
                (states, io::trajectory_to_json(&traj))
            } else {
                let x = parts
                    .iter()
                    .map(|p| p.parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate {p:?}"))))
                    .collect::<pathbarrier::Result<Vec<_>>>()?;
                let states = simulate_f64(&sys, &x, &word)?;
                let j = io::float_trajectory_to_json(&word, &states);
                (states, j)
            };
            let mut text = String::new();
            for (t, x) in states.iter().enumerate() {
                let _ = writeln!(text, "{t:>4}  {}", x.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "));
            }
            let mut code = 0;
            if let Some(spec) = spec {
                let hit = states.iter().position(|x| spec.unsafe_set.contains_f64(x));
                match hit {
                    Some(t) => {
                        let _ = writeln!(text, "unsafe at step {t}");
                        code = 1;
                    }
                    None => text.push_str("never enters the unsafe set\n"),
                }
                j["first_unsafe_step"] = json!(hit);
            }
            Ok(Outcome::new(code, text, j))
        }
        Command::BruteForce { system, spec, horizon, grid, budget } => {
            let sys = io::load_system(&system)?;
            let spec = io::load_spec(&spec, sys.dimension())?;
            Ok(match brute_force_unsafe(&sys, &spec, horizon, &BruteForceOptions { budget, grid })? {
                Some(w) => Outcome::new(
                    1,
                    format!(
                        "unsafe: word {} from x0 = [{}] reaches the unsafe set after {} steps{}\n",
                        w.word,
                        w.x0.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", "),
                        w.t,
                        if w.exact { " (exact)" } else { " (sampled)" }
                    ),
                    json!({"schema_version": 1, "status": "unsafe", "witness": io::unsafe_witness_to_json(&w)}),
                ),
                None => Outcome::new(
                    0,
                    format!("no violation within horizon {horizon}\n"),
                    json!({"schema_version": 1, "status": "no_violation", "horizon": horizon}),
                ),
            })
        }
        Command::Experiment { count, dim, g, gbar, spec, template, eps, system_override } => {
            let g = g.map_or_else(|| Ok(catalog::graph_platoon()), |p| io::load_graph(&p))?;
            let gbar = gbar.map_or_else(|| Ok(catalog::graph_platoon_lift()), |p| io::load_graph(&p))?;
            let mut cfg = ExperimentConfig::new(count, dim, global.seed, g, gbar);
            if let Some(p) = spec {
                cfg.spec = io::load_spec(&p, dim)?;
            }
            if let Some(p) = system_override {
                cfg.system_override = Some(io::load_system(&p)?);
            }
            let validation = validation_options(global.tol);
            cfg.template = match template {
                Template::Quadratic => ExperimentTemplate::Quadratic(QuadraticOptions { eps, validation }),
                Template::Sos => ExperimentTemplate::Sos(SosOptions { eps, validation, ..SosOptions::default() }),
            };
            let tally = run_experiment(&cfg, &ClarabelBackend::default())?;
            experiment_outcome(&tally, global)
        }
    }
}

fn experiment_outcome(tally: &ExperimentTally, global: &Global) -> pathbarrier::Result<Outcome> {
    if let Some(dir) = &global.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("tally.txt"), emit_report(tally, ReportFormat::Text)?)?;
        std::fs::write(dir.join("tally.json"), emit_report(tally, ReportFormat::Json)?)?;
        std::fs::write(dir.join("tally.csv"), emit_report(tally, ReportFormat::Csv)?)?;
        let mut rows = String::from("index,g_status,gbar_status,millis\n");
        for r in &tally.records {
            let _ = writeln!(rows, "{},{},{},{}", r.index, r.g_status, r.gbar_status, r.millis);
        }
        std::fs::write(dir.join("instances.csv"), rows)?;
    }
    let text = match global.format {
        Format::Csv => emit_report(tally, ReportFormat::Csv)?,
        _ => emit_report(tally, ReportFormat::Text)?,
    };
    let mut j = serde_json::to_value(tally)?;
    j["schema_version"] = json!(1);
    // only_g > 0 would contradict the simulation ordering between the graphs.
    Ok(Outcome::new(if tally.only_g == 0 { 0 } else { 1 }, text, j))
}

fn synth_outcome(outcome: SynthOutcome, g: &LabeledGraph, global: &Global) -> pathbarrier::Result<Outcome> {
    let status = outcome.status();
    Ok(match outcome {
        SynthOutcome::Certified { certificate, report } => {
            let cert_json = io::certificate_to_json(&certificate, g);
            let mut report_json = serde_json::to_value(&report)?;
            report_json["schema_version"] = json!(1);
            if let Some(dir) = &global.out {
                std::fs::create_dir_all(dir)?;
                io::write_json(&dir.join("certificate.json"), &cert_json)?;
                io::write_json(&dir.join("validation.json"), &report_json)?;
            }
            let text = format!("certified ({} template)\n{}", certificate.template(), report_text(&report));
            Outcome::new(0, text, json!({"schema_version": 1, "status": status, "certificate": cert_json, "validation": report_json}))
        }
        SynthOutcome::Rejected { report } => {
            let mut report_json = serde_json::to_value(&report)?;
            report_json["schema_version"] = json!(1);
            let text = format!("solver values rejected by validation\n{}", report_text(&report));
            Outcome::new(1, text, json!({"schema_version": 1, "status": status, "validation": report_json}))
        }
        SynthOutcome::Infeasible => {
            Outcome::new(1, "infeasible\n".into(), json!({"schema_version": 1, "status": status}))
        }
        SynthOutcome::Unknown(msg) => {
            Outcome::new(3, format!("solver stopped without a verdict: {msg}\n"), json!({"schema_version": 1, "status": status, "detail": msg}))
        }
    })
}

fn counterexample(g: &LabeledGraph, global: &Global) -> pathbarrier::Result<Outcome> {
    let dir = require_out(global)?;
    let inst = run_necessity_pipeline(g)?;
    let eps = pathbarrier::rational::rat(1) / pathbarrier::rational::rat(2);
    io::write_json(&dir.join("system.json"), &io::system_to_json(&inst.system))?;
    io::write_json(&dir.join("spec.json"), &io::spec_to_json(&inst.spec))?;
    io::write_json(&dir.join("certificate.json"), &io::diagonal_family_to_json(&inst.coeffs, g, &eps))?;
    let mut witness = io::trajectory_to_json(&inst.witness);
    witness["final_norm2"] = json!(format_rat(&pathbarrier::rational::norm2(inst.witness.final_state())));
    io::write_json(&dir.join("witness.json"), &witness)?;

    let mut text = String::new();
    let _ = writeln!(text, "graph rejects {} (length {})", inst.word, inst.word.len());
    let _ = writeln!(text, "system: dimension {}, {} modes, X0 = |x|^2 <= {}, Xu = |x|^2 >= 1", inst.system.dimension(), inst.system.alphabet().size(), format_rat(match &inst.spec.initial {
        pathbarrier::Region::Ball { r2 } => r2,
        _ => unreachable!("counterexample spec uses a ball"),
    }));
    let _ = writeln!(
        text,
        "witness: x0 = [{}] reaches [{}] under {}",
        inst.witness.initial().iter().map(format_rat).collect::<Vec<_>>().join(", "),
        inst.witness.final_state().iter().map(format_rat).collect::<Vec<_>>().join(", "),
        inst.word
    );
    let _ = writeln!(text, "auxiliary graph: {} edges, longest path {}", inst.aux.edges.len(), inst.aux.longest_path()?);
    for (v, p) in inst.coeffs.iter().enumerate() {
        let _ = writeln!(text, "p_{} = [{}]", g.node_name(v), p.iter().map(format_rat).collect::<Vec<_>>().join(", "));
    }
    for e in &inst.report.edges {
        let _ = writeln!(text, "edge {} {}", g.format_edge(e.edge), if e.pass { "ok" } else { "FAIL" });
    }
    let _ = writeln!(text, "admissible barrier family: {}", if inst.report.pass { "yes" } else { "NO" });
    let _ = writeln!(text, "verified: {}", if inst.verified() { "yes" } else { "NO" });
    std::fs::write(dir.join("report.txt"), &text)?;

    let j = json!({
        "schema_version": 1,
        "word": inst.word.to_string(),
        "dimension": inst.system.dimension(),
        "coefficients": inst.coeffs.iter().map(|p| p.iter().map(format_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "admissibility": inst.report,
        "verified": inst.verified(),
    });
    io::write_json(&dir.join("report.json"), &j)?;
    Ok(Outcome::new(if inst.verified() { 0 } else { 1 }, text, j))
}

fn separate(g: &LabeledGraph, global: &Global) -> pathbarrier::Result<Outcome> {
    let dir = require_out(global)?;
    let inst = build_separating_instance(g)?;
    let report = verify_separation(&inst);
    io::write_json(&dir.join("system.json"), &io::system_to_json(&inst.system))?;
    io::write_json(&dir.join("spec.json"), &io::spec_to_json(&inst.spec))?;
    io::write_json(&dir.join("certificate.json"), &io::diagonal_family_to_json(&inst.qcoeffs, g, &pathbarrier::rational::rat(0)))?;
    let j = json!({
        "schema_version": 1,
        "tilde_edges": inst.tilde_edges.iter().map(|&e| g.format_edge(e)).collect::<Vec<_>>(),
        "dimension": inst.system.dimension(),
        "coefficients": inst.qcoeffs.iter().map(|p| p.iter().map(format_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "report": report,
    });
    io::write_json(&dir.join("report.json"), &j)?;

    let mut text = String::new();
    let _ = writeln!(text, "separating instance: dimension {}, {} non-edges", inst.system.dimension(), inst.tilde_edges.len());
    for c in &report.edge_checks {
        let _ = writeln!(text, "edge {} block {} {}", g.format_edge(c.edge), c.block, if c.pass { "ok" } else { "FAIL" });
    }
    for w in &report.witnesses {
        let _ = writeln!(
            text,
            "non-edge {} block {}: gap {} {}",
            g.format_edge(w.edge),
            w.block,
            format_rat(&w.gap),
            if w.pass { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(text, "separation verified: {}", if report.pass { "yes" } else { "NO" });
    std::fs::write(dir.join("report.txt"), &text)?;
    Ok(Outcome::new(if report.pass { 0 } else { 1 }, text, j))
}
