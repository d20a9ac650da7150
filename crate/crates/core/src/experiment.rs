//! Seeded comparison of two graphs on random stable linear systems.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::ConicBackend;
use crate::error::{Error, Result};
use crate::graph::{is_path_complete, LabeledGraph, PathCompleteness};
use crate::rational::rat;
use crate::region::SafetySpec;
use crate::safety::random_stable_system_with;
use crate::synthesis::{synth_quadratic_pcbf, synth_sos_pcbf, QuadraticOptions, SosOptions, SynthOutcome};
use crate::system::{Alphabet, SwitchedSystem};

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub count: usize,
    pub dim: usize,
    pub alphabet: Alphabet,
    pub seed: u64,
    pub g: LabeledGraph,
    pub gbar: LabeledGraph,
    pub spec: SafetySpec,
    pub template: ExperimentTemplate,
    /// Replaces the random draw for every instance when set.
    pub system_override: Option<SwitchedSystem>,
}

impl ExperimentConfig {
    /// `X0 = {‖x‖² ≤ 4}`, `Xu = {‖x‖² ≥ 9}`.
    pub fn new(count: usize, dim: usize, seed: u64, g: LabeledGraph, gbar: LabeledGraph) -> Self {
        Self {
            count,
            dim,
            alphabet: g.alphabet(),
            seed,
            g,
            gbar,
            spec: SafetySpec::balls(rat(4), rat(9)).expect("positive radii"),
            template: ExperimentTemplate::Quadratic(QuadraticOptions::default()),
            system_override: None,
        }
    }
}

/// Barrier template used for every instance. `Sos` with degree 2 adds the
/// linear and constant terms that the pure quadratic LMI omits.
#[derive(Clone, Debug)]
pub enum ExperimentTemplate {
    Quadratic(QuadraticOptions),
    Sos(SosOptions),
}

impl ExperimentTemplate {
    fn synth(&self, sys: &SwitchedSystem, g: &LabeledGraph, spec: &SafetySpec, backend: &dyn ConicBackend) -> Result<SynthOutcome> {
        match self {
            ExperimentTemplate::Quadratic(o) => synth_quadratic_pcbf(sys, g, spec, o, backend),
            ExperimentTemplate::Sos(o) => synth_sos_pcbf(sys, g, spec, o, backend),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub g_feasible: bool,
    pub gbar_feasible: bool,
    pub g_status: String,
    pub gbar_status: String,
    pub millis: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentTally {
    pub neither: usize,
    pub both: usize,
    pub only_gbar: usize,
    pub only_g: usize,
    pub records: Vec<InstanceRecord>,
}

impl ExperimentTally {
    pub fn total(&self) -> usize {
        self.neither + self.both + self.only_gbar + self.only_g
    }

    fn record(&mut self, r: InstanceRecord) {
        match (r.g_feasible, r.gbar_feasible) {
            (false, false) => self.neither += 1,
            (true, true) => self.both += 1,
            (false, true) => self.only_gbar += 1,
            (true, false) => self.only_g += 1,
        }
        self.records.push(r);
    }
}

/// System for instance `index`: ChaCha8 seeded with `seed`, stream `index`.
pub fn instance_system(seed: u64, index: usize, dim: usize, alphabet: Alphabet) -> Result<SwitchedSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    random_stable_system_with(dim, alphabet, &mut rng)
}

pub fn run_experiment(cfg: &ExperimentConfig, backend: &dyn ConicBackend) -> Result<ExperimentTally> {
    if cfg.count == 0 {
        return Err(Error::Parse("experiment count must be at least 1".into()));
    }
    for (which, graph) in [("G", &cfg.g), ("Gbar", &cfg.gbar)] {
        if let PathCompleteness::Rejected { word } = is_path_complete(graph) {
            return Err(Error::NonPathComplete { which: which.into(), word });
        }
    }
    let records: Vec<InstanceRecord> = (0..cfg.count)
        .into_par_iter()
        .map(|index| -> Result<InstanceRecord> {
            let start = Instant::now();
            let sys = match &cfg.system_override {
                Some(s) => s.clone(),
                None => instance_system(cfg.seed, index, cfg.dim, cfg.alphabet)?,
            };
            let on_g = cfg.template.synth(&sys, &cfg.g, &cfg.spec, backend)?;
            let on_gbar = cfg.template.synth(&sys, &cfg.gbar, &cfg.spec, backend)?;
            Ok(InstanceRecord {
                index,
                g_feasible: on_g.is_certified(),
                gbar_feasible: on_gbar.is_certified(),
                g_status: on_g.status().into(),
                gbar_status: on_gbar.status().into(),
                millis: start.elapsed().as_millis() as u64,
            })
        })
        .collect::<Result<_>>()?;
    let mut tally = ExperimentTally::default();
    for r in records {
        tally.record(r);
    }
    Ok(tally)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::UnknownFormat(other.into())),
        }
    }
}

pub fn emit_report(tally: &ExperimentTally, format: ReportFormat) -> Result<String> {
    let counts = [
        ("neither", tally.neither),
        ("both", tally.both),
        ("only_gbar", tally.only_gbar),
        ("only_g", tally.only_g),
    ];
    Ok(match format {
        ReportFormat::Text => {
            let mut out = String::new();
            for (label, c) in counts {
                out.push_str(&format!("{label:<10} {c}\n"));
            }
            out.push_str(&format!("{:<10} {}\n", "total", tally.total()));
            out
        }
        ReportFormat::Json => serde_json::to_string_pretty(tally)?,
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["outcome", "count"]).map_err(csv_err)?;
            for (label, c) in counts {
                w.write_record([label, &c.to_string()]).map_err(csv_err)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?)
                .map_err(|e| Error::Parse(e.to_string()))?
        }
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally() -> ExperimentTally {
        ExperimentTally { neither: 10, both: 5, only_gbar: 2, only_g: 0, records: Vec::new() }
    }

    #[test]
    fn text_report_lists_counts() {
        let s = emit_report(&tally(), ReportFormat::Text).unwrap();
        assert!(s.contains("neither    10") && s.contains("only_g     0") && s.contains("total      17"));
    }

    #[test]
    fn json_round_trip() {
        let s = emit_report(&tally(), ReportFormat::Json).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentTally>(&s).unwrap(), tally());
    }

    #[test]
    fn csv_has_header_and_four_rows() {
        let s = emit_report(&tally(), ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines, ["outcome,count", "neither,10", "both,5", "only_gbar,2", "only_g,0"]);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
