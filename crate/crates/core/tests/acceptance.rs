//! Acceptance suite. Runs as a plain binary (`harness = false`) so every
//! criterion prints exactly one PASS/FAIL line, with its timing.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pathbarrier::catalog;
use pathbarrier::conic::ClarabelBackend;
use pathbarrier::experiment::{run_experiment, ExperimentConfig};
use pathbarrier::graph::{
    accepts, find_simulation, is_path_complete, random_graph, verify_simulation, LabeledGraph, PathCompleteness,
    SimulationMap,
};
use pathbarrier::necessity::{run_necessity_pipeline, shift_pattern};
use pathbarrier::rational::{norm2, rat, ratio, Rat, RatMatrix};
use pathbarrier::region::{Region, SafetySpec};
use pathbarrier::safety::{brute_force_unsafe, random_stable_system_with, BruteForceOptions};
use pathbarrier::separation::{build_separating_instance, verify_separation};
use pathbarrier::synthesis::{
    synth_quadratic_pcbf, synth_sos_pcbf, transport_certificate, validate_certificate, Certificate,
    QuadraticOptions, SosOptions, SynthOutcome, ValidationOptions,
};
use pathbarrier::system::{simulate, simulate_f64, Alphabet, SwitchedSystem, Word};

// Pinned tolerances.
const EIG_TOL: f64 = 1e-7;
const COEFF_TOL: f64 = 1e-7;
const GRID_MARGIN: f64 = 1e-6;
const GRID_POINTS: usize = 21;
const WITNESS_TOL: f64 = 1e-7;

fn validation() -> ValidationOptions {
    ValidationOptions { eig_tol: EIG_TOL, coeff_tol: COEFF_TOL, grid: GRID_POINTS, sample_tol: GRID_MARGIN }
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn alpha(m: usize) -> Alphabet {
    Alphabet::new(m).unwrap()
}

// ---- 1 --------------------------------------------------------------------

/// Walks every word up to `max_len` letters, tracking the set of vertices
/// where a path labeled by the prefix can end. Returns the shortest rejected
/// word, lexicographically least among those. A subset already reached by
/// an earlier (hence shorter or lex-smaller) prefix of no greater length is
/// not expanded again.
fn enumerate_rejected(g: &LabeledGraph, max_len: usize) -> Option<Word> {
    let m = g.alphabet().size();
    let nv = g.num_vertices();
    let mut next = vec![[0u32; 4]; nv];
    for (v, s, w) in g.edges() {
        next[v][s] |= 1 << w;
    }
    // Words packed as base-m digits: for equal lengths code order is lex order.
    let mut best: Option<(usize, u64)> = None;
    let mut depth = [u8::MAX; 256];
    walk(&next, m, (1 << nv) - 1, 0, 0, max_len, &mut best, &mut depth);
    best.map(|(len, code)| unpack(code, len, m))
}

#[allow(clippy::too_many_arguments)]
fn walk(
    next: &[[u32; 4]],
    m: usize,
    set: u32,
    len: usize,
    code: u64,
    max_len: usize,
    best: &mut Option<(usize, u64)>,
    depth: &mut [u8; 256],
) {
    if depth[set as usize] as usize <= len {
        return;
    }
    depth[set as usize] = len as u8;
    for s in 1..=m {
        let mut out = 0;
        for (v, row) in next.iter().enumerate() {
            if set & (1 << v) != 0 {
                out |= row[s];
            }
        }
        let here = (len + 1, code * m as u64 + (s - 1) as u64);
        if out == 0 {
            if best.is_none_or(|b| here < b) {
                *best = Some(here);
            }
        } else if len + 1 < max_len && best.is_none_or(|b| b.0 > len + 1) {
            walk(next, m, out, here.0, here.1, max_len, best, depth);
        }
    }
}

fn unpack(mut code: u64, len: usize, m: usize) -> Word {
    let mut letters = vec![0; len];
    for slot in letters.iter_mut().rev() {
        *slot = (code % m as u64) as usize + 1;
        code /= m as u64;
    }
    Word::new(letters)
}

fn all_graphs(nv: usize, m: usize) -> impl ParallelIterator<Item = LabeledGraph> {
    let triples: Vec<(usize, usize, usize)> =
        (0..nv).flat_map(|v| (1..=m).flat_map(move |s| (0..nv).map(move |w| (v, s, w)))).collect();
    let count = 1u64 << triples.len();
    let empty = LabeledGraph::with_vertices(alpha(m), nv, []).unwrap();
    (0..count).into_par_iter().map(move |mask| {
        let mut g = empty.clone();
        for (i, &e) in triples.iter().enumerate() {
            if mask & (1 << i) != 0 {
                g.add_edge(e).unwrap();
            }
        }
        g
    })
}

fn criterion_1() -> Check {
    let ga = catalog::graph_a();
    ensure(is_path_complete(&ga) == PathCompleteness::Complete, || "Ga not complete".into())?;
    let gb = catalog::graph_b();
    let expected = Word::parse("(121)").unwrap();
    match is_path_complete(&gb) {
        PathCompleteness::Rejected { word } if word == expected => {}
        other => return Err(format!("Gb gave {other:?}")),
    }
    ensure(!accepts(&gb, &expected).unwrap(), || "Gb accepts (121)".into())?;
    let mut checked = 0usize;
    for nv in 1..=3 {
        for m in 1..=2 {
            let bad = all_graphs(nv, m)
                .filter(|g| {
                    let oracle = enumerate_rejected(g, 1 << nv);
                    match (is_path_complete(g), oracle) {
                        (PathCompleteness::Complete, None) => false,
                        (PathCompleteness::Rejected { word }, Some(w)) => word != w || accepts(g, &word).unwrap(),
                        _ => true,
                    }
                })
                .count();
            ensure(bad == 0, || format!("{bad} disagreements at |V|={nv}, m={m}"))?;
            checked += 1 << (nv * nv * m);
        }
    }
    Ok(format!("{checked} graphs cross-checked"))
}

// ---- 2 --------------------------------------------------------------------

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut graphs = Vec::new();
    while graphs.len() < 100 {
        let nv = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=3);
        let density = rng.gen_range(0.2..0.9);
        let g = random_graph(&mut rng, alpha(m), nv, density);
        if !is_path_complete(&g).is_complete() {
            graphs.push(g);
        }
    }
    let mut max_k = 0;
    for g in &graphs {
        let inst = run_necessity_pipeline(g).map_err(|e| format!("{g}: {e}"))?;
        let k = inst.word.len();
        max_k = max_k.max(k);
        ensure(!accepts(g, &inst.word).unwrap(), || format!("{g}: word {} is accepted", inst.word))?;
        // (a) independent replay of the witness.
        let traj = simulate(&inst.system, inst.witness.initial(), &inst.word).map_err(|e| e.to_string())?;
        ensure(inst.spec.initial.contains(traj.initial()).unwrap(), || format!("{g}: x0 outside X0"))?;
        ensure(traj.states.len() == k + 1, || "trajectory length".into())?;
        ensure(inst.spec.unsafe_set.contains(traj.final_state()).unwrap(), || format!("{g}: x(k) outside Xu"))?;
        ensure(norm2(traj.final_state()) >= Rat::one(), || "final norm".into())?;
        // (b) coefficient bounds and the vector inequality, recomputed from the modes.
        let n = k + 1;
        let cap = Rat::from_integer(4.into()).pow(k as i32);
        for p in &inst.coeffs {
            ensure(p.len() == n && p.iter().all(|c| *c > Rat::one() && *c <= cap), || format!("{g}: bounds"))?;
        }
        for (v, s, w) in g.edges() {
            let a = inst.system.modes()[s - 1].as_linear().unwrap();
            for i in 0..n {
                let mut lhs = Rat::zero();
                for ip in 0..n {
                    // Â = A/2, so 4·Â[i',i]·p = A[i',i]²·p for 0/2 entries.
                    lhs += &a[(ip, i)] * &a[(ip, i)] * &inst.coeffs[w][ip];
                }
                ensure(lhs <= inst.coeffs[v][i], || format!("{g}: edge ({v},{s},{w}) row {i}"))?;
            }
        }
        ensure(inst.verified(), || format!("{g}: pipeline verdict false"))?;
    }
    Ok(format!("100 graphs, longest rejected word {max_k}"))
}

// ---- 3 --------------------------------------------------------------------

fn int_matrix(rows: &[[i64; 4]; 4]) -> RatMatrix {
    RatMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect()).unwrap()
}

fn criterion_3() -> Check {
    let g = catalog::graph_b();
    let w = catalog::counterexample_word();
    ensure(w == Word::parse("(121)").unwrap(), || "word".into())?;
    let a1 = int_matrix(&[[0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0]]);
    let a2 = int_matrix(&[[0, 0, 0, 0], [0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0]]);
    ensure(shift_pattern(&w, 1) == a1, || "Â_1 mismatch".into())?;
    ensure(shift_pattern(&w, 2) == a2, || "Â_2 mismatch".into())?;
    let inst = run_necessity_pipeline(&g).map_err(|e| e.to_string())?;
    ensure(inst.word == w, || format!("pipeline picked {}", inst.word))?;
    ensure(inst.system.modes()[0].as_linear() == Some(&a1.scale(&rat(2))), || "A_1 != 2Â_1".into())?;
    ensure(inst.spec.initial == Region::Ball { r2: ratio(1, 64) }, || "X0 radius".into())?;
    let p = |xs: [i64; 4]| xs.iter().map(|&x| rat(x)).collect::<Vec<_>>();
    ensure(inst.coeffs == vec![p([64, 16, 16, 4]), p([4, 64, 4, 4])], || format!("coefficients {:?}", inst.coeffs))?;
    ensure(inst.report.pass, || "admissibility".into())?;
    ensure(inst.witness.final_state() == [rat(0), rat(0), rat(0), rat(1)], || "witness endpoint".into())?;
    Ok("exact match".into())
}

// ---- 4 --------------------------------------------------------------------

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut done = 0;
    while done < 200 {
        let nv = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=3);
        let density = rng.gen_range(0.1..0.95);
        let g = random_graph(&mut rng, alpha(m), nv, density);
        if g.non_edges().is_empty() {
            continue;
        }
        let inst = build_separating_instance(&g).map_err(|e| e.to_string())?;
        let report = verify_separation(&inst);
        ensure(report.pass, || format!("{g}: report fails"))?;
        ensure(report.witnesses.len() == g.non_edges().len(), || "witness count".into())?;
        // Oracle: D = Q_v − A_σᵀ Q_w A_σ, exactly, for every labeled pair.
        let n = inst.system.dimension();
        let diag = |q: &[Rat]| {
            let mut d = RatMatrix::zeros(n, n);
            for i in 0..n {
                d[(i, i)] = q[i].clone();
            }
            d
        };
        for v in 0..nv {
            for s in 1..=m {
                for w in 0..nv {
                    let a = inst.system.modes()[s - 1].as_linear().unwrap();
                    let back = a.transpose().mul(&diag(&inst.qcoeffs[w])).unwrap().mul(a).unwrap();
                    let qv = diag(&inst.qcoeffs[v]);
                    let min_diag = (0..n).map(|i| &qv[(i, i)] - &back[(i, i)]).min().unwrap();
                    let off_zero = (0..n).all(|i| (0..n).all(|j| i == j || back[(i, j)].is_zero()));
                    ensure(off_zero, || "non-diagonal difference".into())?;
                    if g.has_edge((v, s, w)) {
                        ensure(min_diag >= Rat::zero(), || format!("{g}: edge ({v},{s},{w}) violated"))?;
                    } else {
                        ensure(min_diag == -ratio(1, 6), || format!("{g}: non-edge ({v},{s},{w}) gap {min_diag}"))?;
                    }
                }
            }
        }
        let (lo, hi) = (ratio(1, 3), Rat::one());
        ensure(inst.qcoeffs.iter().flatten().all(|c| *c >= lo && *c <= hi), || "weights out of range".into())?;
        done += 1;
    }
    Ok("200 graphs".into())
}

// ---- 5 --------------------------------------------------------------------

/// Random Ḡ with a planted map into `g`, keeping each compatible edge with
/// probability 0.7.
fn lifted_graph(rng: &mut ChaCha8Rng, g: &LabeledGraph) -> LabeledGraph {
    let nb = rng.gen_range(1..=4);
    let plant: Vec<usize> = (0..nb).map(|_| rng.gen_range(0..g.num_vertices())).collect();
    let mut edges = Vec::new();
    for a in 0..nb {
        for s in g.alphabet().symbols() {
            for b in 0..nb {
                if g.has_edge((plant[a], s, plant[b])) && rng.gen_bool(0.7) {
                    edges.push((a, s, b));
                }
            }
        }
    }
    LabeledGraph::with_vertices(g.alphabet(), nb, edges).unwrap()
}

fn criterion_5() -> Check {
    let backend = ClarabelBackend::default();
    let spec = SafetySpec::balls(rat(4), rat(9)).unwrap();
    let opts = QuadraticOptions { validation: validation(), ..QuadraticOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut tuples, mut attempts) = (0, 0);
    while tuples < 50 {
        attempts += 1;
        ensure(attempts <= 2000, || format!("only {tuples} usable tuples in 2000 attempts"))?;
        let m = rng.gen_range(1..=2);
        let nv = rng.gen_range(1..=3);
        let g = random_graph(&mut rng, alpha(m), nv, 0.6);
        if !is_path_complete(&g).is_complete() {
            continue;
        }
        let gbar = lifted_graph(&mut rng, &g);
        let Some(map) = find_simulation(&g, &gbar).map_err(|e| e.to_string())? else {
            continue;
        };
        verify_simulation(&g, &gbar, &map).map_err(|e| e.to_string())?;
        let sys = random_stable_system_with(2, alpha(m), &mut rng).map_err(|e| e.to_string())?;
        let SynthOutcome::Certified { certificate, .. } =
            synth_quadratic_pcbf(&sys, &g, &spec, &opts, &backend).map_err(|e| e.to_string())?
        else {
            continue;
        };
        let moved = transport_certificate(&certificate, &g, &gbar, &map).map_err(|e| e.to_string())?;
        let report = validate_certificate(&moved, &sys, &gbar, &spec, &validation());
        ensure(report.pass, || format!("transported certificate fails on {gbar}: {:?}", report.failures().next()))?;
        tuples += 1;
    }
    Ok(format!("50/50 transported certificates validate ({attempts} draws)"))
}

// ---- 6 --------------------------------------------------------------------

fn criterion_6() -> Check {
    let (g, gbar) = (catalog::graph_platoon(), catalog::graph_platoon_lift());
    verify_simulation(&g, &gbar, &SimulationMap(vec![0, 1, 0])).map_err(|e| e.to_string())?;
    ensure(find_simulation(&g, &gbar).unwrap().is_some(), || "no simulation found".into())?;
    let cfg = ExperimentConfig::new(300, 3, 6, g, gbar);
    let tally = run_experiment(&cfg, &ClarabelBackend::default()).map_err(|e| e.to_string())?;
    ensure(tally.total() == 300, || "partition".into())?;
    ensure(tally.only_g == 0, || format!("only_g = {}", tally.only_g))?;
    let soft = if tally.only_gbar >= 1 { "" } else { " [warning: only_gbar = 0]" };
    Ok(format!(
        "neither {} both {} only_gbar {} only_g {}{soft}",
        tally.neither, tally.both, tally.only_gbar, tally.only_g
    ))
}

// ---- 7 --------------------------------------------------------------------

fn scalar_system(num: i64, den: i64) -> SwitchedSystem {
    SwitchedSystem::linear(vec![RatMatrix::identity(3).scale(&ratio(num, den))]).unwrap()
}

fn criterion_7() -> Check {
    let backend = ClarabelBackend::default();
    let spec = SafetySpec::balls(rat(4), rat(9)).unwrap();
    let g = LabeledGraph::with_vertices(alpha(1), 1, [(0, 1, 0)]).unwrap();
    let opts = QuadraticOptions { validation: validation(), ..QuadraticOptions::default() };

    let half = scalar_system(1, 2);
    let out = synth_quadratic_pcbf(&half, &g, &spec, &opts, &backend).map_err(|e| e.to_string())?;
    let SynthOutcome::Certified { certificate, report } = out else {
        return Err(format!("0.5·I gave {}", out.status()));
    };
    ensure(report.pass, || "0.5·I report".into())?;
    ensure(validate_certificate(&certificate, &half, &g, &spec, &validation()).pass, || "revalidation".into())?;

    let double = scalar_system(2, 1);
    let out = synth_quadratic_pcbf(&double, &g, &spec, &opts, &backend).map_err(|e| e.to_string())?;
    ensure(matches!(out, SynthOutcome::Infeasible), || format!("2·I gave {}", out.status()))?;
    let w = brute_force_unsafe(&double, &spec, 1, &BruteForceOptions::default())
        .map_err(|e| e.to_string())?
        .ok_or("no witness at L = 1")?;
    ensure(w.exact && w.t == 1 && w.word == Word::new(vec![1]), || format!("witness {w:?}"))?;
    let x0n: f64 = w.x0.iter().map(|x| x * x).sum();
    let replay = simulate_f64(&double, &w.x0, &w.word).map_err(|e| e.to_string())?;
    let xtn: f64 = replay[1].iter().map(|x| x * x).sum();
    ensure(x0n <= 4.0 + WITNESS_TOL && xtn >= 9.0 - WITNESS_TOL, || format!("|x0|²={x0n}, |x1|²={xtn}"))?;
    Ok(format!("|x0|² = {x0n:.6}, |x1|² = {xtn:.6}"))
}

// ---- 8 --------------------------------------------------------------------

fn sos_options() -> SosOptions {
    SosOptions { degree: 2, mult_degree: 2, validation: validation(), ..SosOptions::default() }
}

fn criterion_8() -> Check {
    let sys = catalog::platoon();
    let g = catalog::graph_platoon();
    ensure(is_path_complete(&g).is_complete(), || "graph not complete".into())?;
    let out = synth_sos_pcbf(&sys, &g, &catalog::platoon_spec(), &sos_options(), &ClarabelBackend::default())
        .map_err(|e| e.to_string())?;
    match out {
        SynthOutcome::Certified { certificate: Certificate::Sos(c), report } => {
            let worst = report.rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
            ensure(report.pass, || "report".into())?;
            Ok(format!("{} identities, worst margin {worst:.2e}", c.identities.len()))
        }
        SynthOutcome::Rejected { report } => Err(format!("validation failed: {:?}", report.failures().collect::<Vec<_>>())),
        other => Err(format!("status {}", other.status())),
    }
}

// ---- 9 --------------------------------------------------------------------

fn criterion_9() -> Check {
    let sys = catalog::platoon_modified();
    let spec = catalog::platoon_spec();
    // Unsafe by simulation: u = 0 throughout from the X0 corner (0, 1).
    let x0 = [rat(0), rat(1)];
    ensure(spec.initial.contains(&x0).unwrap() && spec.state.contains(&x0).unwrap(), || "x0 not in X0".into())?;
    let word = Word::new(vec![2; 50]);
    let traj = simulate_f64(&sys, &[0.0, 1.0], &word).map_err(|e| e.to_string())?;
    let t = traj.iter().position(|x| spec.unsafe_set.contains_f64(x)).ok_or("no unsafe state within 50 steps")?;
    // Confirm the hit exactly.
    let exact = simulate(&sys, &x0, &Word::new(vec![2; t])).map_err(|e| e.to_string())?;
    ensure(spec.unsafe_set.contains(exact.final_state()).unwrap(), || "exact replay not unsafe".into())?;

    let np = catalog::graph_platoon_non_pc();
    ensure(!is_path_complete(&np).is_complete(), || "graph unexpectedly complete".into())?;
    let out = synth_sos_pcbf(&sys, &np, &spec, &sos_options(), &ClarabelBackend::default()).map_err(|e| e.to_string())?;
    ensure(out.is_certified(), || format!("non-PC synthesis gave {}; {}", out.status(), one_step_obstruction(&sys, &spec, &np)))?;
    Ok(format!("unsafe at step {t}; certificate found on the non-path-complete graph"))
}

/// Looks for an exact point of X0 that one step of a mode labeling some edge
/// of `g` sends into Xu. Such a point rules out every graph-based barrier on
/// `g`: the edge forces `B_w(f(x0)) ≤ B_v(x0) ≤ 0 < B_w(f(x0))`.
fn one_step_obstruction(sys: &SwitchedSystem, spec: &SafetySpec, g: &LabeledGraph) -> String {
    let corners = [[rat(0), rat(1)], [rat(0), rat(2)], [rat(3), rat(4)], [rat(3), rat(5)]];
    for x0 in &corners {
        if !spec.initial.contains(x0).unwrap() {
            continue;
        }
        for (v, s, w) in g.edges() {
            let next = sys.step(s, x0).unwrap();
            if spec.unsafe_set.contains(&next).unwrap() {
                return format!(
                    "exact obstruction: x0 = ({}, {}) in X0, f{s}(x0) = ({}, {}) in Xu, edge ({v}, {s}, {w}) present",
                    x0[0], x0[1], next[0], next[1]
                );
            }
        }
    }
    "no one-step obstruction among the X0 corners".into()
}

// ---- runner ---------------------------------------------------------------

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Check, Option<Duration>);
    let criteria: [Criterion; 9] = [
        ("path-completeness", criterion_1, Some(Duration::from_secs(1))),
        ("necessity pipeline", criterion_2, Some(Duration::from_secs(10))),
        ("worked counterexample", criterion_3, None),
        ("separation", criterion_4, Some(Duration::from_secs(10))),
        ("certificate transport", criterion_5, None),
        ("random-system experiment", criterion_6, Some(Duration::from_secs(300))),
        ("quadratic sanity", criterion_7, Some(Duration::from_secs(1))),
        ("platoon SOS", criterion_8, Some(Duration::from_secs(60))),
        ("non-path-complete warning", criterion_9, None),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|p| *p == id || name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, budget) {
            (Ok(_), Some(b)) if elapsed > *b => Err(format!("over budget ({:.2?} > {b:?})", elapsed)),
            (r, _) => r,
        };
        match result {
            Ok(msg) => println!("criterion {id} ({name}): PASS in {elapsed:.2?}; {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL in {elapsed:.2?}; {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
