//! Solver-backed properties: sampled barrier conditions, SOS identity
//! reconstruction, and the experiment harness.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pathbarrier::catalog;
use pathbarrier::conic::ClarabelBackend;
use pathbarrier::experiment::{run_experiment, ExperimentConfig};
use pathbarrier::graph::LabeledGraph;
use pathbarrier::polynomial::FloatPoly;
use pathbarrier::rational::{rat, ratio, RatMatrix};
use pathbarrier::region::SafetySpec;
use pathbarrier::safety::random_stable_system;
use pathbarrier::synthesis::{
    synth_quadratic_pcbf, synth_sos_pcbf, Certificate, Condition, QuadraticOptions, SosOptions,
    DEFAULT_EPS,
};
use pathbarrier::system::{Alphabet, SwitchedSystem};

const SAMPLE_TOL: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-7;

fn alphabet(m: usize) -> Alphabet {
    Alphabet::new(m).unwrap()
}

/// Uniform direction scaled to a squared radius drawn from `r2`.
fn on_sphere(rng: &mut ChaCha8Rng, n: usize, r2: std::ops::Range<f64>) -> Vec<f64> {
    let r2 = rng.gen_range(r2);
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.iter().map(|c| c / norm * r2.sqrt()).collect();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quadratic_certificates_hold_at_sampled_points(seed in any::<u64>()) {
        let n = 2;
        // Shrunk so that most draws admit a certificate.
        let sys = random_stable_system(n, alphabet(2), seed).unwrap();
        let shrunk = sys.modes().iter().map(|m| m.as_linear().unwrap().scale(&ratio(1, 3))).collect();
        let sys = SwitchedSystem::linear(shrunk).unwrap();
        let g = catalog::graph_a();
        let spec = SafetySpec::balls(rat(4), rat(9)).unwrap();
        let out = synth_quadratic_pcbf(&sys, &g, &spec, &QuadraticOptions::default(), &ClarabelBackend::default()).unwrap();
        let cert = match out.certificate().cloned() {
            Some(Certificate::Quadratic(cert)) => cert,
            _ => { prop_assume!(false); unreachable!() }
        };
        let mats = sys.float_matrices().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..10_000 {
            let v = rng.gen_range(0..g.num_vertices());
            let x0 = on_sphere(&mut rng, n, 0.0..4.0);
            prop_assert!(cert.barrier_value(v, &x0) <= SAMPLE_TOL);
            let xu = on_sphere(&mut rng, n, 9.0..30.0);
            prop_assert!(cert.barrier_value(v, &xu) >= cert.eps - SAMPLE_TOL);
        }
        for (v, s, w) in g.edges() {
            for _ in 0..1000 {
                let x = on_sphere(&mut rng, n, 0.0..20.0);
                let next: Vec<f64> = (0..n).map(|i| (0..n).map(|j| mats[s - 1][(i, j)] * x[j]).sum()).collect();
                prop_assert!(cert.barrier_value(w, &next) <= cert.barrier_value(v, &x) + SAMPLE_TOL);
            }
        }
    }
}

/// Recomputes each identity's residual from scratch.
fn identity_residual(cert: &pathbarrier::synthesis::SosCertificate, sys: &SwitchedSystem) -> f64 {
    let n = sys.dimension();
    let f = sys.float_polys();
    let mut worst: f64 = 0.0;
    for id in &cert.identities {
        let target = match id.condition {
            Condition::Initial { node } => -&cert.barriers[node],
            Condition::Unsafe { node } => &cert.barriers[node] - &FloatPoly::constant(n, cert.eps),
            Condition::Decrease { edge: (v, s, w) } => &cert.barriers[v] - &cert.barriers[w].compose(&f[s - 1]).unwrap(),
        };
        let mut rebuilt = id.sos.to_poly(n);
        for (g, m) in &id.multipliers {
            rebuilt = &rebuilt + &(g * &m.to_poly(n));
        }
        worst = worst.max((&target - &rebuilt).max_abs_coeff(|c| c.abs()));
    }
    worst
}

#[test]
fn platoon_identities_reconstruct() {
    let sys = catalog::platoon();
    let out = synth_sos_pcbf(&sys, &catalog::graph_platoon(), &catalog::platoon_spec(), &SosOptions::default(), &ClarabelBackend::default())
        .unwrap();
    let Some(Certificate::Sos(cert)) = out.certificate() else { panic!("platoon synthesis: {}", out.status()) };
    assert!(identity_residual(cert, &sys) <= IDENTITY_TOL);
    for id in &cert.identities {
        for block in std::iter::once(&id.sos).chain(id.multipliers.iter().map(|(_, m)| m)) {
            let eig = block.gram.clone().symmetric_eigen().eigenvalues.min();
            assert!(eig >= -IDENTITY_TOL, "Gram eigenvalue {eig}");
        }
    }
}

#[test]
fn identity_dynamics_admit_a_static_barrier() {
    // f(x) = x on the plane; balls written as inequalities through the SOS path.
    let sys = SwitchedSystem::linear(vec![RatMatrix::identity(2)]).unwrap();
    let g = LabeledGraph::with_vertices(alphabet(1), 1, [(0, 1, 0)]).unwrap();
    let spec = SafetySpec::balls(rat(1), rat(4)).unwrap();
    let out = synth_sos_pcbf(&sys, &g, &spec, &SosOptions::default(), &ClarabelBackend::default()).unwrap();
    assert!(out.is_certified(), "{}", out.status());
}

#[test]
fn experiment_is_deterministic_and_partitions() {
    let backend = ClarabelBackend::default();
    let cfg = ExperimentConfig::new(12, 2, 99, catalog::graph_platoon(), catalog::graph_platoon_lift());
    let a = run_experiment(&cfg, &backend).unwrap();
    let b = run_experiment(&cfg, &backend).unwrap();
    let strip = |t: &pathbarrier::experiment::ExperimentTally| {
        (t.neither, t.both, t.only_gbar, t.only_g, t.records.iter().map(|r| (r.g_feasible, r.gbar_feasible)).collect::<Vec<_>>())
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.total(), 12);
    assert_eq!(a.records.len(), 12);
    assert_eq!(a.only_g, 0);
}

#[test]
fn identical_graphs_never_disagree() {
    let g = catalog::graph_platoon();
    let cfg = ExperimentConfig::new(10, 2, 7, g.clone(), g);
    let t = run_experiment(&cfg, &ClarabelBackend::default()).unwrap();
    assert_eq!((t.only_g, t.only_gbar), (0, 0));
}

#[test]
fn contracting_override_is_feasible_for_both() {
    let mut cfg = ExperimentConfig::new(1, 3, 0, catalog::graph_platoon(), catalog::graph_platoon_lift());
    let half = RatMatrix::identity(3).scale(&ratio(1, 2));
    cfg.system_override = Some(SwitchedSystem::linear(vec![half.clone(), half]).unwrap());
    let t = run_experiment(&cfg, &ClarabelBackend::default()).unwrap();
    assert_eq!(t.both, 1, "{t:?}");
}

#[test]
fn hand_certificate_for_half_identity() {
    // P = I/4, λ = 1/4 satisfies every LMI exactly at the boundary of C1.
    let sys = SwitchedSystem::linear(vec![RatMatrix::identity(3).scale(&ratio(1, 2))]).unwrap();
    let g = LabeledGraph::with_vertices(alphabet(1), 1, [(0, 1, 0)]).unwrap();
    let spec = SafetySpec::balls(rat(4), rat(9)).unwrap();
    let cert = Certificate::Quadratic(pathbarrier::synthesis::QuadraticCertificate {
        p: vec![nalgebra::DMatrix::identity(3, 3) * 0.25],
        lambda: vec![0.25],
        eps: DEFAULT_EPS,
    });
    let opts = pathbarrier::synthesis::ValidationOptions::default();
    assert!(pathbarrier::synthesis::validate_certificate(&cert, &sys, &g, &spec, &opts).pass);
    // Scaling P by 10 breaks the initial-set condition, with a witness.
    let Certificate::Quadratic(mut bad) = cert else { unreachable!() };
    bad.p[0] *= 10.0;
    let report = pathbarrier::synthesis::validate_certificate(&Certificate::Quadratic(bad), &sys, &g, &spec, &opts);
    let row = report.failures().next().expect("a failing row");
    assert_eq!(row.condition, "pcbf1");
    assert!(row.residual < 0.0 && row.witness.is_some());
}
