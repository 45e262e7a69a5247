//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line to stderr.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use impulse_iqc::analysis::{min_gain, run_test, run_test_confirmed, Mode, SystemRef, TestKind, TestOutcome, TestOptions};
use impulse_iqc::catalog;
use impulse_iqc::dwell::{enumerate_paths, postadmissible, sample_sequence, DwellSpec, Path, Policy};
use impulse_iqc::iqcfilter::{basis_filter, verify_iqc_empirical};
use impulse_iqc::matcore::Mat;
use impulse_iqc::model::{closed_loop, feedback_to_jump, Estimator, FeedbackForm, JumpForm, PerfIndex};
use impulse_iqc::reproduce::{
    estimator_traces, gain_table, hold_orderings, stability_grid, GridConfig, OrderingConfig, Summary, TableConfig, TableEntry,
    TraceConfig, ORDER_TOL,
};
use impulse_iqc::sdp::Status;
use impulse_iqc::sim::{check_dissipation, simulate_jump};

fn report(n: u32, title: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n} {verdict}: {title} [{detail}]");
}

fn check_detail(s: &Summary, name: &str) -> (bool, String) {
    let c = s.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check {name:?}"));
    (c.passed, c.detail.clone())
}

fn table() -> &'static (Vec<TableEntry>, Summary) {
    static T: OnceLock<(Vec<TableEntry>, Summary)> = OnceLock::new();
    T.get_or_init(|| gain_table(&TableConfig::default()))
}

// ---------------------------------------------------------------------------
// corpus of analysis outcomes shared by criteria 4 to 6

const CORPUS_TESTS: [TestKind; 7] = [
    TestKind::Lifting,
    TestKind::Path,
    TestKind::Clock,
    TestKind::ClockSlack,
    TestKind::AdtStatic,
    TestKind::IqcClock,
    TestKind::IqcLifting,
];
const CORPUS_NU: usize = 1;
const CORPUS_PATH_LEN: usize = 4;

struct Case {
    name: String,
    sys: FeedbackForm,
    spec: DwellSpec,
    mode: Mode,
    outcomes: BTreeMap<TestKind, TestOutcome>,
}

impl Case {
    fn jump(&self) -> JumpForm {
        feedback_to_jump(&self.sys).expect("well-posed")
    }
}

fn opts() -> TestOptions {
    TestOptions::default().with_nu(CORPUS_NU).with_path_len(CORPUS_PATH_LEN)
}

fn spectral_radius(a: &Mat) -> f64 {
    a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Random jump form with `n ≤ 3`, one disturbance and one error channel, plus an RDT range with `Tmax ≤ 4`.
fn random_system(rng: &mut ChaCha8Rng) -> (JumpForm, DwellSpec) {
    let n = rng.gen_range(1..=3);
    let mut r = |a: usize, b: usize, s: f64| Mat::from_fn(a, b, |_, _| rng.gen_range(-s..s));
    let mut a = r(n, n, 1.0);
    let aj = r(n, n, 1.5);
    let (b, c, d, bj, cj, dj) = (r(n, 1, 1.0), r(1, n, 1.0), r(1, 1, 0.5), r(n, 1, 1.0), r(1, n, 1.0), r(1, 1, 0.5));
    let target = rng.gen_range(0.5..1.05);
    let rho = spectral_radius(&a);
    if rho > 1e-9 {
        a *= target / rho;
    }
    let tmin = rng.gen_range(1..=3);
    let tmax = rng.gen_range(tmin..=4);
    (JumpForm::new(a, b, c, d, aj, bj, cj, dj).expect("consistent"), DwellSpec::Rdt(tmin, tmax))
}

fn run_case(name: String, sys: FeedbackForm, spec: DwellSpec, mode: Mode) -> Case {
    let mut outcomes = BTreeMap::new();
    for kind in CORPUS_TESTS {
        let s = if kind == TestKind::AdtStatic { DwellSpec::Adt } else { spec };
        let o = run_test(kind, SystemRef::Feedback(&sys), &s, &mode, &opts()).expect("test runs");
        outcomes.insert(kind, o);
    }
    Case { name, sys, spec, mode, outcomes }
}

/// Performance cases just above and below the least conservative bound, or stability when that bound is infinite.
fn cases_for(name: &str, sys: FeedbackForm, spec: DwellSpec, out: &mut Vec<Case>) {
    let (g, _) = min_gain(TestKind::Lifting, SystemRef::Feedback(&sys), &spec, &opts()).expect("gain");
    if g.is_finite() && g > 1e-6 {
        let (nd, ne) = (sys.nd(), sys.ne());
        for f in [0.97, 1.03] {
            let gamma = f * g;
            let mode = Mode::Performance(PerfIndex::gain_index(ne, nd, gamma * gamma));
            out.push(run_case(format!("{name} γ={gamma:.4}"), sys.clone(), spec, mode));
        }
    } else {
        out.push(run_case(format!("{name} stability"), sys, spec, Mode::Stability));
    }
}

fn corpus() -> &'static Vec<Case> {
    static C: OnceLock<Vec<Case>> = OnceLock::new();
    C.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut cases = Vec::new();
        for i in 0..20 {
            let (j, spec) = random_system(&mut rng);
            cases_for(&format!("random#{i} n={} {spec}", j.n()), impulse_iqc::model::jump_to_feedback(&j), spec, &mut cases);
        }
        for beta in [0.3, 1.0, 2.5] {
            for spec in [DwellSpec::Rdt(2, 3), DwellSpec::Rdt(6, 9)] {
                let f = impulse_iqc::model::jump_to_feedback(&catalog::exa1(beta));
                cases.push(run_case(format!("exa1 β={beta} {spec}"), f, spec, Mode::Stability));
            }
        }
        cases_for("hold_loop", catalog::hold_loop(catalog::HOLD_GAIN), DwellSpec::Rdt(1, 3), &mut cases);
        let p = catalog::exa_syn().to_estimation_plant();
        let zero = Estimator::zeros(0, p.ny(), p.nv());
        cases_for("exa_syn open loop", closed_loop(&p, &zero).expect("closed loop"), DwellSpec::Rdt(4, 5), &mut cases);
        cases
    })
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_table_values() {
    let (_, s) = table();
    let (passed, detail) = check_detail(s, "published values within 2%");
    report(1, "published estimator gains within ±2%", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_2_path_enumeration() {
    let mut want = vec![
        Path::unit(5, 2),
        Path::unit(5, 3),
        Path::unit(5, 4),
        Path::from_positions(5, &[1, 5]),
        Path::from_positions(5, &[1, 4]),
        Path::from_positions(5, &[2, 5]),
    ];
    want.sort();
    let got = enumerate_paths(2, 3, 5);
    let mut want_post = vec![Path::unit(5, 2), Path::unit(5, 3), Path::from_positions(5, &[2, 5])];
    want_post.sort();
    let post = postadmissible(&Path(vec![0, 0, 0, 1, 0]), 2, 3).expect("admissible");
    let passed = got == want && post == want_post;
    let detail = format!("{} paths, {} postadmissible", got.len(), post.len());
    report(2, "path enumeration exact", passed, &detail);
    assert_eq!(got, want);
    assert_eq!(post, want_post);
}

#[test]
fn criterion_3_stability_grid() {
    let (_, s) = stability_grid(&GridConfig::default()).expect("grid runs");
    let detail: Vec<String> = s.checks.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
    report(3, "stability grid consistency", s.passed, &detail.join("; "));
    assert!(s.passed, "{}", detail.join("\n"));
}

#[test]
fn criterion_4_implications() {
    const IMPLICATIONS: [(&str, TestKind, TestKind); 6] = [
        ("a", TestKind::Clock, TestKind::Lifting),
        ("b", TestKind::Lifting, TestKind::Clock),
        ("c", TestKind::IqcClock, TestKind::Clock),
        ("d", TestKind::IqcClock, TestKind::IqcLifting),
        ("e", TestKind::IqcLifting, TestKind::Lifting),
        ("f", TestKind::ClockSlack, TestKind::Clock),
    ];
    let cases = corpus();
    let mut checked = 0;
    let mut excluded = 0;
    let mut resolved = 0;
    let mut violations = Vec::new();
    for case in cases {
        for (label, ante, cons) in IMPLICATIONS {
            let a = &case.outcomes[&ante];
            let verified = a.certificate.as_ref().is_some_and(|c| c.replay().ok);
            if !(a.is_feasible() && verified) {
                continue;
            }
            checked += 1;
            let c = &case.outcomes[&cons];
            match c.status {
                Status::Feasible => {}
                Status::Inaccurate => excluded += 1,
                _ => {
                    let again = run_test_confirmed(cons, SystemRef::Feedback(&case.sys), &case.spec, &case.mode, &opts(), 0.1).expect("re-solve");
                    match again.status {
                        Status::Infeasible | Status::Error => violations.push(format!("({label}) {ante}⇒{cons} on {}", case.name)),
                        Status::Inaccurate => excluded += 1,
                        Status::Feasible => resolved += 1,
                    }
                }
            }
        }
    }
    let detail = format!(
        "{} systems, {checked} antecedents feasible, {} violations, {resolved} resolved at eps/10, {excluded} inaccurate excluded{}",
        cases.len(),
        violations.len(),
        if violations.is_empty() { String::new() } else { format!(": {}", violations.join(", ")) }
    );
    let passed = violations.is_empty() && checked >= 20;
    report(4, "feasibility implications (a)–(f)", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_5_replay_and_dissipation() {
    let cases = corpus();
    let mut replayed = 0;
    let mut replay_failures = Vec::new();
    let mut clock_certs = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut diss_failures = Vec::new();
    for case in cases {
        for (kind, o) in &case.outcomes {
            let Some(cert) = &o.certificate else { continue };
            replayed += 1;
            let r = cert.replay();
            if !r.ok {
                replay_failures.push(format!("{kind} on {}: {:?}", case.name, r.failures));
            }
            let (TestKind::Clock, Mode::Performance(p)) = (kind, &case.mode) else { continue };
            clock_certs += 1;
            let j = case.jump();
            let mut rng = ChaCha8Rng::seed_from_u64(replayed as u64);
            for trial in 0..100u64 {
                let horizon = 60;
                let seq = sample_sequence(&case.spec, horizon as i64, Policy::UniformRandom { seed: rng.gen() }).expect("sequence");
                let x0 = DVector::from_fn(j.n(), |_, _| rng.gen_range(-1.0..1.0));
                let d = Mat::from_fn(j.nd(), horizon, |_, _| rng.gen_range(-1.0..1.0));
                let tr = simulate_jump(&j, &seq, &x0, &d, horizon).expect("simulate");
                let rep = impulse_iqc::sim::dissipation_report(cert, &tr, p, cert.eps).expect("dissipation");
                worst = worst.max(rep.max_violation);
                if !check_dissipation(cert, &tr, p, cert.eps, 1e-7).expect("dissipation") {
                    diss_failures.push(format!("{} trial {trial}: {:.3e}", case.name, rep.max_violation));
                }
            }
        }
    }
    let passed = replay_failures.is_empty() && diss_failures.is_empty() && clock_certs > 0;
    let detail = format!(
        "{replayed} certificates replayed, {} replay failures; {clock_certs} clock certificates × 100 trajectories, worst summed slack {worst:.3e}, {} violations",
        replay_failures.len(),
        diss_failures.len()
    );
    report(5, "certificate replay and dissipation", passed, &detail);
    assert!(passed, "{detail}\n{}\n{}", replay_failures.join("\n"), diss_failures.join("\n"));
}

#[test]
fn criterion_6_iqc_empirical() {
    let cases = corpus();
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for case in cases {
        for kind in [TestKind::IqcClock, TestKind::IqcLifting] {
            let Some(cert) = &case.outcomes[&kind].certificate else { continue };
            let mult = cert.multiplier().expect("IQC certificate carries a multiplier");
            let psi = basis_filter(case.sys.nz(), case.sys.nw(), CORPUS_NU);
            let seq = sample_sequence(&case.spec, 80, Policy::UniformRandom { seed: checked as u64 }).expect("sequence");
            let r = verify_iqc_empirical(&psi, &mult, &seq, 100, 7 + checked as u64).expect("iqc check");
            checked += 1;
            worst = worst.min(r.min_lhs);
            if r.min_lhs < -1e-7 {
                failures.push(format!("{kind} on {}: {:.3e}", case.name, r.min_lhs));
            }
        }
    }
    let passed = failures.is_empty() && checked > 0;
    let detail = format!("{checked} multipliers × 100 trials, worst min-LHS {worst:.3e}, {} below −1e-7", failures.len());
    report(6, "IQC multipliers hold empirically", passed, &detail);
    assert!(passed, "{detail}\n{}", failures.join("\n"));
}

#[test]
fn criterion_7_gain_sandwich() {
    let (entries, _) = table();
    let spec = DwellSpec::Rdt(9, 10);
    let ests: Vec<(String, &impulse_iqc::synthesis::SynthesisResult)> = entries
        .iter()
        .filter(|e| e.cell.spec == spec.to_string())
        .filter_map(|e| e.result.as_ref().map(|r| (e.cell.column.clone(), r)))
        .collect();
    let p = catalog::exa_syn().to_estimation_plant();
    let cfg = TraceConfig { spec, ..TraceConfig::default() };
    let (_, ratios, check) = estimator_traces(&p, &ests, &cfg).expect("simulation");
    let passed = check.passed && ests.len() == 4;
    let detail = format!("{} estimators, {} runs: {}", ests.len(), ratios.len(), check.detail);
    report(7, "empirical gain ≤ certified γ", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_8_nu_monotonicity() {
    let (entries, _) = table();
    let mut bad = Vec::new();
    for (spec, _) in catalog::TABLE1.iter() {
        let gs: Vec<f64> = (1..=3)
            .map(|nu| {
                entries
                    .iter()
                    .find(|e| e.cell.spec == spec.to_string() && e.cell.column == format!("nu={nu}"))
                    .and_then(|e| e.cell.optimum)
                    .unwrap_or(f64::NAN)
            })
            .collect();
        if !(gs[1] <= gs[0] * (1.0 + ORDER_TOL) && gs[2] <= gs[1] * (1.0 + ORDER_TOL)) {
            bad.push(format!("{spec}: {gs:?}"));
        }
    }
    let (_, hold) = hold_orderings(&OrderingConfig::default()).expect("orderings");
    let (hold_ok, hold_detail) = check_detail(&hold, "iqc-lifting non-increasing in ν");
    let passed = bad.is_empty() && hold_ok;
    let detail = format!(
        "synthesis: {}; hold loop: {hold_detail}",
        if bad.is_empty() { "4 rows monotone".to_string() } else { bad.join("; ") }
    );
    report(8, "γ non-increasing in ν", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn synthesized_estimators_replay_within_tolerance() {
    let (_, s) = table();
    let (passed, detail) = check_detail(s, "closed-loop replay within 1%");
    let _ = writeln!(std::io::stderr(), "synthesis replay {}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{detail}");
}

#[test]
fn synthesized_table_is_ordered() {
    let (_, s) = table();
    let (passed, detail) = check_detail(s, "slack ≥ iqc ν=1 ≥ ν=2 ≥ …");
    let _ = writeln!(std::io::stderr(), "table ordering {}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{detail}");
}
