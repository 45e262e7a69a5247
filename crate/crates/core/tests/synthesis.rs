//! Estimator synthesis against closed-form and self-consistency oracles.

use impulse_iqc::analysis::TestOptions;
use impulse_iqc::catalog;
use impulse_iqc::dwell::DwellSpec;
use impulse_iqc::matcore::Mat;
use impulse_iqc::model::JumpEstimationPlant;
use impulse_iqc::sdp::SolveOptions;
use impulse_iqc::synthesis::{replay_gain, synthesize_iqc, synthesize_slack, Objective, REPLAY_TOL};
use impulse_iqc::Error;

const DVD: f64 = 0.7;

/// Full, noise-free state measurement: `u = C_v y` leaves `e = D_vd d`, so the optimal gain is `|D_vd|`.
fn full_information_plant() -> JumpEstimationPlant {
    let n = 2;
    let cv = Mat::from_row_slice(1, n, &[1.3, -0.4]);
    JumpEstimationPlant {
        a: Mat::from_row_slice(n, n, &[0.5, 0.2, 0.0, 0.6]),
        bd: Mat::from_row_slice(n, 1, &[1.0, 0.5]),
        cv: cv.clone(),
        dvd: Mat::from_element(1, 1, DVD),
        cy: Mat::identity(n, n),
        dyd: Mat::zeros(n, 1),
        aj: Mat::from_row_slice(n, n, &[0.8, 0.0, 0.3, -0.7]),
        bjd: Mat::from_row_slice(n, 1, &[0.2, 1.0]),
        cjv: cv,
        djvd: Mat::from_element(1, 1, DVD),
        cjy: Mat::identity(n, n),
        djyd: Mat::zeros(n, 1),
    }
}

fn close(x: f64, want: f64) -> bool {
    (x - want).abs() <= 2e-3 * want + 1e-5
}

#[test]
fn slack_route_recovers_full_information_gain() {
    let j = full_information_plant();
    let r = synthesize_slack(&j, &DwellSpec::Rdt(2, 4), Objective::MinimizeGamma, &SolveOptions::default()).unwrap();
    assert!(close(r.optimum, DVD), "optimum {}", r.optimum);
    assert_eq!(r.estimator.order(), j.n());
}

#[test]
fn iqc_route_recovers_full_information_gain() {
    let p = full_information_plant().to_estimation_plant();
    let r = synthesize_iqc(&p, &DwellSpec::Rdt(2, 4), 1, Objective::MinimizeGamma, &SolveOptions::default()).unwrap();
    assert!(close(r.optimum, DVD), "optimum {}", r.optimum);
    let replay = replay_gain(&p, &r, &TestOptions::default()).unwrap();
    assert!(replay <= r.gamma * (1.0 + REPLAY_TOL), "replay {replay} vs {}", r.gamma);
}

#[test]
fn feasibility_objective_brackets_the_optimum() {
    let j = catalog::exa_syn();
    let spec = DwellSpec::Rdt(4, 5);
    let opts = SolveOptions::default();
    let best = synthesize_slack(&j, &spec, Objective::MinimizeGamma, &opts).unwrap().optimum;
    let above = synthesize_slack(&j, &spec, Objective::Feasibility(1.05 * best), &opts).unwrap();
    assert!(above.gamma <= 1.05 * best * (1.0 + REPLAY_TOL));
    match synthesize_slack(&j, &spec, Objective::Feasibility(0.95 * best), &opts) {
        Err(Error::Infeasible(_)) => {}
        other => panic!("expected infeasible below the optimum, got {:?}", other.map(|r| r.gamma)),
    }
}

#[test]
fn iqc_estimator_order_includes_filter_state() {
    let p = catalog::exa_syn().to_estimation_plant();
    let r = synthesize_iqc(&p, &DwellSpec::Rdt(4, 5), 1, Objective::MinimizeGamma, &SolveOptions::default()).unwrap();
    let nxi = impulse_iqc::iqcfilter::basis_filter(p.nz(), p.nw(), 1).nxi();
    assert_eq!(r.estimator.order(), p.n() + nxi);
    let replay = replay_gain(&p, &r, &TestOptions::default()).unwrap();
    assert!(replay <= r.gamma * (1.0 + REPLAY_TOL));
}
