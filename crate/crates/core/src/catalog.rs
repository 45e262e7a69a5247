//! Reference systems and disturbance signals used by the reproduction harness.

use crate::dwell::DwellSpec;
use crate::matcore::Mat;
use crate::model::{FeedbackForm, JumpEstimationPlant, JumpForm, SystemFile};
use crate::{Error, Result};

/// Autonomous system with a slowly rotating flow and a strongly skewed jump map.
pub fn exa1(beta: f64) -> JumpForm {
    let a = Mat::identity(2, 2) + Mat::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, -1.0]) * (beta / 100.0);
    let aj = Mat::from_row_slice(2, 2, &[0.0, -10.0, 0.1, 0.0]);
    JumpForm::autonomous(a, aj).expect("exa1 dimensions")
}

/// 50 equidistant points on `[0.1, 5]`.
pub fn exa1_beta_grid() -> Vec<f64> {
    let n = 50;
    (0..n).map(|i| 0.1 + (5.0 - 0.1) * i as f64 / (n - 1) as f64).collect()
}

/// Estimation plant with impulsive state resets and a measurement that vanishes at impulses.
pub fn exa_syn() -> JumpEstimationPlant {
    let m = |r: usize, c: usize, v: &[f64]| Mat::from_row_slice(r, c, v);
    JumpEstimationPlant {
        a: m(2, 2, &[0.18, 0.34, -0.58, 1.08]),
        bd: m(2, 1, &[-0.02, -0.01]),
        cv: m(1, 2, &[0.0, 1.0]),
        dvd: Mat::zeros(1, 1),
        cy: m(1, 2, &[1.0, 0.0]),
        dyd: Mat::zeros(1, 1),
        aj: m(2, 2, &[0.47, 0.41, -0.01, -0.02]),
        bjd: m(2, 1, &[0.0, 1.32]),
        cjv: m(1, 2, &[0.0, 1.0]),
        djvd: Mat::zeros(1, 1),
        cjy: Mat::zeros(1, 2),
        djyd: Mat::zeros(1, 1),
    }
}

/// Published upper bounds for [`exa_syn`]: slack-variable route, then the IQC route at `ν = 1, 2, 3`.
pub const TABLE1: [(DwellSpec, [f64; 4]); 4] = [
    (DwellSpec::Rdt(4, 5), [3.574, 3.063, 2.513, 2.439]),
    (DwellSpec::Rdt(5, 7), [3.055, 2.655, 2.266, 2.147]),
    (DwellSpec::Rdt(7, 9), [2.239, 2.062, 1.950, 1.872]),
    (DwellSpec::Rdt(9, 10), [1.816, 1.755, 1.730, 1.709]),
];

/// Plant `x⁺ = 1.02 x − k·h + d`, `e = x`, in feedback with a sample-and-hold `h`.
///
/// The hold keeps `h` during flow and samples `x` at impulses; only the hold is
/// impulsive, so `n_z = n_w = 1`.
pub fn hold_loop(k: f64) -> FeedbackForm {
    let m = |r: usize, c: usize, v: &[f64]| Mat::from_row_slice(r, c, v);
    FeedbackForm {
        a: m(2, 2, &[1.02, -k, 0.0, 1.0]),
        bw: m(2, 1, &[-k, 1.0]),
        b: m(2, 1, &[1.0, 0.0]),
        cz: m(1, 2, &[1.0, -1.0]),
        dzw: Mat::zeros(1, 1),
        dzd: Mat::zeros(1, 1),
        c: m(1, 2, &[1.0, 0.0]),
        dew: Mat::zeros(1, 1),
        d: Mat::zeros(1, 1),
    }
}

/// Default feedback gain of [`hold_loop`].
pub const HOLD_GAIN: f64 = 0.3;

/// Builtin system by name: `exa1` (needs `beta`), `exa_syn` or `hold_loop`.
pub fn builtin(name: &str, beta: Option<f64>) -> Result<SystemFile> {
    match (name, beta) {
        ("exa1", Some(b)) => Ok(SystemFile::Jump(exa1(b))),
        ("exa1", None) => Err(Error::Invalid("exa1 needs beta".into())),
        ("exa_syn" | "hold_loop", Some(_)) => Err(Error::Invalid("beta only applies to exa1".into())),
        ("exa_syn", None) => Ok(SystemFile::JumpEstimation(exa_syn())),
        ("hold_loop", None) => Ok(SystemFile::Feedback(hold_loop(HOLD_GAIN))),
        _ => Err(Error::Invalid(format!("{name}: no such builtin system"))),
    }
}

/// `4` on `[0, 60]`, `−2` on `(60, 200]`, zero afterwards.
pub fn d1(t: usize) -> f64 {
    match t {
        0..=60 => 4.0,
        61..=200 => -2.0,
        _ => 0.0,
    }
}

/// `−2 cos(t/2)` on `[0, 60]`, `3 sin(t/4)` on `(60, 200]`, zero afterwards.
pub fn d2(t: usize) -> f64 {
    let tf = t as f64;
    match t {
        0..=60 => -2.0 * (tf / 2.0).cos(),
        61..=200 => 3.0 * (tf / 4.0).sin(),
        _ => 0.0,
    }
}

/// Row vector `[d(0) … d(horizon−1)]`.
pub fn sample(d: fn(usize) -> f64, horizon: usize) -> Mat {
    Mat::from_fn(1, horizon, |_, t| d(t))
}
