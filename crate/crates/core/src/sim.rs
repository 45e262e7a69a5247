//! Simulation of impulsive systems, empirical gains and trajectory-level certificate checks.

use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{Certificate, TestKind};
use crate::dwell::{sample_sequence, DwellSpec, ImpulseSequence, Policy};
use crate::matcore::Mat;
use crate::model::{loop_inverse, FeedbackForm, JumpForm, PerfIndex};
use crate::{Error, Result};

/// Default horizon for gain estimation.
pub const DEFAULT_HORIZON: usize = 400;
/// Fraction of the horizon left disturbance-free at the end.
pub const TAIL_FRACTION: f64 = 0.2;

/// Simulated signals; column `t` holds the value at time `t`.
///
/// `x` has `horizon + 1` columns, all other signals `horizon`. For jump-form
/// simulations `z` and `w` have zero rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub x: Mat,
    pub z: Mat,
    pub w: Mat,
    pub d: Mat,
    pub e: Mat,
    pub impulses: Vec<bool>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.impulses.len()
    }

    /// Clock values `θ(0) … θ(horizon)`.
    pub fn clock(&self) -> Vec<u64> {
        let mut th = Vec::with_capacity(self.horizon() + 1);
        th.push(0);
        for t in 0..self.horizon() {
            let next = if self.impulses[t] { 0 } else { th[t] + 1 };
            th.push(next);
        }
        th
    }

    /// CSV with columns `t, x…, d…, e…, impulse`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.x.nrows()).map(|i| format!("x{}", i + 1)));
        header.extend((0..self.d.nrows()).map(|i| format!("d{}", i + 1)));
        header.extend((0..self.e.nrows()).map(|i| format!("e{}", i + 1)));
        header.push("impulse".into());
        w.write_record(&header)?;
        for t in 0..self.horizon() {
            let mut row = vec![t.to_string()];
            row.extend(self.x.column(t).iter().map(|v| v.to_string()));
            row.extend(self.d.column(t).iter().map(|v| v.to_string()));
            row.extend(self.e.column(t).iter().map(|v| v.to_string()));
            row.push((self.impulses[t] as u8).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_inputs(n: usize, nd: usize, x0: &DVector<f64>, d: &Mat, horizon: usize) -> Result<()> {
    if x0.len() != n {
        return Err(Error::Dimension(format!("x0 has length {}, expected {n}", x0.len())));
    }
    if d.nrows() != nd || d.ncols() < horizon {
        return Err(Error::Dimension(format!(
            "disturbance must be {nd}x(≥{horizon}), got {:?}",
            d.shape()
        )));
    }
    Ok(())
}

/// Simulate the feedback form with `w = Δ(z)` on `[0, horizon)`.
pub fn simulate(
    f: &FeedbackForm,
    seq: &ImpulseSequence,
    x0: &DVector<f64>,
    d: &Mat,
    horizon: usize,
) -> Result<Trajectory> {
    f.validate()?;
    f.require_square_loop()?;
    check_inputs(f.n(), f.nd(), x0, d, horizon)?;
    let inv = loop_inverse(&f.dzw)?;
    let mut x = Mat::zeros(f.n(), horizon + 1);
    let mut z = Mat::zeros(f.nz(), horizon);
    let mut w = Mat::zeros(f.nw(), horizon);
    let mut e = Mat::zeros(f.ne(), horizon);
    let impulses = seq.flags(horizon);
    x.set_column(0, x0);
    for t in 0..horizon {
        let xt = x.column(t).into_owned();
        let dt = d.column(t).into_owned();
        let base = &f.cz * &xt + &f.dzd * &dt;
        let wt = if impulses[t] { &inv * &base } else { DVector::zeros(f.nw()) };
        z.set_column(t, &(base + &f.dzw * &wt));
        e.set_column(t, &(&f.c * &xt + &f.dew * &wt + &f.d * &dt));
        x.set_column(t + 1, &(&f.a * &xt + &f.bw * &wt + &f.b * &dt));
        w.set_column(t, &wt);
    }
    Ok(Trajectory { x, z, w, d: d.columns(0, horizon).into_owned(), e, impulses })
}

/// Simulate the jump form directly.
pub fn simulate_jump(
    j: &JumpForm,
    seq: &ImpulseSequence,
    x0: &DVector<f64>,
    d: &Mat,
    horizon: usize,
) -> Result<Trajectory> {
    j.validate()?;
    check_inputs(j.n(), j.nd(), x0, d, horizon)?;
    let mut x = Mat::zeros(j.n(), horizon + 1);
    let mut e = Mat::zeros(j.ne(), horizon);
    let impulses = seq.flags(horizon);
    x.set_column(0, x0);
    for t in 0..horizon {
        let (a, b, c, dd) = j.mats(impulses[t]);
        let xt = x.column(t).into_owned();
        let dt = d.column(t).into_owned();
        e.set_column(t, &(c * &xt + dd * &dt));
        x.set_column(t + 1, &(a * &xt + b * &dt));
    }
    Ok(Trajectory {
        x,
        z: Mat::zeros(0, horizon),
        w: Mat::zeros(0, horizon),
        d: d.columns(0, horizon).into_owned(),
        e,
        impulses,
    })
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        c += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + c
}

/// `Σ_t ‖s(t)‖²` with compensated summation.
pub fn energy(s: &Mat) -> f64 {
    compensated_sum(s.iter().map(|v| v * v))
}

/// `‖e‖₂ / ‖d‖₂` of a trajectory (0 when `d ≡ 0`).
pub fn gain_ratio(tr: &Trajectory) -> f64 {
    let ed = energy(&tr.d);
    if ed == 0.0 {
        0.0
    } else {
        (energy(&tr.e) / ed).sqrt()
    }
}

/// Disturbance families used for gain estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    WhiteUniform,
    Sinusoid,
    Steps,
}

/// Random disturbance of the given family, zero after `support` steps.
pub fn random_disturbance(kind: Ensemble, nd: usize, horizon: usize, support: usize, rng: &mut ChaCha8Rng) -> Mat {
    let mut d = Mat::zeros(nd, horizon);
    match kind {
        Ensemble::WhiteUniform => {
            for t in 0..support.min(horizon) {
                for i in 0..nd {
                    d[(i, t)] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        Ensemble::Sinusoid => {
            let omega = rng.gen_range(0.0..std::f64::consts::PI);
            for i in 0..nd {
                let amp = rng.gen_range(-1.0..1.0);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                for t in 0..support.min(horizon) {
                    d[(i, t)] = amp * (omega * t as f64 + phase).sin();
                }
            }
        }
        Ensemble::Steps => {
            let mut t = 0;
            while t < support.min(horizon) {
                let len = rng.gen_range(1..=20);
                let vals: Vec<f64> = (0..nd).map(|_| rng.gen_range(-1.0..1.0)).collect();
                for s in t..(t + len).min(support.min(horizon)) {
                    for i in 0..nd {
                        d[(i, s)] = vals[i];
                    }
                }
                t += len;
            }
        }
    }
    d
}

/// Lower bound on the energy gain from random admissible sequences and disturbances.
///
/// Specs without an upper dwell bound use `Tmin + 10` as a surrogate.
pub fn empirical_gain(f: &FeedbackForm, spec: &DwellSpec, trials: usize, horizon: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be ≥ 1".into()));
    }
    let (lo, hi) = spec.bounds();
    let spec = if hi.is_none() { spec.with_surrogate(lo + 10) } else { *spec };
    let support = ((1.0 - TAIL_FRACTION) * horizon as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [Ensemble::WhiteUniform, Ensemble::Sinusoid, Ensemble::Steps];
    let mut best = 0.0f64;
    for k in 0..trials {
        let seq = sample_sequence(&spec, horizon as i64, Policy::UniformRandom { seed: rng.gen() })?;
        let d = random_disturbance(kinds[k % kinds.len()], f.nd(), horizon, support, &mut rng);
        let tr = simulate(f, &seq, &DVector::zeros(f.n()), &d, horizon)?;
        best = best.max(gain_ratio(&tr));
    }
    Ok(best)
}

/// Worst summed dissipation slack along a trajectory (positive means violated).
#[derive(Clone, Debug, PartialEq)]
pub struct DissipationReport {
    pub max_violation: f64,
    pub steps: usize,
}

/// Check the clock dissipation inequality at every step `k`:
/// `x(k+1)ᵀX_{θ(k+1)}x(k+1) − x(0)ᵀX_{θ(0)}x(0) + Σ₀ᵏ (e;d)ᵀP(e;d) ≤ −ε Σ₀ᵏ ‖d‖²`.
pub fn dissipation_report(cert: &Certificate, traj: &Trajectory, p: &PerfIndex, eps: f64) -> Result<DissipationReport> {
    if cert.test != TestKind::Clock {
        return Err(Error::Invalid("dissipation check needs a clock certificate".into()));
    }
    let xs = cert.clock_lyapunov();
    let n = traj.x.nrows();
    if xs.iter().any(|x| x.shape() != (n, n)) || p.ne() != traj.e.nrows() || p.nd() != traj.d.nrows() {
        return Err(Error::Dimension("certificate, trajectory and index disagree".into()));
    }
    let cap = xs.len() as u64 - 1;
    let th = traj.clock();
    let pm = p.full();
    let quad = |t: usize| {
        let x = traj.x.column(t);
        let k = th[t].min(cap) as usize;
        (x.transpose() * &xs[k] * x)[(0, 0)]
    };
    let v0 = quad(0);
    let mut supply = Vec::with_capacity(traj.horizon());
    let mut dist = Vec::with_capacity(traj.horizon());
    let mut worst = f64::NEG_INFINITY;
    for k in 0..traj.horizon() {
        let ed = DVector::from_iterator(
            traj.e.nrows() + traj.d.nrows(),
            traj.e.column(k).iter().chain(traj.d.column(k).iter()).cloned(),
        );
        supply.push(ed.dot(&(&pm * &ed)));
        dist.push(traj.d.column(k).norm_squared());
        let lhs = quad(k + 1) - v0 + compensated_sum(supply.iter().cloned());
        let rhs = -eps * compensated_sum(dist.iter().cloned());
        worst = worst.max(lhs - rhs);
    }
    Ok(DissipationReport { max_violation: worst, steps: traj.horizon() })
}

/// [`dissipation_report`] with an absolute tolerance.
pub fn check_dissipation(cert: &Certificate, traj: &Trajectory, p: &PerfIndex, eps: f64, tol: f64) -> Result<bool> {
    Ok(dissipation_report(cert, traj, p, eps)?.max_violation <= tol)
}
