//! Reproduction targets: stability grids over `β`, the estimator gain table,
//! conservatism orderings on the hold loop and estimator traces.
//!
//! Every target returns its raw rows plus a [`Summary`] of named pass/fail checks.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use crate::analysis::{min_gain, run_test_confirmed, Mode, SystemRef, TestKind, TestOptions};
use crate::catalog::{self, TABLE1};
use crate::dwell::{sample_sequence, DwellSpec, Policy};
use crate::matcore::Mat;
use crate::model::{closed_loop, EstimationPlant, FeedbackForm};
use crate::sdp::{SolveOptions, Status};
use crate::sim::{energy, simulate};
use crate::synthesis::{replay_gain, synthesize_iqc, synthesize_slack, Objective, SynthesisResult, REPLAY_TOL};
use crate::Result;

/// Relative tolerance against the published gain table.
pub const TABLE_TOL: f64 = 0.02;
/// Slack allowed in monotonicity and ordering checks.
pub const ORDER_TOL: f64 = 1e-3;

/// One named acceptance check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

/// Pass/fail summary of one target.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub target: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

impl Summary {
    fn new(target: &str, checks: Vec<Check>, start: Instant) -> Self {
        Summary {
            target: target.to_string(),
            passed: checks.iter().all(|c| c.passed),
            seconds: start.elapsed().as_secs_f64(),
            checks,
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// stability grid

/// Stability grid over `β` for [`catalog::exa1`].
#[derive(Clone, Debug)]
pub struct GridConfig {
    pub betas: Vec<f64>,
    /// Ranges on which lifting, clock and IQC-lifting are compared.
    pub specs: Vec<DwellSpec>,
    /// Range on which the path test is run.
    pub path_spec: DwellSpec,
    pub path_len: usize,
    pub nu: usize,
    /// Verdicts other than feasible are re-solved with the margin scaled by this factor.
    pub confirm_factor: f64,
    pub opts: TestOptions,
}

/// Margin factor used to confirm infeasibility on the stability grid.
pub const CONFIRM_FACTOR: f64 = 0.01;

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            betas: catalog::exa1_beta_grid(),
            specs: vec![DwellSpec::Rdt(1, 2), DwellSpec::Rdt(2, 3), DwellSpec::Rdt(4, 6), DwellSpec::Rdt(6, 9)],
            path_spec: DwellSpec::Rdt(6, 9),
            path_len: 11,
            nu: 1,
            confirm_factor: CONFIRM_FACTOR,
            opts: TestOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridRow {
    pub beta: f64,
    pub spec: String,
    pub test: String,
    pub param: String,
    pub status: String,
    pub seconds: f64,
}

impl GridRow {
    fn feasible(&self) -> bool {
        self.status == Status::Feasible.as_str()
    }
}

pub fn write_grid_csv<W: Write>(rows: &[GridRow], out: W) -> Result<()> {
    write_rows(rows, out)
}

/// Run the grid and compare the tests point by point.
pub fn stability_grid(cfg: &GridConfig) -> Result<(Vec<GridRow>, Summary)> {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut jobs: Vec<(DwellSpec, TestKind, usize)> = Vec::new();
    for s in &cfg.specs {
        jobs.push((*s, TestKind::Lifting, 0));
        jobs.push((*s, TestKind::Clock, 0));
        jobs.push((*s, TestKind::IqcLifting, cfg.nu));
    }
    jobs.push((cfg.path_spec, TestKind::Path, cfg.path_len));
    for &beta in &cfg.betas {
        let sys = catalog::exa1(beta);
        for &(spec, kind, param) in &jobs {
            let opts = match kind {
                TestKind::Path => cfg.opts.clone().with_path_len(param),
                _ => cfg.opts.clone().with_nu(param),
            };
            let o = run_test_confirmed(kind, SystemRef::Jump(&sys), &spec, &Mode::Stability, &opts, cfg.confirm_factor)?;
            let param = match kind {
                TestKind::Path => format!("L={param}"),
                TestKind::IqcLifting => format!("nu={param}"),
                _ => String::new(),
            };
            rows.push(GridRow {
                beta,
                spec: spec.to_string(),
                test: kind.to_string(),
                param,
                status: o.status.as_str().to_string(),
                seconds: o.seconds,
            });
        }
    }
    let find = |beta: f64, spec: &DwellSpec, test: TestKind| {
        rows.iter()
            .find(|r| r.beta == beta && r.spec == spec.to_string() && r.test == test.as_str())
            .map(GridRow::feasible)
            .unwrap_or(false)
    };
    let mut clock_vs_lifting = Vec::new();
    let mut iqc_vs_lifting = Vec::new();
    for s in &cfg.specs {
        for &beta in &cfg.betas {
            let lift = find(beta, s, TestKind::Lifting);
            if find(beta, s, TestKind::Clock) != lift {
                clock_vs_lifting.push(format!("{s} β={beta:.1}"));
            }
            if find(beta, s, TestKind::IqcLifting) != lift {
                iqc_vs_lifting.push(format!("{s} β={beta:.1}"));
            }
        }
    }
    let witnesses: Vec<f64> = cfg
        .betas
        .iter()
        .copied()
        .filter(|&b| find(b, &cfg.path_spec, TestKind::Path) && !find(b, &cfg.path_spec, TestKind::Clock))
        .collect();
    let points = cfg.specs.len() * cfg.betas.len();
    let disagreement = |v: &[String]| {
        if v.is_empty() {
            format!("{points} points agree")
        } else {
            format!("{} of {points} points disagree: {}", v.len(), v.join(", "))
        }
    };
    let checks = vec![
        Check::new("clock agrees with lifting", clock_vs_lifting.is_empty(), disagreement(&clock_vs_lifting)),
        Check::new("iqc-lifting agrees with lifting", iqc_vs_lifting.is_empty(), disagreement(&iqc_vs_lifting)),
        Check::new(
            "path succeeds where clock fails",
            !witnesses.is_empty(),
            format!(
                "{} at {}: {} witnesses{}",
                TestKind::Path,
                cfg.path_spec,
                witnesses.len(),
                witnesses.first().map(|b| format!(", first β={b:.2}")).unwrap_or_default()
            ),
        ),
    ];
    Ok((rows, Summary::new("fig2", checks, start)))
}

// ---------------------------------------------------------------------------
// estimator gain table

#[derive(Clone, Debug)]
pub struct TableConfig {
    /// Filter lengths of the IQC columns.
    pub nus: Vec<usize>,
    /// Replay every synthesized estimator through closed-loop analysis.
    pub replay: bool,
    pub solve: SolveOptions,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig { nus: vec![1, 2, 3], replay: true, solve: SolveOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableCell {
    pub spec: String,
    /// `slack` or `nu=ν`.
    pub column: String,
    pub published: Option<f64>,
    /// Optimal value of the synthesis program.
    pub optimum: Option<f64>,
    /// Certified bound of the returned estimator.
    pub gamma: Option<f64>,
    pub rel_err: Option<f64>,
    pub replay: Option<f64>,
    pub order: Option<usize>,
    pub seconds: f64,
    pub error: Option<String>,
}

/// Synthesized cell with its estimator.
pub struct TableEntry {
    pub cell: TableCell,
    pub result: Option<SynthesisResult>,
}

pub fn write_table_csv<W: Write>(entries: &[TableEntry], out: W) -> Result<()> {
    let cells: Vec<&TableCell> = entries.iter().map(|e| &e.cell).collect();
    write_rows(&cells, out)
}

fn table_cell(p: &EstimationPlant, spec: &DwellSpec, nu: Option<usize>, published: Option<f64>, cfg: &TableConfig) -> TableEntry {
    let start = Instant::now();
    let res = match nu {
        None => synthesize_slack(&catalog::exa_syn(), spec, Objective::MinimizeGamma, &cfg.solve),
        Some(nu) => synthesize_iqc(p, spec, nu, Objective::MinimizeGamma, &cfg.solve),
    };
    let column = nu.map_or("slack".to_string(), |v| format!("nu={v}"));
    let mut cell = TableCell {
        spec: spec.to_string(),
        column,
        published,
        optimum: None,
        gamma: None,
        rel_err: None,
        replay: None,
        order: None,
        seconds: 0.0,
        error: None,
    };
    let result = match res {
        Ok(r) => {
            cell.optimum = Some(r.optimum);
            cell.gamma = Some(r.gamma);
            cell.rel_err = published.map(|g| r.optimum / g - 1.0);
            cell.order = Some(r.estimator.order());
            if cfg.replay {
                let opts = TestOptions { solve: cfg.solve.clone(), ..TestOptions::default() };
                match replay_gain(p, &r, &opts) {
                    Ok(g) => cell.replay = Some(g),
                    Err(e) => cell.error = Some(e.to_string()),
                }
            }
            Some(r)
        }
        Err(e) => {
            cell.error = Some(e.to_string());
            None
        }
    };
    cell.seconds = start.elapsed().as_secs_f64();
    TableEntry { cell, result }
}

/// Synthesize every cell of the published table for [`catalog::exa_syn`].
pub fn gain_table(cfg: &TableConfig) -> (Vec<TableEntry>, Summary) {
    let start = Instant::now();
    let p = catalog::exa_syn().to_estimation_plant();
    let mut entries = Vec::new();
    for (spec, published) in TABLE1.iter() {
        entries.push(table_cell(&p, spec, None, Some(published[0]), cfg));
        for &nu in &cfg.nus {
            let pubv = (1..=3).contains(&nu).then(|| published[nu]);
            entries.push(table_cell(&p, spec, Some(nu), pubv, cfg));
        }
    }
    let checks = table_checks(&entries, cfg);
    (entries, Summary::new("table1", checks, start))
}

fn table_checks(entries: &[TableEntry], cfg: &TableConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    let compared: Vec<&TableCell> = entries.iter().map(|e| &e.cell).filter(|c| c.published.is_some()).collect();
    let off: Vec<String> = compared
        .iter()
        .filter(|c| c.rel_err.map_or(true, |r| r.abs() > TABLE_TOL))
        .map(|c| match (c.optimum, c.rel_err) {
            (Some(g), Some(r)) => format!("{} {}: {g:.4} vs {:.3} ({:+.1}%)", c.spec, c.column, c.published.unwrap(), 100.0 * r),
            _ => format!("{} {}: {}", c.spec, c.column, c.error.as_deref().unwrap_or("no value")),
        })
        .collect();
    checks.push(Check::new(
        "published values within 2%",
        off.is_empty(),
        if off.is_empty() { format!("{} cells match", compared.len()) } else { format!("{} of {} off: {}", off.len(), compared.len(), off.join("; ")) },
    ));
    let mut bad_order = Vec::new();
    for (spec, _) in TABLE1.iter() {
        let row: Vec<Option<f64>> = entries.iter().filter(|e| e.cell.spec == spec.to_string()).map(|e| e.cell.optimum).collect();
        for w in row.windows(2) {
            match (w[0], w[1]) {
                (Some(a), Some(b)) if b <= a * (1.0 + ORDER_TOL) => {}
                _ => bad_order.push(format!("{spec}: {:?}", row)),
            }
        }
    }
    bad_order.dedup();
    checks.push(Check::new(
        "slack ≥ iqc ν=1 ≥ ν=2 ≥ …",
        bad_order.is_empty(),
        if bad_order.is_empty() { "every row ordered".to_string() } else { bad_order.join("; ") },
    ));
    if cfg.replay {
        let bad: Vec<String> = entries
            .iter()
            .map(|e| &e.cell)
            .filter(|c| match (c.gamma, c.replay) {
                (Some(g), Some(r)) => !(r <= g * (1.0 + REPLAY_TOL)),
                _ => true,
            })
            .map(|c| format!("{} {}: replay {:?} vs γ {:?}", c.spec, c.column, c.replay, c.gamma))
            .collect();
        checks.push(Check::new(
            "closed-loop replay within 1%",
            bad.is_empty(),
            if bad.is_empty() { format!("{} estimators certified", entries.len()) } else { bad.join("; ") },
        ));
    }
    checks
}

// ---------------------------------------------------------------------------
// conservatism orderings on the hold loop

#[derive(Clone, Debug)]
pub struct OrderingConfig {
    pub gain: f64,
    pub specs: Vec<DwellSpec>,
    pub nus: Vec<usize>,
    pub opts: TestOptions,
}

impl Default for OrderingConfig {
    fn default() -> Self {
        OrderingConfig {
            gain: catalog::HOLD_GAIN,
            specs: vec![DwellSpec::Rdt(1, 3), DwellSpec::Rdt(2, 4), DwellSpec::Rdt(3, 5)],
            nus: vec![1, 2, 3],
            opts: TestOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GainRow {
    pub spec: String,
    pub test: String,
    pub nu: Option<usize>,
    pub status: String,
    pub gamma: Option<f64>,
    pub seconds: f64,
}

pub fn write_gain_csv<W: Write>(rows: &[GainRow], out: W) -> Result<()> {
    write_rows(rows, out)
}

fn gain_row(f: &FeedbackForm, spec: &DwellSpec, kind: TestKind, nu: Option<usize>, opts: &TestOptions) -> Result<GainRow> {
    let o = opts.clone().with_nu(nu.unwrap_or(opts.nu));
    let (_, out) = min_gain(kind, SystemRef::Feedback(f), spec, &o)?;
    Ok(GainRow {
        spec: spec.to_string(),
        test: kind.to_string(),
        nu,
        status: out.status.as_str().to_string(),
        gamma: out.gamma,
        seconds: out.seconds,
    })
}

/// Energy gains of every applicable test on [`catalog::hold_loop`].
pub fn hold_orderings(cfg: &OrderingConfig) -> Result<(Vec<GainRow>, Summary)> {
    let start = Instant::now();
    let f = catalog::hold_loop(cfg.gain);
    let mut rows = Vec::new();
    for s in &cfg.specs {
        for kind in [TestKind::Lifting, TestKind::Clock, TestKind::ClockSlack] {
            rows.push(gain_row(&f, s, kind, None, &cfg.opts)?);
        }
        for &nu in &cfg.nus {
            rows.push(gain_row(&f, s, TestKind::IqcClock, Some(nu), &cfg.opts)?);
            rows.push(gain_row(&f, s, TestKind::IqcLifting, Some(nu), &cfg.opts)?);
        }
    }
    let g = |s: &DwellSpec, kind: TestKind, nu: Option<usize>| {
        rows.iter()
            .find(|r| r.spec == s.to_string() && r.test == kind.as_str() && r.nu == nu)
            .and_then(|r| r.gamma)
            .unwrap_or(f64::INFINITY)
    };
    let le = |a: f64, b: f64| a <= b * (1.0 + ORDER_TOL) + ORDER_TOL;
    let mut mono = Vec::new();
    let mut lattice = Vec::new();
    for s in &cfg.specs {
        let (lift, clock, slack) = (g(s, TestKind::Lifting, None), g(s, TestKind::Clock, None), g(s, TestKind::ClockSlack, None));
        if !clock.is_finite() {
            lattice.push(format!("{s}: clock test gave no bound"));
        }
        if !(le(clock, lift) && le(lift, clock)) {
            lattice.push(format!("{s}: clock {clock:.4} vs lifting {lift:.4}"));
        }
        if !le(clock, slack) {
            lattice.push(format!("{s}: clock-slack {slack:.4} below clock {clock:.4}"));
        }
        for w in cfg.nus.windows(2) {
            let (a, b) = (g(s, TestKind::IqcLifting, Some(w[0])), g(s, TestKind::IqcLifting, Some(w[1])));
            if !le(b, a) {
                mono.push(format!("{s}: ν={} {a:.4} < ν={} {b:.4}", w[0], w[1]));
            }
        }
        for &nu in &cfg.nus {
            let (il, ic) = (g(s, TestKind::IqcLifting, Some(nu)), g(s, TestKind::IqcClock, Some(nu)));
            if !le(lift, il) {
                lattice.push(format!("{s}: iqc-lifting ν={nu} {il:.4} below lifting {lift:.4}"));
            }
            if !le(il, ic) {
                lattice.push(format!("{s}: iqc-clock ν={nu} {ic:.4} below iqc-lifting {il:.4}"));
            }
            if !le(clock, ic) {
                lattice.push(format!("{s}: iqc-clock ν={nu} {ic:.4} below clock {clock:.4}"));
            }
        }
    }
    let checks = vec![
        Check::new(
            "iqc-lifting non-increasing in ν",
            mono.is_empty(),
            if mono.is_empty() { format!("{} ranges monotone", cfg.specs.len()) } else { mono.join("; ") },
        ),
        Check::new(
            "gain ordering lattice",
            lattice.is_empty(),
            if lattice.is_empty() { "lifting = clock ≤ clock-slack, lifting ≤ iqc-lifting ≤ iqc-clock".to_string() } else { lattice.join("; ") },
        ),
    ];
    Ok((rows, Summary::new("ordering", checks, start)))
}

// ---------------------------------------------------------------------------
// estimator traces

/// Disturbances and sequences for estimator traces.
#[derive(Clone, Debug)]
pub struct TraceConfig {
    pub spec: DwellSpec,
    pub nu: usize,
    pub horizon: usize,
    /// Seed of the plotted sequence; the random check sequences use `seed + 1 …`.
    pub seed: u64,
    pub random_sequences: usize,
    pub solve: SolveOptions,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig { spec: DwellSpec::Rdt(9, 10), nu: 1, horizon: 300, seed: 0, random_sequences: 10, solve: SolveOptions::default() }
    }
}

/// Plant output `v` and estimates `u` along one impulse sequence.
#[derive(Clone, Debug)]
pub struct Trace {
    pub disturbance: String,
    pub labels: Vec<String>,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub impulses: Vec<bool>,
}

impl Trace {
    /// CSV with columns `t, d, v, u_<label>…, impulse`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "d".into(), "v".into()];
        header.extend(self.labels.iter().map(|l| format!("u_{l}")));
        header.push("impulse".into());
        w.write_record(&header)?;
        for t in 0..self.d.len() {
            let mut row = vec![t.to_string(), self.d[t].to_string(), self.v[t].to_string()];
            row.extend(self.u.iter().map(|u| u[t].to_string()));
            row.push((self.impulses[t] as u8).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Empirical error-to-disturbance ratio of one estimator for one disturbance and sequence.
#[derive(Clone, Debug, Serialize)]
pub struct RatioRow {
    pub estimator: String,
    pub disturbance: String,
    pub seed: u64,
    pub ratio: f64,
    pub gamma: f64,
}

pub fn write_ratio_csv<W: Write>(rows: &[RatioRow], out: W) -> Result<()> {
    write_rows(rows, out)
}

/// Simulate each estimator against `d` along one sequence; returns `(v, u per estimator, ratios, flags)`.
fn run_estimators(
    p: &EstimationPlant,
    ests: &[(String, &SynthesisResult)],
    spec: &DwellSpec,
    d: &Mat,
    horizon: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>, Vec<bool>)> {
    let seq = sample_sequence(spec, horizon as i64, Policy::UniformRandom { seed })?;
    let mut v = Vec::new();
    let mut us = Vec::new();
    let mut ratios = Vec::new();
    let mut flags = Vec::new();
    for (_, r) in ests {
        let cl = closed_loop(p, &r.estimator)?;
        let tr = simulate(&cl, &seq, &DVector::zeros(cl.n()), d, horizon)?;
        let xp = tr.x.rows(0, p.n()).columns(0, horizon).into_owned();
        let vm = &p.cv * &xp + &p.dvw * &tr.w + &p.dvd * &tr.d;
        let um = &vm - &tr.e;
        v = vm.row(0).iter().copied().collect();
        us.push(um.row(0).iter().copied().collect());
        ratios.push((energy(&tr.e) / energy(&tr.d)).sqrt());
        flags = tr.impulses;
    }
    Ok((v, us, ratios, flags))
}

/// Traces for `d₁`, `d₂` along the plotted sequence, plus ratios over random sequences.
pub fn estimator_traces(
    p: &EstimationPlant,
    ests: &[(String, &SynthesisResult)],
    cfg: &TraceConfig,
) -> Result<(Vec<Trace>, Vec<RatioRow>, Check)> {
    let signals: [(&str, fn(usize) -> f64); 2] = [("d1", catalog::d1), ("d2", catalog::d2)];
    let mut traces = Vec::new();
    let mut ratios = Vec::new();
    for (name, sig) in signals {
        let d = catalog::sample(sig, cfg.horizon);
        for k in 0..=cfg.random_sequences as u64 {
            let seed = cfg.seed + k;
            let (v, u, r, flags) = run_estimators(p, ests, &cfg.spec, &d, cfg.horizon, seed)?;
            for ((label, res), ratio) in ests.iter().zip(&r) {
                ratios.push(RatioRow { estimator: label.clone(), disturbance: name.into(), seed, ratio: *ratio, gamma: res.gamma });
            }
            if k == 0 {
                traces.push(Trace {
                    disturbance: name.into(),
                    labels: ests.iter().map(|(l, _)| l.clone()).collect(),
                    d: d.row(0).iter().copied().collect(),
                    v,
                    u,
                    impulses: flags,
                });
            }
        }
    }
    let bad: Vec<String> = ratios
        .iter()
        .filter(|r| !(r.ratio <= r.gamma))
        .map(|r| format!("{} {} seed {}: {:.4} > {:.4}", r.estimator, r.disturbance, r.seed, r.ratio, r.gamma))
        .collect();
    let worst = ratios.iter().map(|r| r.ratio / r.gamma).fold(0.0, f64::max);
    let check = Check::new(
        "empirical ratio ≤ certified γ",
        bad.is_empty(),
        if bad.is_empty() { format!("{} runs, worst ratio/γ {worst:.3}", ratios.len()) } else { bad.join("; ") },
    );
    Ok((traces, ratios, check))
}

/// Synthesize both estimators at `cfg.spec` and produce their traces.
pub fn fig8(cfg: &TraceConfig) -> Result<(Vec<Trace>, Vec<RatioRow>, Summary)> {
    let start = Instant::now();
    let jp = catalog::exa_syn();
    let p = jp.to_estimation_plant();
    let slack = synthesize_slack(&jp, &cfg.spec, Objective::MinimizeGamma, &cfg.solve)?;
    let iqc = synthesize_iqc(&p, &cfg.spec, cfg.nu, Objective::MinimizeGamma, &cfg.solve)?;
    let ests = [("slack".to_string(), &slack), (format!("iqc{}", cfg.nu), &iqc)];
    let (traces, ratios, check) = estimator_traces(&p, &ests, cfg)?;
    Ok((traces, ratios, Summary::new("fig8", vec![check], start)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_passes_only_when_all_checks_pass() {
        let s = Summary::new("x", vec![Check::new("a", true, ""), Check::new("b", false, "")], Instant::now());
        assert!(!s.passed);
        let s = Summary::new("x", vec![Check::new("a", true, "")], Instant::now());
        assert!(s.passed);
    }

    #[test]
    fn traces_reconstruct_plant_output() {
        let cfg = TraceConfig { random_sequences: 1, horizon: 120, ..TraceConfig::default() };
        let jp = catalog::exa_syn();
        let p = jp.to_estimation_plant();
        let slack = synthesize_slack(&jp, &cfg.spec, Objective::MinimizeGamma, &cfg.solve).unwrap();
        let (traces, ratios, check) = estimator_traces(&p, &[("slack".into(), &slack)], &cfg).unwrap();
        assert_eq!(traces.len(), 2);
        assert_eq!(ratios.len(), 4);
        assert!(check.passed, "{}", check.detail);
        let tr = &traces[0];
        // at t = 0 the plant state is zero, so v = D_vd d and the estimate is D_e D_yd d
        assert!(tr.v[0].abs() < 1e-12 && tr.u[0][0].abs() < 1e-12);
        assert!(tr.v.iter().any(|v| v.abs() > 1e-3));
    }
}
