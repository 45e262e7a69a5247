//! Command-line front end.
//!
//! Exit codes: [`EXIT_OK`] when the requested property holds, [`EXIT_FAIL`] when a
//! test is infeasible or inaccurate (or a reproduction check fails) and
//! [`EXIT_ERROR`] for bad input, malformed files and solver errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{run_test, Mode, ResultRow, SystemRef, TestKind, TestOptions};
use crate::catalog;
use crate::dwell::{sample_sequence, DwellSpec, Policy};
use crate::matcore::Mat;
use crate::model::{closed_loop, Estimator, FeedbackForm, JumpForm, PerfIndex, SystemFile};
use crate::reproduce::{self, Summary};
use crate::sdp::{SolveOptions, Status};
use crate::sim::{gain_ratio, random_disturbance, simulate, simulate_jump, Ensemble, Trajectory, DEFAULT_HORIZON, TAIL_FRACTION};
use crate::synthesis::{synthesize_iqc, synthesize_slack, Objective, Route, SynthesisResult};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "impulse-iqc", version, about = "Certificates and estimator synthesis for discrete-time impulsive systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one certificate test.
    Analyze(AnalyzeArgs),
    /// Smallest certified energy gain of one test.
    Gain(AnalyzeArgs),
    /// Synthesize a non-impulsive estimator.
    Synthesize(SynthArgs),
    /// Simulate a system along a sampled impulse sequence.
    Simulate(SimArgs),
    /// Regenerate a reproduction target with a pass/fail summary.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// System JSON file, or a builtin name: exa1, exa_syn, hold_loop.
    #[arg(long)]
    pub system: String,
    /// Parameter of the builtin exa1 system.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Estimator JSON file closing the loop around an estimation plant.
    #[arg(long)]
    pub estimator: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
#[group(required = false, multiple = false)]
pub struct DwellArgs {
    /// Range dwell time.
    #[arg(long, num_args = 2, value_names = ["TMIN", "TMAX"])]
    pub rdt: Option<Vec<u32>>,
    /// Exact dwell time.
    #[arg(long, value_name = "T")]
    pub edt: Option<u32>,
    /// Minimum dwell time.
    #[arg(long, value_name = "TMIN")]
    pub mdt: Option<u32>,
    /// Arbitrary dwell time.
    #[arg(long)]
    pub adt: bool,
}

impl DwellArgs {
    pub fn spec(&self) -> Result<DwellSpec> {
        let s = match (&self.rdt, self.edt, self.mdt, self.adt) {
            (Some(v), ..) => DwellSpec::Rdt(v[0], v[1]),
            (_, Some(t), ..) => DwellSpec::Edt(t),
            (_, _, Some(t), _) => DwellSpec::Mdt(t),
            (.., true) => DwellSpec::Adt,
            _ => return Err(Error::Invalid("a dwell condition is required (--rdt, --edt, --mdt or --adt)".into())),
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Stability,
    Performance,
    Gain,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub dwell: DwellArgs,
    /// lifting, path, clock, clock-slack, adt-static, iqc-clock or iqc-lifting.
    #[arg(long)]
    pub test: TestKind,
    #[arg(long, value_enum, default_value_t = ModeArg::Stability)]
    pub mode: ModeArg,
    /// Performance bound γ for `--mode performance`.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Window length of the path test.
    #[arg(long = "L", value_name = "L")]
    pub path_len: Option<usize>,
    /// Filter length of the IQC tests.
    #[arg(long)]
    pub nu: Option<usize>,
    /// Strictness margin of the LMIs.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteArg {
    Iqc,
    Slack,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub dwell: DwellArgs,
    #[arg(long, value_enum, default_value_t = RouteArg::Iqc)]
    pub route: RouteArg,
    /// Filter length of the IQC route.
    #[arg(long)]
    pub nu: Option<usize>,
    /// Fixed bound γ (feasibility instead of minimization).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Estimator JSON output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyArg {
    Minimal,
    Maximal,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisturbanceArg {
    D1,
    D2,
    White,
    Sinusoid,
    Steps,
    Zero,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub dwell: DwellArgs,
    #[arg(long, value_enum, default_value_t = PolicyArg::Random)]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    #[arg(long, value_enum, default_value_t = DisturbanceArg::D1)]
    pub disturbance: DisturbanceArg,
    /// Initial state, comma separated (zero when absent).
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectory CSV output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Fig2,
    Table1,
    Ordering,
    Fig8,
}

#[derive(Args, Debug, Clone)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub target: Target,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip closed-loop replays of synthesized estimators.
    #[arg(long)]
    pub no_replay: bool,
    /// Filter length of the IQC estimator in fig8.
    #[arg(long, default_value_t = 1)]
    pub nu: usize,
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Analyze,
    Gain,
    Synthesize,
    Simulate,
    Reproduce,
}

/// Validated settings shared by all commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub system: Option<String>,
    pub spec: Option<DwellSpec>,
    pub test: Option<TestKind>,
    pub nu: Option<usize>,
    pub path_len: Option<usize>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    fn empty(command: CommandKind) -> Self {
        RunConfig { command, system: None, spec: None, test: None, nu: None, path_len: None, eps: None, out: None, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_len.is_some() && self.test != Some(TestKind::Path) {
            return Err(Error::Invalid("--L only applies to the path test".into()));
        }
        if self.nu.is_some() && self.command != CommandKind::Synthesize && self.command != CommandKind::Reproduce && !matches!(self.test, Some(TestKind::IqcClock | TestKind::IqcLifting)) {
            return Err(Error::Invalid("--nu only applies to the IQC tests".into()));
        }
        if let Some(l) = self.path_len {
            if l == 0 {
                return Err(Error::Invalid("--L must be positive".into()));
            }
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Invalid(format!("--eps must be positive, got {e}")));
            }
        }
        if let Some(s) = &self.spec {
            s.validate()?;
        }
        Ok(())
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions { eps: self.eps, ..SolveOptions::default() }
    }

    fn test_options(&self) -> TestOptions {
        let d = TestOptions::default();
        TestOptions {
            solve: self.solve_options(),
            nu: self.nu.unwrap_or(d.nu),
            path_len: self.path_len.unwrap_or(d.path_len),
            balance: d.balance,
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Analyze(a) => cmd_analyze(&a, false),
        Command::Gain(a) => cmd_analyze(&a, true),
        Command::Synthesize(a) => cmd_synthesize(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Reproduce(a) => cmd_reproduce(&a),
    }
}

/// Load a system file or a builtin system.
pub fn load_system(args: &SystemArgs) -> Result<SystemFile> {
    let path = Path::new(&args.system);
    let sys = if path.exists() {
        if args.beta.is_some() {
            return Err(Error::Invalid("--beta only applies to the builtin exa1 system".into()));
        }
        SystemFile::from_json_str(&fs::read_to_string(path)?)?
    } else {
        let stem = args.system.strip_suffix(".json").unwrap_or(&args.system);
        let stem = Path::new(stem).file_name().and_then(|s| s.to_str()).unwrap_or(stem);
        catalog::builtin(stem, args.beta).map_err(|e| match e {
            Error::Invalid(m) => Error::Invalid(format!("{}: {m}", args.system)),
            e => e,
        })?
    };
    match (sys, &args.estimator) {
        (s, None) => Ok(s),
        (SystemFile::Estimation(p), Some(e)) => Ok(SystemFile::Feedback(closed_loop(&p, &load_estimator(e)?)?)),
        (SystemFile::JumpEstimation(p), Some(e)) => Ok(SystemFile::Feedback(closed_loop(&p.to_estimation_plant(), &load_estimator(e)?)?)),
        _ => Err(Error::Invalid("--estimator needs an estimation plant".into())),
    }
}

fn load_estimator(path: &Path) -> Result<Estimator> {
    match SystemFile::from_json_str(&fs::read_to_string(path)?)? {
        SystemFile::Estimator(e) => Ok(e),
        _ => Err(Error::Invalid(format!("{} is not an estimator file", path.display()))),
    }
}

enum Dynamic {
    Jump(JumpForm),
    Feedback(FeedbackForm),
}

impl Dynamic {
    fn as_ref(&self) -> SystemRef<'_> {
        match self {
            Dynamic::Jump(j) => SystemRef::Jump(j),
            Dynamic::Feedback(f) => SystemRef::Feedback(f),
        }
    }

    fn dims(&self) -> (usize, usize, usize) {
        match self {
            Dynamic::Jump(j) => (j.n(), j.nd(), j.ne()),
            Dynamic::Feedback(f) => (f.n(), f.nd(), f.ne()),
        }
    }
}

fn dynamic(sys: SystemFile) -> Result<Dynamic> {
    match sys {
        SystemFile::Jump(j) => Ok(Dynamic::Jump(j)),
        SystemFile::Feedback(f) => Ok(Dynamic::Feedback(f)),
        _ => Err(Error::Invalid("analysis and simulation need a jump or feedback system (or a plant with --estimator)".into())),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Feasible => EXIT_OK,
        Status::Infeasible | Status::Inaccurate => EXIT_FAIL,
        Status::Error => EXIT_ERROR,
    }
}

fn cmd_analyze(a: &AnalyzeArgs, gain: bool) -> Result<i32> {
    let spec = if a.test == TestKind::AdtStatic && a.dwell.spec().is_err() { DwellSpec::Adt } else { a.dwell.spec()? };
    let cfg = RunConfig {
        system: Some(a.system.system.clone()),
        spec: Some(spec),
        test: Some(a.test),
        nu: a.nu,
        path_len: a.path_len,
        eps: a.eps,
        out: a.out.clone(),
        ..RunConfig::empty(if gain { CommandKind::Gain } else { CommandKind::Analyze })
    };
    cfg.validate()?;
    let sys = dynamic(load_system(&a.system)?)?;
    let (_, nd, ne) = sys.dims();
    let mode = match (gain, a.mode, a.gamma) {
        (true, ModeArg::Stability | ModeArg::Gain, None) => Mode::Gain,
        (true, ..) => return Err(Error::Invalid("gain takes no --mode performance or --gamma".into())),
        (false, ModeArg::Stability, None) => Mode::Stability,
        (false, ModeArg::Gain, None) => Mode::Gain,
        (false, ModeArg::Performance, Some(g)) if g > 0.0 => Mode::Performance(PerfIndex::gain_index(ne, nd, g * g)),
        (false, ModeArg::Performance, _) => return Err(Error::Invalid("--mode performance needs a positive --gamma".into())),
        (false, _, Some(_)) => return Err(Error::Invalid("--gamma only applies to --mode performance".into())),
    };
    let opts = cfg.test_options();
    let outcome = run_test(a.test, sys.as_ref(), &spec, &mode, &opts)?;
    let param = match a.test {
        TestKind::Path => format!("L={}", opts.path_len),
        TestKind::IqcClock | TestKind::IqcLifting => format!("nu={}", opts.nu),
        _ => String::new(),
    };
    let row = ResultRow::from_outcome(&a.system.system, &param, &mode, &outcome);
    let mut out = output(&a.out)?;
    match a.format {
        Format::Csv => crate::analysis::write_csv(std::slice::from_ref(&row), &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &row)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(status_code(outcome.status))
}

#[derive(Serialize)]
struct SynthReport<'a> {
    route: &'a str,
    spec: String,
    nu: Option<usize>,
    gamma: f64,
    optimum: f64,
    order: usize,
    seconds: f64,
}

fn cmd_synthesize(a: &SynthArgs) -> Result<i32> {
    let spec = a.dwell.spec()?;
    let cfg = RunConfig {
        system: Some(a.system.system.clone()),
        spec: Some(spec),
        nu: a.nu,
        eps: a.eps,
        out: a.out.clone(),
        ..RunConfig::empty(CommandKind::Synthesize)
    };
    cfg.validate()?;
    if a.route == RouteArg::Slack && a.nu.is_some() {
        return Err(Error::Invalid("--nu only applies to the iqc route".into()));
    }
    if a.system.estimator.is_some() {
        return Err(Error::Invalid("synthesize takes a plant, not --estimator".into()));
    }
    let objective = a.gamma.map_or(Objective::MinimizeGamma, Objective::Feasibility);
    let solve = cfg.solve_options();
    let res: Result<SynthesisResult> = match (load_system(&a.system)?, a.route) {
        (SystemFile::JumpEstimation(j), RouteArg::Slack) => synthesize_slack(&j, &spec, objective, &solve),
        (SystemFile::JumpEstimation(j), RouteArg::Iqc) => synthesize_iqc(&j.to_estimation_plant(), &spec, a.nu.unwrap_or(1), objective, &solve),
        (SystemFile::Estimation(p), RouteArg::Iqc) => synthesize_iqc(&p, &spec, a.nu.unwrap_or(1), objective, &solve),
        (SystemFile::Estimation(_), RouteArg::Slack) => return Err(Error::Invalid("the slack route needs a plant in jump-estimation form".into())),
        _ => return Err(Error::Invalid("synthesis needs an estimation plant".into())),
    };
    let r = match res {
        Ok(r) => r,
        Err(Error::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(e),
    };
    let report = SynthReport {
        route: r.route.as_str(),
        spec: r.spec.to_string(),
        nu: (r.route == Route::Iqc).then_some(r.nu).flatten(),
        gamma: r.gamma,
        optimum: r.optimum,
        order: r.estimator.order(),
        seconds: r.seconds,
    };
    eprintln!("{}", serde_json::to_string(&report)?);
    let mut out = output(&a.out)?;
    writeln!(out, "{}", SystemFile::Estimator(r.estimator).to_json_string())?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn disturbance(kind: DisturbanceArg, nd: usize, horizon: usize, seed: u64) -> Mat {
    let support = ((1.0 - TAIL_FRACTION) * horizon as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signal = |f: fn(usize) -> f64| Mat::from_fn(nd, horizon, |_, t| f(t));
    match kind {
        DisturbanceArg::D1 => signal(catalog::d1),
        DisturbanceArg::D2 => signal(catalog::d2),
        DisturbanceArg::White => random_disturbance(Ensemble::WhiteUniform, nd, horizon, support, &mut rng),
        DisturbanceArg::Sinusoid => random_disturbance(Ensemble::Sinusoid, nd, horizon, support, &mut rng),
        DisturbanceArg::Steps => random_disturbance(Ensemble::Steps, nd, horizon, support, &mut rng),
        DisturbanceArg::Zero => Mat::zeros(nd, horizon),
    }
}

fn cmd_simulate(a: &SimArgs) -> Result<i32> {
    let spec = a.dwell.spec()?;
    let cfg = RunConfig {
        system: Some(a.system.system.clone()),
        spec: Some(spec),
        out: a.out.clone(),
        seed: a.seed,
        ..RunConfig::empty(CommandKind::Simulate)
    };
    cfg.validate()?;
    let sys = dynamic(load_system(&a.system)?)?;
    let (n, nd, _) = sys.dims();
    let policy = match a.policy {
        PolicyArg::Minimal => Policy::Minimal,
        PolicyArg::Maximal => Policy::Maximal,
        PolicyArg::Random => Policy::UniformRandom { seed: a.seed },
    };
    let seq = sample_sequence(&spec, a.horizon as i64, policy)?;
    let x0 = match &a.x0 {
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(n),
    };
    let d = disturbance(a.disturbance, nd, a.horizon, a.seed);
    let tr: Trajectory = match &sys {
        Dynamic::Jump(j) => simulate_jump(j, &seq, &x0, &d, a.horizon)?,
        Dynamic::Feedback(f) => simulate(f, &seq, &x0, &d, a.horizon)?,
    };
    eprintln!("impulses {} gain ratio {:.6}", seq.instants().len(), gain_ratio(&tr));
    let mut out = output(&a.out)?;
    tr.write_csv(&mut out)?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn finish(dir: &Path, summary: &Summary) -> Result<i32> {
    write_file(dir, &format!("{}_summary.json", summary.target), |w| summary.write_json(w))?;
    for c in &summary.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    eprintln!("{} {} in {:.1}s", summary.target, if summary.passed { "passed" } else { "failed" }, summary.seconds);
    Ok(if summary.passed { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_reproduce(a: &ReproduceArgs) -> Result<i32> {
    let cfg = RunConfig { eps: a.eps, out: Some(a.out.clone()), seed: a.seed, ..RunConfig::empty(CommandKind::Reproduce) };
    cfg.validate()?;
    fs::create_dir_all(&a.out)?;
    let dir = a.out.as_path();
    match a.target {
        Target::Fig2 => {
            let g = reproduce::GridConfig { opts: cfg.test_options(), ..Default::default() };
            let (rows, summary) = reproduce::stability_grid(&g)?;
            write_file(dir, "fig2_grid.csv", |w| reproduce::write_grid_csv(&rows, w))?;
            finish(dir, &summary)
        }
        Target::Table1 => {
            let t = reproduce::TableConfig { replay: !a.no_replay, solve: cfg.solve_options(), ..Default::default() };
            let (entries, summary) = reproduce::gain_table(&t);
            write_file(dir, "table1.csv", |w| reproduce::write_table_csv(&entries, w))?;
            for e in &entries {
                if let Some(r) = &e.result {
                    let name = format!("table1_{}_{}.json", e.cell.spec.replace(['(', ')', ','], "_"), e.cell.column.replace('=', ""));
                    write_file(dir, &name, |w| Ok(writeln!(w, "{}", SystemFile::Estimator(r.estimator.clone()).to_json_string())?))?;
                }
            }
            finish(dir, &summary)
        }
        Target::Ordering => {
            let o = reproduce::OrderingConfig { opts: cfg.test_options(), ..Default::default() };
            let (rows, summary) = reproduce::hold_orderings(&o)?;
            write_file(dir, "ordering.csv", |w| reproduce::write_gain_csv(&rows, w))?;
            finish(dir, &summary)
        }
        Target::Fig8 => {
            let t = reproduce::TraceConfig { nu: a.nu, seed: a.seed, solve: cfg.solve_options(), ..Default::default() };
            let (traces, ratios, summary) = reproduce::fig8(&t)?;
            for tr in &traces {
                write_file(dir, &format!("fig8_{}.csv", tr.disturbance), |w| tr.write_csv(w))?;
            }
            write_file(dir, "fig8_ratios.csv", |w| reproduce::write_ratio_csv(&ratios, w))?;
            finish(dir, &summary)
        }
    }
}
