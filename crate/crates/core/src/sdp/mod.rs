//! LMI programs and their solution.
//!
//! A constraint is stored as `F(y) = Oᵀ (C + Σᵢ yᵢ Eᵢ) O + C_full` where `O` is an
//! optional constant outer factor, `C`/`Eᵢ` live in the (usually larger) middle
//! coordinates and every `Eᵢ` is sparse. This mirrors how the tests are written,
//! `(•)ᵀ diag(X, −X, M, P) [outer] ≺ 0`, and keeps the Schur matrix cheap to form.

mod ipm;

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DVector;

use crate::matcore::{eig_extremes, max_abs, Mat};

pub use ipm::InteriorPoint;

/// Relative dual residual below which a phase-1 dual bound `< eps/2` certifies
/// infeasibility at margin `eps`.
pub const DUAL_CERT_TOL: f64 = 1e-6;

/// Default box bound on every scalar decision variable.
pub const DEFAULT_BOUND: f64 = 1e6;

/// Handle to a declared decision variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub symmetric: bool,
}

impl Var {
    /// Number of scalar unknowns.
    pub fn len(&self) -> usize {
        if self.symmetric {
            self.rows * (self.rows + 1) / 2
        } else {
            self.rows * self.cols
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scalar index of entry `(p, q)`.
    pub fn index(&self, p: usize, q: usize) -> usize {
        if self.symmetric {
            let (i, j) = if p <= q { (p, q) } else { (q, p) };
            // row-wise upper triangle
            self.offset + i * self.rows - i * (i + 1) / 2 + j
        } else {
            self.offset + p * self.cols + q
        }
    }

    /// Read the variable's value from a solution vector.
    pub fn value(&self, y: &DVector<f64>) -> Mat {
        Mat::from_fn(self.rows, self.cols, |p, q| y[self.index(p, q)])
    }

    /// Iterate `(p, q, scalar index)` over the stored entries (upper triangle when symmetric).
    fn entries(&self) -> Vec<(usize, usize, usize)> {
        let mut v = Vec::with_capacity(self.len());
        for p in 0..self.rows {
            let q0 = if self.symmetric { p } else { 0 };
            for q in q0..self.cols {
                v.push((p, q, self.index(p, q)));
            }
        }
        v
    }
}

/// Constraint sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    /// `F ≺ 0`, enforced as `F ⪯ −eps·I`.
    NegDef,
    /// `F ≻ 0`, enforced as `F ⪰ eps·I`.
    PosDef,
    /// `F ⪰ 0`.
    Psd,
}

impl Sense {
    pub fn is_strict(&self) -> bool {
        !matches!(self, Sense::Psd)
    }
}

/// `c · (e_a e_bᵀ + e_b e_aᵀ)` contribution of scalar `var`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Entry {
    pub var: usize,
    pub a: usize,
    pub b: usize,
    pub c: f64,
}

/// One matrix inequality under construction.
#[derive(Clone, Debug)]
pub struct Lmi {
    pub name: String,
    pub sense: Sense,
    mid: usize,
    outer: Option<Mat>,
    constant: Mat,
    full_constant: Option<Mat>,
    entries: Vec<Entry>,
}

impl Lmi {
    /// Constraint in `mid` coordinates without outer factor.
    pub fn new(name: impl Into<String>, sense: Sense, mid: usize) -> Self {
        Lmi {
            name: name.into(),
            sense,
            mid,
            outer: None,
            constant: Mat::zeros(mid, mid),
            full_constant: None,
            entries: Vec::new(),
        }
    }

    /// Constraint `Oᵀ (·) O` with `O` of size `mid × n`.
    pub fn with_outer(name: impl Into<String>, sense: Sense, outer: Mat) -> Self {
        let mut l = Lmi::new(name, sense, outer.nrows());
        l.outer = Some(outer);
        l
    }

    /// Dimension of the constrained matrix.
    pub fn dim(&self) -> usize {
        self.outer.as_ref().map_or(self.mid, |o| o.ncols())
    }

    pub fn mid_dim(&self) -> usize {
        self.mid
    }

    pub fn outer(&self) -> Option<&Mat> {
        self.outer.as_ref()
    }

    /// Add the constant block `m` at `(r0, c0)` and its transpose at `(c0, r0)`;
    /// on the diagonal (`r0 == c0`) the symmetric part of `m` is added once.
    pub fn constant(&mut self, r0: usize, c0: usize, m: &Mat) -> &mut Self {
        let (r, c) = m.shape();
        if r0 == c0 {
            for i in 0..r {
                for j in 0..c {
                    let v = 0.5 * m[(i, j)];
                    self.constant[(r0 + i, c0 + j)] += v;
                    self.constant[(c0 + j, r0 + i)] += v;
                }
            }
        } else {
            for i in 0..r {
                for j in 0..c {
                    self.constant[(r0 + i, c0 + j)] += m[(i, j)];
                    self.constant[(c0 + j, r0 + i)] += m[(i, j)];
                }
            }
        }
        self
    }

    /// Constant added after the outer factor (full coordinates).
    pub fn constant_full(&mut self, m: &Mat) -> &mut Self {
        let n = self.dim();
        assert_eq!(m.shape(), (n, n));
        let s = (m + m.transpose()) * 0.5;
        match &mut self.full_constant {
            Some(f) => *f += s,
            None => self.full_constant = Some(s),
        }
        self
    }

    fn push(&mut self, var: usize, a: usize, b: usize, c: f64) {
        if c != 0.0 {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            self.entries.push(Entry { var, a, b, c });
        }
    }

    /// `coef · V` on the diagonal block starting at `r0` (symmetric `V`).
    pub fn sym_var(&mut self, r0: usize, v: &Var, coef: f64) -> &mut Self {
        assert!(v.symmetric, "sym_var needs a symmetric variable");
        for (p, q, s) in v.entries() {
            let c = if p == q { 0.5 * coef } else { coef };
            self.push(s, r0 + p, r0 + q, c);
        }
        self
    }

    /// `coef · g · I_len` on the diagonal starting at `r0` (scalar `g`).
    pub fn scalar_ident(&mut self, r0: usize, len: usize, g: &Var, coef: f64) -> &mut Self {
        assert_eq!(g.len(), 1);
        for i in 0..len {
            self.push(g.offset, r0 + i, r0 + i, 0.5 * coef);
        }
        self
    }

    /// Add `coef · L V R` at block `(r0, c0)` and its transpose at `(c0, r0)`.
    ///
    /// On the diagonal this gives `coef · (L V R + (L V R)ᵀ)`. `None` for `L`
    /// or `R` means the identity.
    pub fn term(&mut self, r0: usize, c0: usize, l: Option<&Mat>, v: &Var, r: Option<&Mat>, coef: f64) -> &mut Self {
        let col = |p: usize| -> Vec<(usize, f64)> {
            match l {
                None => vec![(p, 1.0)],
                Some(l) => (0..l.nrows()).filter(|&i| l[(i, p)] != 0.0).map(|i| (i, l[(i, p)])).collect(),
            }
        };
        let row = |q: usize| -> Vec<(usize, f64)> {
            match r {
                None => vec![(q, 1.0)],
                Some(r) => (0..r.ncols()).filter(|&j| r[(q, j)] != 0.0).map(|j| (j, r[(q, j)])).collect(),
            }
        };
        let add_unit = |this: &mut Lmi, s: usize, p: usize, q: usize| {
            for &(i, li) in &col(p) {
                for &(j, rj) in &row(q) {
                    this.push(s, r0 + i, c0 + j, coef * li * rj);
                }
            }
        };
        for (p, q, s) in v.entries() {
            add_unit(self, s, p, q);
            if v.symmetric && p != q {
                add_unit(self, s, q, p);
            }
        }
        self
    }

    /// Merge duplicate entries and drop zeros.
    fn finish(&mut self) {
        self.entries.sort_by(|x, y| (x.var, x.a, x.b).cmp(&(y.var, y.a, y.b)));
        let mut out: Vec<Entry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match out.last_mut() {
                Some(l) if (l.var, l.a, l.b) == (e.var, e.a, e.b) => l.c += e.c,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.c != 0.0);
        self.entries = out;
    }

    /// Constant part in full coordinates.
    pub fn constant_part(&self) -> Mat {
        let base = match &self.outer {
            Some(o) => o.transpose() * &self.constant * o,
            None => self.constant.clone(),
        };
        match &self.full_constant {
            Some(f) => base + f,
            None => base,
        }
    }

    /// `F(y)` in full coordinates.
    pub fn evaluate(&self, y: &DVector<f64>) -> Mat {
        let mut m = self.constant.clone();
        for e in &self.entries {
            let v = e.c * y[e.var];
            m[(e.a, e.b)] += v;
            m[(e.b, e.a)] += v;
        }
        let mut f = match &self.outer {
            Some(o) => o.transpose() * m * o,
            None => m,
        };
        if let Some(c) = &self.full_constant {
            f += c;
        }
        (&f + f.transpose()) * 0.5
    }

    pub(crate) fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Replace the constraint `F ⋄ 0` by the equivalent `Lᵀ F L ⋄ 0` for invertible `L`.
    pub fn congruence(&mut self, l: &Mat) {
        assert_eq!(l.nrows(), self.dim());
        self.outer = Some(match &self.outer {
            Some(o) => o * l,
            None => l.clone(),
        });
        if let Some(f) = &self.full_constant {
            self.full_constant = Some(l.transpose() * f * l);
        }
    }
}

#[derive(Clone, Debug)]
struct VarDecl {
    name: String,
    var: Var,
}

/// Decision variables, matrix inequalities and an optional linear objective.
#[derive(Clone, Debug, Default)]
pub struct LmiProgram {
    vars: Vec<VarDecl>,
    n: usize,
    lmis: Vec<Lmi>,
    objective: Vec<(usize, f64)>,
    lower: Vec<(usize, f64)>,
}

impl LmiProgram {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(&mut self, name: &str, rows: usize, cols: usize, symmetric: bool) -> Var {
        let var = Var { offset: self.n, rows, cols, symmetric };
        self.n += var.len();
        self.vars.push(VarDecl { name: name.to_string(), var });
        var
    }

    pub fn scalar(&mut self, name: &str) -> Var {
        self.declare(name, 1, 1, false)
    }

    pub fn sym(&mut self, name: &str, n: usize) -> Var {
        self.declare(name, n, n, true)
    }

    pub fn full(&mut self, name: &str, rows: usize, cols: usize) -> Var {
        self.declare(name, rows, cols, false)
    }

    /// Number of scalar unknowns.
    pub fn n_scalars(&self) -> usize {
        self.n
    }

    pub fn lmis(&self) -> &[Lmi] {
        &self.lmis
    }

    pub fn var_named(&self, name: &str) -> Option<Var> {
        self.vars.iter().find(|d| d.name == name).map(|d| d.var)
    }

    pub fn variables(&self) -> impl Iterator<Item = (&str, Var)> {
        self.vars.iter().map(|d| (d.name.as_str(), d.var))
    }

    pub fn add(&mut self, mut lmi: Lmi) {
        lmi.finish();
        if let Some(e) = lmi.entries.iter().find(|e| e.var >= self.n) {
            panic!("constraint {} references undeclared scalar {}", lmi.name, e.var);
        }
        if lmi.dim() > 0 {
            self.lmis.push(lmi);
        }
    }

    /// Minimize the scalar variable `v`.
    pub fn minimize(&mut self, v: &Var) {
        assert_eq!(v.len(), 1);
        self.objective = vec![(v.offset, 1.0)];
    }

    pub fn has_objective(&self) -> bool {
        !self.objective.is_empty()
    }

    /// Require the scalar variable `v` to be at least `lb`.
    pub fn lower_bound(&mut self, v: &Var, lb: f64) {
        assert_eq!(v.len(), 1);
        self.lower.push((v.offset, lb));
    }

    /// No constant terms and no bounds: the feasible set is a cone.
    pub fn is_homogeneous(&self) -> bool {
        self.lower.is_empty() && self.constant_scale() == 0.0
    }

    /// Largest absolute entry over all constant blocks.
    pub fn constant_scale(&self) -> f64 {
        self.lmis.iter().map(|l| max_abs(&l.constant_part())).fold(0.0, f64::max)
    }

    /// Scale-aware default strictness margin.
    pub fn default_eps(&self) -> f64 {
        1e-7 * (1.0 + self.constant_scale())
    }

    /// Apply [`Lmi::congruence`] with `ls[j]` to the `j`-th constraint.
    pub fn congruence(&self, ls: &[Mat]) -> LmiProgram {
        let mut p = self.clone();
        for (l, m) in p.lmis.iter_mut().zip(ls) {
            l.congruence(m);
        }
        p
    }

    /// Per-constraint slack at `y`: `−λ_max` for `≺ 0`, `λ_min` otherwise.
    pub fn slacks(&self, y: &DVector<f64>) -> Vec<f64> {
        self.lmis
            .iter()
            .map(|l| {
                let (lo, hi) = eig_extremes(&l.evaluate(y));
                match l.sense {
                    Sense::NegDef => -hi,
                    Sense::PosDef | Sense::Psd => lo,
                }
            })
            .collect()
    }

    /// Human-readable listing of variables and constraint blocks.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "variables ({} scalars):", self.n);
        for d in &self.vars {
            let kind = if d.var.symmetric { "sym" } else { "full" };
            let _ = writeln!(s, "  {} {}x{} {} @{}", d.name, d.var.rows, d.var.cols, kind, d.var.offset);
        }
        if let Some(&(v, c)) = self.objective.first() {
            let _ = writeln!(s, "minimize {c}*y[{v}]");
        }
        for l in &self.lmis {
            let _ = writeln!(
                s,
                "constraint {} {:?} dim {} (middle {}, outer {})",
                l.name,
                l.sense,
                l.dim(),
                l.mid,
                if l.outer.is_some() { "yes" } else { "no" }
            );
            let _ = writeln!(s, "  constant = {:.6}", l.constant);
            for e in &l.entries {
                let _ = writeln!(s, "  y[{}] * {} at ({}, {})", e.var, e.c, e.a, e.b);
            }
        }
        s
    }
}

/// Solver outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Feasible,
    Infeasible,
    Inaccurate,
    Error,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Inaccurate => "inaccurate",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Strictness margin; `None` uses [`LmiProgram::default_eps`].
    pub eps: Option<f64>,
    /// Box bound on every scalar unknown.
    pub bound: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Stop a feasibility search as soon as the iterate is verified.
    pub early_exit: bool,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { eps: None, bound: DEFAULT_BOUND, max_iter: 200, tol: 1e-9, early_exit: true, verbose: false }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    pub y: DVector<f64>,
    pub objective: Option<f64>,
    /// Smallest slack over strict constraints at `y`.
    pub margin: f64,
    /// Smallest slack over non-strict constraints at `y`.
    pub psd_slack: f64,
    pub eps: f64,
    pub iterations: usize,
    pub seconds: f64,
    pub message: String,
}

impl SolveResult {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }
}

/// Interface implemented by SDP backends.
pub trait Backend {
    /// Maximize the common margin `t` (capped at 1) of all strict constraints.
    fn maximize_margin(&self, p: &LmiProgram, opts: &SolveOptions, eps: f64) -> BackendResult;
    /// Minimize the objective with strict constraints enforced at margin `eps`.
    fn minimize(&self, p: &LmiProgram, opts: &SolveOptions, eps: f64) -> BackendResult;
}

/// Raw backend output before verification.
#[derive(Clone, Debug)]
pub struct BackendResult {
    pub y: DVector<f64>,
    pub converged: bool,
    /// Phase-1 optimal margin estimate, if applicable.
    pub t: Option<f64>,
    pub iterations: usize,
    pub message: String,
    /// Relative dual residual at the last iterate.
    pub dual_residual: f64,
    /// Phase-1 upper bound on the margin from the dual objective.
    pub dual_bound: Option<f64>,
}

/// Backend chosen by the `IMPULSE_IQC_BACKEND` environment variable (only `ipm` is built in).
pub fn default_backend() -> Box<dyn Backend> {
    match std::env::var("IMPULSE_IQC_BACKEND").as_deref() {
        Ok("ipm") | Err(_) => Box::new(InteriorPoint),
        Ok(other) => {
            eprintln!("unknown backend {other:?}, using ipm");
            Box::new(InteriorPoint)
        }
    }
}

fn finalize(p: &LmiProgram, r: BackendResult, eps: f64, started: Instant) -> SolveResult {
    let slacks = p.slacks(&r.y);
    let mut margin = f64::INFINITY;
    let mut psd = f64::INFINITY;
    for (l, s) in p.lmis.iter().zip(&slacks) {
        if l.sense.is_strict() {
            margin = margin.min(*s);
        } else {
            psd = psd.min(*s);
        }
    }
    let bounds_ok = p.lower.iter().all(|&(v, lb)| r.y[v] >= lb - eps / 10.0);
    let verified = margin >= eps / 2.0 && psd >= -eps / 10.0 && bounds_ok;
    let objective = if p.has_objective() {
        Some(p.objective.iter().map(|&(v, c)| c * r.y[v]).sum())
    } else {
        None
    };
    let status = if verified {
        Status::Feasible
    } else if r.converged && r.t.is_some_and(|t| t < eps) {
        Status::Infeasible
    } else if r.dual_bound.is_some_and(|b| b < eps / 2.0) && r.dual_residual < DUAL_CERT_TOL {
        Status::Infeasible
    } else {
        Status::Inaccurate
    };
    SolveResult {
        status,
        y: r.y,
        objective,
        margin,
        psd_slack: psd,
        eps,
        iterations: r.iterations,
        seconds: started.elapsed().as_secs_f64(),
        message: r.message,
    }
}

/// Decide feasibility (no objective) or minimize the objective.
pub fn solve(p: &LmiProgram, opts: &SolveOptions) -> SolveResult {
    solve_with(default_backend().as_ref(), p, opts)
}

pub fn solve_with(backend: &dyn Backend, p: &LmiProgram, opts: &SolveOptions) -> SolveResult {
    let started = Instant::now();
    let eps = opts.eps.unwrap_or_else(|| p.default_eps());
    if !(eps > 0.0) {
        return SolveResult {
            status: Status::Error,
            y: DVector::zeros(p.n_scalars()),
            objective: None,
            margin: f64::NAN,
            psd_slack: f64::NAN,
            eps,
            iterations: 0,
            seconds: 0.0,
            message: "eps must be positive".into(),
        };
    }
    if !p.has_objective() {
        return feasibility(backend, p, opts, eps, started);
    }
    let r = backend.minimize(p, opts, eps);
    let res = finalize(p, r, eps, started);
    if res.status == Status::Feasible {
        return res;
    }
    // classify with a margin search
    let phase1 = backend.maximize_margin(p, opts, eps);
    let mut cls = finalize(p, phase1, eps, started);
    if cls.status == Status::Feasible {
        cls.status = Status::Inaccurate;
        cls.message = format!("objective solve failed: {}", res.message);
    }
    cls
}

/// Extra phase-1 rounds after recentering at the last iterate.
const RECENTER_ROUNDS: usize = 3;

/// Phase 1, then recentering rounds when the margin search ends unverified.
///
/// Each round replaces every constraint `F ⋄ 0` by `Lᵀ F L ⋄ 0` with `L` built
/// from `F` at the previous iterate.
fn feasibility(backend: &dyn Backend, p: &LmiProgram, opts: &SolveOptions, eps: f64, started: Instant) -> SolveResult {
    let r = backend.maximize_margin(p, opts, eps);
    let mut y = r.y.clone();
    let mut iterations = r.iterations;
    let settled = r.converged;
    let first = finalize(p, r, eps, started);
    if first.status == Status::Feasible || first.status == Status::Error || settled {
        return first;
    }
    let homogeneous = p.is_homogeneous();
    let mut q = p.clone();
    for _ in 0..RECENTER_ROUNDS {
        if homogeneous {
            if let Some(res) = rescaled_certificate(p, &y, eps, opts.bound, started) {
                return SolveResult { iterations, message: "verified after rescaling".into(), ..res };
            }
        }
        q = q.congruence(&recenter_factors(&q, &y));
        let eq = q.default_eps();
        let r = backend.maximize_margin(&q, opts, eq);
        iterations += r.iterations;
        y = r.y.clone();
        let res = finalize(p, BackendResult { converged: false, t: None, ..r }, eps, started);
        if res.status == Status::Feasible {
            return SolveResult { iterations, message: "verified after recentering".into(), ..res };
        }
    }
    if homogeneous {
        if let Some(res) = rescaled_certificate(p, &y, eps, opts.bound, started) {
            return SolveResult { iterations, message: "verified after rescaling".into(), ..res };
        }
    }
    SolveResult { iterations, seconds: started.elapsed().as_secs_f64(), ..first }
}

/// `L = V |Λ|^{-1/2} Vᵀ` (eigenvalues floored relative to the largest) for each
/// constraint, oriented so that the constraint reads `⪰`.
fn recenter_factors(p: &LmiProgram, y: &DVector<f64>) -> Vec<Mat> {
    p.lmis
        .iter()
        .map(|l| {
            let f = l.evaluate(y);
            let f = if l.sense == Sense::NegDef { -f } else { f };
            let e = nalgebra::SymmetricEigen::new(f);
            let top = e.eigenvalues.amax();
            if !(top > 0.0) || !top.is_finite() {
                return Mat::identity(l.dim(), l.dim());
            }
            let d = e.eigenvalues.map(|v| (top / v.abs().max(1e-8 * top)).sqrt());
            &e.eigenvectors * Mat::from_diagonal(&d) * e.eigenvectors.transpose()
        })
        .collect()
}

/// For programs without constant terms, scale a strictly feasible direction up
/// to the verification margin.
fn rescaled_certificate(p: &LmiProgram, y: &DVector<f64>, eps: f64, bound: f64, started: Instant) -> Option<SolveResult> {
    let slacks = p.slacks(y);
    let mut strict = f64::INFINITY;
    for (l, s) in p.lmis.iter().zip(&slacks) {
        if l.sense.is_strict() {
            strict = strict.min(*s);
        } else if *s < 0.0 {
            return None;
        }
    }
    if !(strict > 0.0) || !strict.is_finite() {
        return None;
    }
    let ymax = y.amax();
    let c = (2.0 * eps / strict).min(bound / ymax.max(f64::MIN_POSITIVE));
    let ys = y * c;
    let r = BackendResult {
        y: ys,
        converged: false,
        t: None,
        iterations: 0,
        message: String::new(),
        dual_residual: f64::INFINITY,
        dual_bound: None,
    };
    let res = finalize(p, r, eps, started);
    (res.status == Status::Feasible).then_some(res)
}

/// Maximize the common margin regardless of any objective.
pub fn maximize_margin(p: &LmiProgram, opts: &SolveOptions) -> SolveResult {
    let started = Instant::now();
    let eps = opts.eps.unwrap_or_else(|| p.default_eps());
    let r = default_backend().maximize_margin(p, &SolveOptions { early_exit: false, ..opts.clone() }, eps);
    finalize(p, r, eps, started)
}

/// Minimize `g = γ²` (which must enter affinely); returns the certified `γ`.
pub fn minimize_gain(p: &LmiProgram, g: &Var, opts: &SolveOptions) -> (f64, SolveResult) {
    let mut prog = p.clone();
    prog.minimize(g);
    prog.lower_bound(g, 0.0);
    let mut res = solve(&prog, opts);
    if res.status == Status::Feasible {
        let gv = res.y[g.offset].max(0.0);
        return (gv.sqrt(), res);
    }
    if res.status == Status::Inaccurate {
        // the optimizer sits too close to the boundary: back off g until verified
        let eps = res.eps;
        let base = res.y[g.offset].max(0.0);
        for k in 0..8 {
            let mut y = res.y.clone();
            y[g.offset] = base * (1.0 + 1e-6 * 10f64.powi(k)) + 1e-9 * 10f64.powi(k);
            let slacks = prog.slacks(&y);
            let ok = prog.lmis.iter().zip(&slacks).all(|(l, s)| {
                if l.sense.is_strict() {
                    *s >= eps / 2.0
                } else {
                    *s >= -eps / 10.0
                }
            });
            if ok {
                res.margin = prog
                    .lmis
                    .iter()
                    .zip(&slacks)
                    .filter(|(l, _)| l.sense.is_strict())
                    .map(|(_, s)| *s)
                    .fold(f64::INFINITY, f64::min);
                res.y = y;
                res.status = Status::Feasible;
                res.objective = Some(res.y[g.offset]);
                return (res.y[g.offset].sqrt(), res);
            }
        }
    }
    (f64::INFINITY, res)
}
