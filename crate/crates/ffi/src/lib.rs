//! C ABI for the impulse-iqc library.
//!
//! Systems and estimators are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible function returns an
//! `IQC_*` code; `IQC_OK` is zero, errors are negative. The message of the last
//! error on the calling thread is available from [`iqc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use impulse_iqc::analysis::{run_test, Mode, SystemRef, TestKind, TestOptions};
use impulse_iqc::dwell::{enumerate_paths, DwellSpec};
use impulse_iqc::model::{closed_loop, Estimator, PerfIndex, SystemFile};
use impulse_iqc::sdp::{SolveOptions, Status};
use impulse_iqc::sim::empirical_gain;
use impulse_iqc::synthesis::{synthesize_iqc, synthesize_slack, Objective};
use impulse_iqc::{catalog, Error};

pub const IQC_OK: i32 = 0;
pub const IQC_ERR_NULL_POINTER: i32 = -1;
pub const IQC_ERR_INVALID_UTF8: i32 = -2;
pub const IQC_ERR_INVALID_INPUT: i32 = -3;
pub const IQC_ERR_DIMENSION: i32 = -4;
pub const IQC_ERR_NOT_WELL_POSED: i32 = -5;
pub const IQC_ERR_INVALID_SPEC: i32 = -6;
pub const IQC_ERR_UNBOUNDED_SPEC: i32 = -7;
pub const IQC_ERR_NO_ADMISSIBLE_PATHS: i32 = -8;
pub const IQC_ERR_INFEASIBLE: i32 = -9;
pub const IQC_ERR_RECONSTRUCTION_FAILED: i32 = -10;
pub const IQC_ERR_RECONSTRUCTION_SINGULAR: i32 = -11;
pub const IQC_ERR_SOLVER: i32 = -12;
pub const IQC_ERR_JSON: i32 = -13;
pub const IQC_ERR_WRONG_FORM: i32 = -14;
pub const IQC_ERR_PANIC: i32 = -15;
pub const IQC_ERR_OTHER: i32 = -99;

pub const IQC_DWELL_ADT: i32 = 0;
pub const IQC_DWELL_EDT: i32 = 1;
pub const IQC_DWELL_MDT: i32 = 2;
pub const IQC_DWELL_RDT: i32 = 3;

pub const IQC_TEST_LIFTING: i32 = 0;
pub const IQC_TEST_PATH: i32 = 1;
pub const IQC_TEST_CLOCK: i32 = 2;
pub const IQC_TEST_CLOCK_SLACK: i32 = 3;
pub const IQC_TEST_ADT_STATIC: i32 = 4;
pub const IQC_TEST_IQC_CLOCK: i32 = 5;
pub const IQC_TEST_IQC_LIFTING: i32 = 6;

pub const IQC_MODE_STABILITY: i32 = 0;
pub const IQC_MODE_PERFORMANCE: i32 = 1;
pub const IQC_MODE_GAIN: i32 = 2;

pub const IQC_STATUS_FEASIBLE: i32 = 0;
pub const IQC_STATUS_INFEASIBLE: i32 = 1;
pub const IQC_STATUS_INACCURATE: i32 = 2;
pub const IQC_STATUS_ERROR: i32 = 3;

pub const IQC_ROUTE_IQC: i32 = 0;
pub const IQC_ROUTE_SLACK: i32 = 1;

/// Dwell-time condition; `kind` is one of `IQC_DWELL_*`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct IqcDwell {
    pub kind: i32,
    pub tmin: u32,
    pub tmax: u32,
}

/// Result of one test; `gamma` is NaN unless the mode is gain and the test is feasible.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct IqcAnalysis {
    pub status: i32,
    pub gamma: f64,
    pub margin: f64,
    pub seconds: f64,
}

/// Opaque system handle (any system file form).
pub struct IqcSystem(SystemFile);

/// Opaque estimator handle with its certified bound.
pub struct IqcEstimator {
    estimator: Estimator,
    gamma: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::NotWellPosed { .. } => IQC_ERR_NOT_WELL_POSED,
        Error::Dimension(_) => IQC_ERR_DIMENSION,
        Error::UnboundedSpec(_) => IQC_ERR_UNBOUNDED_SPEC,
        Error::InvalidSpec(_) | Error::PathNotAdmissible => IQC_ERR_INVALID_SPEC,
        Error::NoAdmissiblePaths => IQC_ERR_NO_ADMISSIBLE_PATHS,
        Error::Infeasible(_) => IQC_ERR_INFEASIBLE,
        Error::ReconstructionFailed(_) => IQC_ERR_RECONSTRUCTION_FAILED,
        Error::ReconstructionSingular(_) => IQC_ERR_RECONSTRUCTION_SINGULAR,
        Error::Solver(_) | Error::SchurPivotSingular => IQC_ERR_SOLVER,
        Error::Invalid(_) => IQC_ERR_INVALID_INPUT,
        Error::Json(_) => IQC_ERR_JSON,
        _ => IQC_ERR_OTHER,
    }
}

struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(code_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IQC_OK,
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            IQC_ERR_PANIC
        }
    }
}

fn null() -> Fail {
    Fail(IQC_ERR_NULL_POINTER, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(IQC_ERR_INVALID_UTF8, "string is not valid UTF-8".into()))
}

unsafe fn ref_arg<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn dwell(d: IqcDwell) -> Result<DwellSpec, Fail> {
    let s = match d.kind {
        IQC_DWELL_ADT => DwellSpec::Adt,
        IQC_DWELL_EDT => DwellSpec::Edt(d.tmin),
        IQC_DWELL_MDT => DwellSpec::Mdt(d.tmin),
        IQC_DWELL_RDT => DwellSpec::Rdt(d.tmin, d.tmax),
        k => return Err(Fail(IQC_ERR_INVALID_SPEC, format!("unknown dwell kind {k}"))),
    };
    s.validate()?;
    Ok(s)
}

fn solve_options(eps: f64) -> SolveOptions {
    SolveOptions { eps: (eps > 0.0).then_some(eps), ..SolveOptions::default() }
}

fn wrong_form(what: &str) -> Fail {
    Fail(IQC_ERR_WRONG_FORM, format!("system handle does not hold {what}"))
}

fn dynamic(sys: &SystemFile) -> Result<SystemRef<'_>, Fail> {
    match sys {
        SystemFile::Jump(j) => Ok(SystemRef::Jump(j)),
        SystemFile::Feedback(f) => Ok(SystemRef::Feedback(f)),
        _ => Err(wrong_form("a jump or feedback system")),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn iqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last error on this thread; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn iqc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer returned by an `iqc_*_to_json` function.
#[no_mangle]
pub unsafe extern "C" fn iqc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a system description in JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iqc_system_from_json(json: *const c_char, out: *mut *mut IqcSystem) -> i32 {
    guard(|| {
        let sys = SystemFile::from_json_str(str_arg(json)?)?;
        write_out(out, Box::into_raw(Box::new(IqcSystem(sys))))
    })
}

/// Builtin system by name (`exa1`, `exa_syn`, `hold_loop`); `beta` is used by `exa1` only and must be NaN otherwise.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iqc_system_builtin(name: *const c_char, beta: f64, out: *mut *mut IqcSystem) -> i32 {
    guard(|| {
        let sys = catalog::builtin(str_arg(name)?, (!beta.is_nan()).then_some(beta))?;
        write_out(out, Box::into_raw(Box::new(IqcSystem(sys))))
    })
}

/// Serialize a system to JSON; release the result with [`iqc_string_free`].
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iqc_system_to_json(sys: *const IqcSystem, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let s = ref_arg(sys)?;
        write_out(out, to_c_string(s.0.to_json_string()))
    })
}

/// # Safety
/// `sys` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iqc_system_free(sys: *mut IqcSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Run one test. `nu` and `path_len` of zero select the defaults; `eps ≤ 0` selects the default margin.
/// `gamma` is the bound of the performance mode and ignored otherwise.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iqc_analyze(
    sys: *const IqcSystem,
    test: i32,
    spec: IqcDwell,
    mode: i32,
    gamma: f64,
    nu: usize,
    path_len: usize,
    eps: f64,
    out: *mut IqcAnalysis,
) -> i32 {
    guard(|| {
        let s = ref_arg(sys)?;
        let sys = dynamic(&s.0)?;
        let kind = usize::try_from(test)
            .ok()
            .and_then(|i| TestKind::ALL.get(i).copied())
            .ok_or_else(|| Fail(IQC_ERR_INVALID_INPUT, format!("unknown test {test}")))?;
        let spec = dwell(spec)?;
        let (nd, ne) = match sys {
            SystemRef::Jump(j) => (j.nd(), j.ne()),
            SystemRef::Feedback(f) => (f.nd(), f.ne()),
        };
        let mode = match mode {
            IQC_MODE_STABILITY => Mode::Stability,
            IQC_MODE_GAIN => Mode::Gain,
            IQC_MODE_PERFORMANCE if gamma > 0.0 => Mode::Performance(PerfIndex::gain_index(ne, nd, gamma * gamma)),
            IQC_MODE_PERFORMANCE => return Err(Fail(IQC_ERR_INVALID_INPUT, "performance mode needs gamma > 0".into())),
            m => return Err(Fail(IQC_ERR_INVALID_INPUT, format!("unknown mode {m}"))),
        };
        let d = TestOptions::default();
        let opts = TestOptions {
            solve: solve_options(eps),
            nu: if nu == 0 { d.nu } else { nu },
            path_len: if path_len == 0 { d.path_len } else { path_len },
            balance: d.balance,
        };
        let o = run_test(kind, sys, &spec, &mode, &opts)?;
        let status = match o.status {
            Status::Feasible => IQC_STATUS_FEASIBLE,
            Status::Infeasible => IQC_STATUS_INFEASIBLE,
            Status::Inaccurate => IQC_STATUS_INACCURATE,
            Status::Error => IQC_STATUS_ERROR,
        };
        if o.status != Status::Feasible {
            set_error(&o.message);
        }
        write_out(out, IqcAnalysis { status, gamma: o.gamma.unwrap_or(f64::NAN), margin: o.margin, seconds: o.seconds })
    })
}

/// Synthesize an estimator for a plant handle. `gamma > 0` checks that bound, otherwise `γ` is minimized.
///
/// # Safety
/// `plant` must be a live handle; `out` and `out_gamma` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iqc_synthesize(
    plant: *const IqcSystem,
    route: i32,
    spec: IqcDwell,
    nu: usize,
    gamma: f64,
    eps: f64,
    out: *mut *mut IqcEstimator,
    out_gamma: *mut f64,
) -> i32 {
    guard(|| {
        let p = ref_arg(plant)?;
        if out.is_null() || out_gamma.is_null() {
            return Err(null());
        }
        let spec = dwell(spec)?;
        let objective = if gamma > 0.0 { Objective::Feasibility(gamma) } else { Objective::MinimizeGamma };
        let solve = solve_options(eps);
        let r = match (&p.0, route) {
            (SystemFile::JumpEstimation(j), IQC_ROUTE_SLACK) => synthesize_slack(j, &spec, objective, &solve)?,
            (SystemFile::JumpEstimation(j), IQC_ROUTE_IQC) => synthesize_iqc(&j.to_estimation_plant(), &spec, nu, objective, &solve)?,
            (SystemFile::Estimation(e), IQC_ROUTE_IQC) => synthesize_iqc(e, &spec, nu, objective, &solve)?,
            (_, IQC_ROUTE_IQC | IQC_ROUTE_SLACK) => return Err(wrong_form("an estimation plant suited to this route")),
            (_, r) => return Err(Fail(IQC_ERR_INVALID_INPUT, format!("unknown route {r}"))),
        };
        write_out(out_gamma, r.gamma)?;
        write_out(out, Box::into_raw(Box::new(IqcEstimator { estimator: r.estimator, gamma: r.gamma })))
    })
}

/// Estimator order, or `-1` for a null handle.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iqc_estimator_order(est: *const IqcEstimator) -> i64 {
    est.as_ref().map_or(-1, |e| e.estimator.order() as i64)
}

/// Certified bound of the estimator, or NaN for a null handle.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iqc_estimator_gamma(est: *const IqcEstimator) -> f64 {
    est.as_ref().map_or(f64::NAN, |e| e.gamma)
}

/// Serialize an estimator to JSON; release the result with [`iqc_string_free`].
///
/// # Safety
/// `est` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iqc_estimator_to_json(est: *const IqcEstimator, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let e = ref_arg(est)?;
        write_out(out, to_c_string(SystemFile::Estimator(e.estimator.clone()).to_json_string()))
    })
}

/// # Safety
/// `est` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iqc_estimator_free(est: *mut IqcEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Interconnect a plant with an estimator; the result is a feedback-form system handle.
///
/// # Safety
/// `plant` and `est` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iqc_closed_loop(plant: *const IqcSystem, est: *const IqcEstimator, out: *mut *mut IqcSystem) -> i32 {
    guard(|| {
        let e = &ref_arg(est)?.estimator;
        let f = match &ref_arg(plant)?.0 {
            SystemFile::Estimation(p) => closed_loop(p, e)?,
            SystemFile::JumpEstimation(j) => closed_loop(&j.to_estimation_plant(), e)?,
            _ => return Err(wrong_form("an estimation plant")),
        };
        write_out(out, Box::into_raw(Box::new(IqcSystem(SystemFile::Feedback(f)))))
    })
}

/// Number of admissible impulse paths of length `len` for the range `[tmin, tmax]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iqc_path_count(tmin: u32, tmax: u32, len: usize, out: *mut usize) -> i32 {
    guard(|| {
        DwellSpec::Rdt(tmin, tmax).validate()?;
        write_out(out, enumerate_paths(tmin, tmax, len).len())
    })
}

/// Empirical lower bound on the energy gain from random sequences and disturbances.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iqc_empirical_gain(sys: *const IqcSystem, spec: IqcDwell, trials: usize, horizon: usize, seed: u64, out: *mut f64) -> i32 {
    guard(|| {
        let f = dynamic(&ref_arg(sys)?.0)?.feedback();
        let g = empirical_gain(&f, &dwell(spec)?, trials, horizon, seed)?;
        write_out(out, g)
    })
}
