//! C interface to liftmap.
//!
//! Objects are opaque handles created by `lm_model_from_*`,
//! `lm_orbits_compute` and `lm_map_solve` and released by the matching
//! `lm_*_free`. Every fallible
//! call returns an [`LmStatus`]; on failure `lm_last_error` gives a message
//! for the calling thread. Strings returned through `char **` outputs are
//! owned by the caller and released with `lm_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use liftmap::lift::LiftedModel;
use liftmap::oracle::OracleError;
use liftmap::pipeline::{self, Method, OrbitReport, Problem, EXACT_LIMIT};
use liftmap::solve::{MapOptions, MapStatus, Polytope, Space};
use liftmap::symmetry::OrbitPartition;
use liftmap::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    SolveError = 5,
    LimitExceeded = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmMethod {
    Search = 0,
    Renaming = 1,
    None = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmSpace {
    Ground = 0,
    Lifted = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmPolytope {
    Local = 0,
    Cycle = 1,
}

/// Set an orbit partition lives on.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmDomain {
    Vars = 0,
    Edges = 1,
    Arcs = 2,
    FactorAssignments = 3,
    Features = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmMapStatus {
    Optimal = 0,
    Converged = 1,
    Cap = 2,
    Stalled = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmMapOptions {
    pub space: LmSpace,
    pub polytope: LmPolytope,
    pub method: LmMethod,
    pub alpha: f64,
    pub tol: f64,
    pub max_cuts: usize,
    pub max_rounds: usize,
}

/// A ground model, possibly grounded from an MLN.
pub struct LmModel {
    problem: Problem,
}

/// Orbit partitions of a model under one symmetry method.
pub struct LmOrbits {
    report: OrbitReport,
    lifted: LiftedModel,
}

pub struct LmMapResult {
    report: pipeline::MapReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(LmStatus, String);

fn status_of(e: &Error) -> LmStatus {
    match e {
        Error::Model(_) | Error::Mln(_) => LmStatus::ParseError,
        Error::Io { .. } | Error::Config(_) => LmStatus::InvalidArgument,
        Error::Solve(_) => LmStatus::SolveError,
        Error::Oracle(OracleError::TooLarge { .. }) => LmStatus::LimitExceeded,
        Error::Symmetry(_) | Error::Lift(_) => LmStatus::Internal,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal panic: {msg}"));
            LmStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(LmStatus::NullArgument, format!("{name} is null"))
}

/// # Safety
/// `p` must be null or a valid nul-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LmStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or point to a live `T` created by this library.
unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

/// # Safety
/// `out` must be valid for a pointer write.
unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// # Safety
/// `out` must be valid for a pointer write.
unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s)
        .map_err(|_| Failure(LmStatus::Internal, "string contains nul".to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("reports serialize")
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses FGM text.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_model_from_fgm(
    text: *const c_char,
    out: *mut *mut LmModel,
) -> LmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let problem = Problem::from_fgm(str_arg(text, "text")?)?;
        put(out, LmModel { problem });
        Ok(())
    })
}

/// Parses and grounds an MLN over `domain_size` constants. `evidence` may be
/// null.
///
/// # Safety
/// `mln` and a non-null `evidence` must be nul-terminated strings; `out` must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_model_from_mln(
    mln: *const c_char,
    evidence: *const c_char,
    domain_size: usize,
    out: *mut *mut LmModel,
) -> LmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(mln, "mln")?;
        let ev = if evidence.is_null() {
            None
        } else {
            Some(str_arg(evidence, "evidence")?)
        };
        let problem = Problem::from_mln(text, ev, domain_size)?;
        put(out, LmModel { problem });
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from `lm_model_from_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lm_model_free(model: *mut LmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of ground variables, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm_model_num_vars(model: *const LmModel) -> usize {
    model.as_ref().map_or(0, |m| m.problem.model.num_vars())
}

/// Number of ground features, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm_model_num_features(model: *const LmModel) -> usize {
    model.as_ref().map_or(0, |m| m.problem.model.num_features())
}

/// The ground model as FGM text.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_model_to_fgm(model: *const LmModel, out: *mut *mut c_char) -> LmStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_string(out, m.problem.ground_fgm())
    })
}

fn to_method(m: LmMethod) -> Method {
    match m {
        LmMethod::Search => Method::Search,
        LmMethod::Renaming => Method::Renaming,
        LmMethod::None => Method::None,
    }
}

/// Orbit partitions under `method`; generator checks use `seed`.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_orbits_compute(
    model: *const LmModel,
    method: LmMethod,
    seed: u64,
    out: *mut *mut LmOrbits,
) -> LmStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (report, lifted) = pipeline::orbit_analysis(&m.problem, to_method(method), seed)?;
        put(out, LmOrbits { report, lifted });
        Ok(())
    })
}

/// # Safety
/// `orbits` must be null or a handle from `lm_orbits_compute` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lm_orbits_free(orbits: *mut LmOrbits) {
    if !orbits.is_null() {
        drop(Box::from_raw(orbits));
    }
}

fn partition(o: &LmOrbits, domain: LmDomain) -> &OrbitPartition {
    match domain {
        LmDomain::Vars => &o.lifted.node_orbits,
        LmDomain::Edges => &o.lifted.edge_orbits,
        LmDomain::Arcs => &o.lifted.arc_orbits,
        LmDomain::FactorAssignments => &o.lifted.factor_orbits,
        LmDomain::Features => &o.lifted.feature_orbits,
    }
}

/// Number of cells in the partition of `domain`, or 0 for a null handle.
///
/// # Safety
/// `orbits` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm_orbits_num_cells(orbits: *const LmOrbits, domain: LmDomain) -> usize {
    orbits
        .as_ref()
        .map_or(0, |o| partition(o, domain).num_cells())
}

/// Writes the cell of `element` in the partition of `domain` to `out`.
///
/// # Safety
/// `orbits` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_orbits_cell_of(
    orbits: *const LmOrbits,
    domain: LmDomain,
    element: usize,
    out: *mut usize,
) -> LmStatus {
    guard(|| {
        let o = ref_arg(orbits, "orbits")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = partition(o, domain);
        let cell = p.cell_of.get(element).ok_or_else(|| {
            Failure(
                LmStatus::InvalidArgument,
                format!("element {element} out of range ({})", p.num_elements()),
            )
        })?;
        *out = *cell;
        Ok(())
    })
}

/// The orbit report as JSON.
///
/// # Safety
/// `orbits` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_orbits_to_json(
    orbits: *const LmOrbits,
    out: *mut *mut c_char,
) -> LmStatus {
    guard(|| {
        let o = ref_arg(orbits, "orbits")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_string(out, json(&o.report))
    })
}

/// Default options: ground space, local polytope, search method,
/// alpha 0.99, tolerance 1e-6, 1000 cuts and rounds.
#[no_mangle]
pub extern "C" fn lm_map_options_default() -> LmMapOptions {
    let d = MapOptions::default();
    LmMapOptions {
        space: LmSpace::Ground,
        polytope: LmPolytope::Local,
        method: LmMethod::Search,
        alpha: d.alpha,
        tol: d.tol,
        max_cuts: d.max_cuts,
        max_rounds: d.max_rounds,
    }
}

/// Solves the MAP relaxation. A null `options` means the defaults.
///
/// # Safety
/// `model` must be a live handle; `options` must be null or valid for reads;
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_map_solve(
    model: *const LmModel,
    options: *const LmMapOptions,
    out: *mut *mut LmMapResult,
) -> LmStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| lm_map_options_default());
        let opts = MapOptions {
            polytope: match o.polytope {
                LmPolytope::Local => Polytope::Local,
                LmPolytope::Cycle => Polytope::Cycle,
            },
            alpha: o.alpha,
            tol: o.tol,
            max_cuts: o.max_cuts,
            max_rounds: o.max_rounds,
        };
        let space = match o.space {
            LmSpace::Ground => Space::Ground,
            LmSpace::Lifted => Space::Lifted,
        };
        let report = pipeline::run_map(&m.problem, to_method(o.method), space, &opts)?;
        put(out, LmMapResult { report });
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle from `lm_map_solve` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lm_map_result_free(result: *mut LmMapResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Final LP objective, or NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm_map_result_objective(result: *const LmMapResult) -> f64 {
    result
        .as_ref()
        .map_or(f64::NAN, |r| r.report.result.objective)
}

/// Outcome of the cutting-plane loop.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lm_map_result_status(
    result: *const LmMapResult,
    out: *mut LmMapStatus,
) -> LmStatus {
    guard(|| {
        let r = ref_arg(result, "result")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match r.report.result.status {
            MapStatus::Optimal => LmMapStatus::Optimal,
            MapStatus::Converged => LmMapStatus::Converged,
            MapStatus::Cap => LmMapStatus::Cap,
            MapStatus::Stalled => LmMapStatus::Stalled,
        };
        Ok(())
    })
}

/// Copies the decoded configuration (one byte per variable, 0 or 1) into
/// `buf`, which must hold `lm_model_num_vars` bytes.
///
/// # Safety
/// `result` must be a live handle; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lm_map_result_assignment(
    result: *const LmMapResult,
    buf: *mut u8,
    len: usize,
) -> LmStatus {
    guard(|| {
        let r = ref_arg(result, "result")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let a = &r.report.result.decode.assignment;
        if len != a.len() {
            return Err(Failure(
                LmStatus::InvalidArgument,
                format!("buffer holds {len} values, model has {}", a.len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for (o, &x) in out.iter_mut().zip(a) {
            *o = x as u8;
        }
        Ok(())
    })
}

/// The full MAP report as JSON.
///
/// # Safety
/// `result` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_map_result_to_json(
    result: *const LmMapResult,
    out: *mut *mut c_char,
) -> LmStatus {
    guard(|| {
        let r = ref_arg(result, "result")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_string(out, json(&r.report))
    })
}

/// Exact MAP, log-partition and marginals by enumeration, as JSON. A `limit`
/// of 0 means the default of 20 variables.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lm_exact_json(
    model: *const LmModel,
    limit: usize,
    out: *mut *mut c_char,
) -> LmStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let limit = if limit == 0 { EXACT_LIMIT } else { limit };
        let r = pipeline::run_exact(&m.problem, limit)?;
        put_string(out, json(&r))
    })
}
