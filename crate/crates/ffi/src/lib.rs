//! C interface to `levinson_graph`.
//!
//! Instances live behind an opaque `LgGraph` handle. Every fallible call
//! returns an `LgStatus`; on failure, `lg_last_error_message` describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use levinson_graph::eigen::CMatrix;
use levinson_graph::error::Error;
use levinson_graph::graph::{eval_r, spectral_decompose, GraphSpec};
use levinson_graph::instance::{read_spec, InstanceError};
use levinson_graph::levinson::{reduce_degenerate, verify, DEFAULT_GRID};
use levinson_graph::rational::{build_q_rational, winding_by_argument_principle};
use levinson_graph::winding::winding_by_phase_tracking;
use levinson_graph::Complex;

/// Opaque instance handle.
pub struct LgGraph {
    spec: GraphSpec,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgStatus {
    Ok = 0,
    NullPointer = 1,
    /// The instance or an argument is malformed.
    InvalidInput = 2,
    Io = 3,
    /// A numerical routine failed.
    Numeric = 4,
    /// The result is numerically ambiguous (root on the unit circle, phase
    /// refinement exhausted).
    Ambiguous = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgMethod {
    /// Argument principle on the rational form.
    Roots = 0,
    /// Adaptive phase tracking around the circle.
    Phase = 1,
}

/// Outcome of `lg_verify`. Counts refer to the reduced instance.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LgReport {
    pub holds: bool,
    pub ambiguous: bool,
    pub peels: usize,
    pub counts_valid: bool,
    pub m: usize,
    pub n_b: usize,
    pub n_h: usize,
    pub n_c: usize,
    pub w_phase_valid: bool,
    pub w_phase: i64,
    pub w_roots_valid: bool,
    pub w_roots: i64,
    /// `2(m - n_b - n_c) - n_h`; meaningful when `counts_valid`.
    pub rhs: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: LgStatus, msg: impl Into<String>) -> LgStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> LgStatus {
    let status = match &e {
        e if e.is_ambiguity() => LgStatus::Ambiguous,
        Error::NotSquare { .. }
        | Error::Empty
        | Error::NonHermitian { .. }
        | Error::NonRealSelfLoop { .. }
        | Error::NonFinite { .. }
        | Error::ZeroArgument
        | Error::PreconditionViolated
        | Error::DegenerateMomentum { .. }
        | Error::InvalidArgument(_) => LgStatus::InvalidInput,
        _ => LgStatus::Numeric,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> LgStatus) -> LgStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(LgStatus::Panic, "internal panic"))
}

unsafe fn read_parts(re: *const f64, im: *const f64, n: usize) -> Vec<Complex> {
    let re = std::slice::from_raw_parts(re, n);
    if im.is_null() {
        re.iter().map(|&x| Complex::new(x, 0.0)).collect()
    } else {
        let im = std::slice::from_raw_parts(im, n);
        re.iter().zip(im).map(|(&x, &y)| Complex::new(x, y)).collect()
    }
}

/// Builds an instance from `a`, `b` (length `m`) and row-major `D` (`m * m`).
/// The imaginary arrays may be null for real weights; the real arrays may be
/// null only when `m == 0`.
///
/// # Safety
/// Non-null array pointers must be valid for the stated lengths; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_new(
    a: f64,
    m: usize,
    b_re: *const f64,
    b_im: *const f64,
    d_re: *const f64,
    d_im: *const f64,
    out: *mut *mut LgGraph,
) -> LgStatus {
    guard(|| {
        if out.is_null() || (m > 0 && (b_re.is_null() || d_re.is_null())) {
            return fail(LgStatus::NullPointer, "null pointer argument");
        }
        *out = ptr::null_mut();
        let (b, flat) = if m == 0 {
            (Vec::new(), Vec::new())
        } else {
            (read_parts(b_re, b_im, m), read_parts(d_re, d_im, m * m))
        };
        let mut d = CMatrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                d[(i, j)] = flat[i * m + j];
            }
        }
        match GraphSpec::from_parts(a, b, d) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(LgGraph { spec }));
                LgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Loads a JSON instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_from_file(path: *const c_char, out: *mut *mut LgGraph) -> LgStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(LgStatus::NullPointer, "null pointer argument");
        }
        *out = ptr::null_mut();
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(LgStatus::InvalidInput, "path is not UTF-8");
        };
        match read_spec(Path::new(path)) {
            Ok((_, spec)) => {
                *out = Box::into_raw(Box::new(LgGraph { spec }));
                LgStatus::Ok
            }
            Err(e @ InstanceError::Io { .. }) => fail(LgStatus::Io, e.to_string()),
            Err(e) => fail(LgStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `graph` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_free(graph: *mut LgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of internal vertices, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_m(graph: *const LgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.spec.m())
}

/// Checks the Levinson identity. `LG_STATUS_OK` is returned whenever a report
/// was produced, even if the identity does not hold.
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lg_verify(graph: *const LgGraph, out: *mut LgReport) -> LgStatus {
    guard(|| {
        let (Some(g), false) = (graph.as_ref(), out.is_null()) else {
            return fail(LgStatus::NullPointer, "null pointer argument");
        };
        let r = verify(&g.spec);
        let c = r.counts;
        *out = LgReport {
            holds: r.holds,
            ambiguous: r.ambiguous,
            peels: r.peels,
            counts_valid: c.is_some(),
            m: c.map_or(0, |c| c.m),
            n_b: c.map_or(0, |c| c.n_b),
            n_h: c.map_or(0, |c| c.n_h),
            n_c: c.map_or(0, |c| c.n_c),
            w_phase_valid: r.w_phase.is_some(),
            w_phase: r.w_phase.unwrap_or(0),
            w_roots_valid: r.w_roots.is_some(),
            w_roots: r.w_roots.unwrap_or(0),
            rhs: r.rhs.unwrap_or(0),
        };
        if !r.diagnostics.is_empty() {
            set_error(r.diagnostics.join("; "));
        }
        LgStatus::Ok
    })
}

/// `R(e^{ik})`.
///
/// # Safety
/// `graph` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn lg_reflection(graph: *const LgGraph, k: f64, re: *mut f64, im: *mut f64) -> LgStatus {
    guard(|| {
        let Some(g) = graph.as_ref() else {
            return fail(LgStatus::NullPointer, "null pointer argument");
        };
        if re.is_null() || im.is_null() {
            return fail(LgStatus::NullPointer, "null pointer argument");
        }
        let r = spectral_decompose(&g.spec).and_then(|sd| eval_r(&g.spec, &sd, Complex::from_polar(1.0, k)));
        match r {
            Ok(r) => {
                *re = r.re;
                *im = r.im;
                LgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Winding number of `R` on the unit circle, after degenerate reduction.
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lg_winding(graph: *const LgGraph, method: LgMethod, out: *mut i64) -> LgStatus {
    guard(|| {
        let (Some(g), false) = (graph.as_ref(), out.is_null()) else {
            return fail(LgStatus::NullPointer, "null pointer argument");
        };
        let spec = reduce_degenerate(&g.spec);
        let w = spectral_decompose(&spec)
            .and_then(|sd| build_q_rational(&spec, &sd))
            .and_then(|q| match method {
                LgMethod::Roots => winding_by_argument_principle(&q).map(|w| w.winding),
                LgMethod::Phase => winding_by_phase_tracking(&q, DEFAULT_GRID).map(|(w, _)| w),
            });
        match w {
            Ok(w) => {
                *out = w;
                LgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn lg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
