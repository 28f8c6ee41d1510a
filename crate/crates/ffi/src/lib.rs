//! C ABI for the robust-bcs solvers.
//!
//! Problems and results are opaque heap handles created and released by the
//! functions below. Every fallible call returns an [`RbcsStatus`]; on failure
//! [`rbcs_last_error`] describes what went wrong on the calling thread.
//!
//! Matrices are passed row-major. Complex data is passed as interleaved
//! `(re, im)` pairs of doubles, so an `M×N` complex matrix occupies `2·M·N`
//! doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use robust_bcs::baseline::{self, Method};
use robust_bcs::fixture::{self, AnyFixture};
use robust_bcs::{BcsError, HyperParams, ProblemInstance, RecoveryResult, Scalar, VbSettings};

/// Outcome of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidInstance = 3,
    SingularCovariance = 4,
    Numerical = 5,
    Format = 6,
    Io = 7,
    Panic = 8,
}

/// Solver selection.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbcsMethod {
    /// Beta-Bernoulli outlier indicators.
    BpRbcs = 0,
    /// SBL on the dictionary augmented with the identity.
    CRbcs = 1,
    /// SBL with the outlier rows removed; needs [`rbcs_problem_set_outliers`].
    Ideal = 2,
    /// Plain SBL.
    Sbl = 3,
}

/// Solver options. Obtain defaults from [`rbcs_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbcsOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Freeze coefficients whose precision exceeds this value; `<= 0` disables.
    pub prune_threshold: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

enum Instance {
    Real(ProblemInstance<f64>),
    Complex(ProblemInstance<Complex64>),
}

/// Opaque problem handle.
pub struct RbcsProblem {
    inner: Instance,
    outliers: Option<Vec<usize>>,
}

/// Opaque result handle.
pub struct RbcsResult {
    complex: bool,
    x: Vec<f64>,
    z: Vec<f64>,
    iters: usize,
    converged: bool,
}

type Failure = (RbcsStatus, String);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn from_bcs(err: BcsError) -> Failure {
    let status = match &err {
        BcsError::InvalidInstance(_) => RbcsStatus::InvalidInstance,
        BcsError::InvalidParameter { .. } => RbcsStatus::InvalidArgument,
        BcsError::SingularCovariance { .. } => RbcsStatus::SingularCovariance,
        BcsError::Numerical(_) | BcsError::Domain(_) => RbcsStatus::Numerical,
        BcsError::Format { .. } => RbcsStatus::Format,
        BcsError::Io(_) => RbcsStatus::Io,
    };
    (status, err.to_string())
}

fn null(what: &str) -> Failure {
    (RbcsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RbcsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            RbcsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            RbcsStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

fn checked_len(m: usize, n: usize, width: usize) -> Result<usize, Failure> {
    m.checked_mul(n)
        .and_then(|v| v.checked_mul(width))
        .ok_or_else(|| (RbcsStatus::InvalidArgument, "dimensions overflow".to_string()))
}

unsafe fn emit_problem(out: *mut *mut RbcsProblem, problem: RbcsProblem) {
    *out = Box::into_raw(Box::new(problem));
}

/// Default options: 500 sweeps, tolerance `1e-8`, no pruning and the
/// default hyperparameters.
#[no_mangle]
pub extern "C" fn rbcs_options_default() -> RbcsOptions {
    let s = VbSettings::default();
    let h = HyperParams::default();
    RbcsOptions {
        max_iters: s.max_iters,
        tol: s.tol,
        prune_threshold: 0.0,
        a: h.a,
        b: h.b,
        c: h.c,
        d: h.d,
        e: h.e,
        f: h.f,
    }
}

/// Creates a real problem from a row-major `m×n` matrix and an `m`-vector.
///
/// # Safety
/// `a` must point to `m·n` doubles, `y` to `m` doubles and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn rbcs_problem_new_real(
    a: *const f64,
    y: *const f64,
    m: usize,
    n: usize,
    out: *mut *mut RbcsProblem,
) -> RbcsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = slice(a, checked_len(m, n, 1)?, "a")?;
        let y = slice(y, m, "y")?;
        let problem = ProblemInstance::new(
            DMatrix::from_row_slice(m, n, a),
            DVector::from_column_slice(y),
        )
        .map_err(from_bcs)?;
        emit_problem(
            out,
            RbcsProblem {
                inner: Instance::Real(problem),
                outliers: None,
            },
        );
        Ok(())
    })
}

/// Creates a complex problem from interleaved `(re, im)` data: `a` holds
/// `2·m·n` doubles row-major, `y` holds `2·m`.
///
/// # Safety
/// The pointers must reference the stated number of doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn rbcs_problem_new_complex(
    a: *const f64,
    y: *const f64,
    m: usize,
    n: usize,
    out: *mut *mut RbcsProblem,
) -> RbcsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = slice(a, checked_len(m, n, 2)?, "a")?;
        let y = slice(y, checked_len(m, 1, 2)?, "y")?;
        let pairs = |v: &[f64]| -> Vec<Complex64> {
            v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
        };
        let problem = ProblemInstance::new(
            DMatrix::from_row_slice(m, n, &pairs(a)),
            DVector::from_vec(pairs(y)),
        )
        .map_err(from_bcs)?;
        emit_problem(
            out,
            RbcsProblem {
                inner: Instance::Complex(problem),
                outliers: None,
            },
        );
        Ok(())
    })
}

/// Reads an instance fixture file. If the file carries ground truth, its
/// outlier rows are attached for [`RbcsMethod::Ideal`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rbcs_problem_load(
    path: *const c_char,
    out: *mut *mut RbcsProblem,
) -> RbcsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (RbcsStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let problem = match fixture::read(Path::new(path)).map_err(from_bcs)? {
            AnyFixture::Real(f) => RbcsProblem {
                outliers: f.truth.map(|t| t.outlier_idx),
                inner: Instance::Real(f.problem),
            },
            AnyFixture::Complex(f) => RbcsProblem {
                outliers: f.truth.map(|t| t.outlier_idx),
                inner: Instance::Complex(f.problem),
            },
        };
        emit_problem(out, problem);
        Ok(())
    })
}

/// Releases a problem. Null is ignored.
///
/// # Safety
/// `problem` must come from one of the constructors and not be used again.
#[no_mangle]
pub unsafe extern "C" fn rbcs_problem_free(problem: *mut RbcsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Writes the problem size and whether it is complex.
///
/// # Safety
/// `problem` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn rbcs_problem_dims(
    problem: *const RbcsProblem,
    m: *mut usize,
    n: *mut usize,
    is_complex: *mut bool,
) -> RbcsStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let (rows, cols, cplx) = match &p.inner {
            Instance::Real(q) => (q.m(), q.n(), false),
            Instance::Complex(q) => (q.m(), q.n(), true),
        };
        if !m.is_null() {
            *m = rows;
        }
        if !n.is_null() {
            *n = cols;
        }
        if !is_complex.is_null() {
            *is_complex = cplx;
        }
        Ok(())
    })
}

/// Declares which rows are corrupted, for [`RbcsMethod::Ideal`].
///
/// # Safety
/// `problem` must be a live handle and `rows` must point to `len` indices.
#[no_mangle]
pub unsafe extern "C" fn rbcs_problem_set_outliers(
    problem: *mut RbcsProblem,
    rows: *const usize,
    len: usize,
) -> RbcsStatus {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| null("problem"))?;
        let rows = if len == 0 {
            Vec::new()
        } else if rows.is_null() {
            return Err(null("rows"));
        } else {
            std::slice::from_raw_parts(rows, len).to_vec()
        };
        let m = match &p.inner {
            Instance::Real(q) => q.m(),
            Instance::Complex(q) => q.m(),
        };
        if let Some(&bad) = rows.iter().find(|&&r| r >= m) {
            return Err((
                RbcsStatus::InvalidArgument,
                format!("row {bad} is out of range for M = {m}"),
            ));
        }
        p.outliers = Some(rows);
        Ok(())
    })
}

fn settings_from(opts: &RbcsOptions) -> (HyperParams, VbSettings) {
    let hyper = HyperParams {
        a: opts.a,
        b: opts.b,
        c: opts.c,
        d: opts.d,
        e: opts.e,
        f: opts.f,
    };
    let settings = VbSettings {
        max_iters: opts.max_iters,
        tol: opts.tol,
        prune_threshold: (opts.prune_threshold > 0.0).then_some(opts.prune_threshold),
        ..VbSettings::default()
    };
    (hyper, settings)
}

fn run<T: Scalar>(
    method: RbcsMethod,
    problem: &ProblemInstance<T>,
    outliers: Option<&[usize]>,
    hyper: &HyperParams,
    settings: &VbSettings,
) -> Result<RbcsResult, Failure> {
    let res: RecoveryResult<T> = match method {
        RbcsMethod::BpRbcs => baseline::solve(Method::BpRbcs, problem, None, hyper, settings),
        RbcsMethod::CRbcs => baseline::solve(Method::CRbcs, problem, None, hyper, settings),
        RbcsMethod::Sbl => baseline::solve(Method::Sbl, problem, None, hyper, settings),
        RbcsMethod::Ideal => {
            let rows = outliers.ok_or_else(|| {
                (
                    RbcsStatus::InvalidArgument,
                    "the ideal method needs outlier rows".to_string(),
                )
            })?;
            let mut rows = rows.to_vec();
            rows.sort_unstable();
            rows.dedup();
            let reduced = problem.without_rows(&rows).map_err(from_bcs)?;
            baseline::sbl_solve(reduced.a(), reduced.y(), hyper, settings)
        }
    }
    .map_err(from_bcs)?;
    let complex = T::FIELD == robust_bcs::ScalarField::Complex;
    let x = res
        .x_hat
        .iter()
        .flat_map(|v| {
            let (re, im) = v.parts();
            if complex {
                vec![re, im]
            } else {
                vec![re]
            }
        })
        .collect();
    Ok(RbcsResult {
        complex,
        x,
        z: res.state.z_prob.as_slice().to_vec(),
        iters: res.iters,
        converged: res.converged,
    })
}

/// Runs `method` on `problem`. A null `options` uses the defaults.
///
/// # Safety
/// `problem` must be a live handle, `options` null or valid, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rbcs_solve(
    problem: *const RbcsProblem,
    method: RbcsMethod,
    options: *const RbcsOptions,
    out: *mut *mut RbcsResult,
) -> RbcsStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = options.as_ref().copied().unwrap_or_else(|| rbcs_options_default());
        let (hyper, settings) = settings_from(&opts);
        let outliers = p.outliers.as_deref();
        let result = match &p.inner {
            Instance::Real(q) => run(method, q, outliers, &hyper, &settings)?,
            Instance::Complex(q) => run(method, q, outliers, &hyper, &settings)?,
        };
        *out = Box::into_raw(Box::new(result));
        Ok(())
    })
}

/// Releases a result. Null is ignored.
///
/// # Safety
/// `result` must come from [`rbcs_solve`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn rbcs_result_free(result: *mut RbcsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of doubles in the signal estimate: `N` for real problems, `2·N`
/// for complex ones. Returns 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rbcs_result_x_len(result: *const RbcsResult) -> usize {
    result.as_ref().map_or(0, |r| r.x.len())
}

/// Whether the signal estimate is complex.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rbcs_result_is_complex(result: *const RbcsResult) -> bool {
    result.as_ref().is_some_and(|r| r.complex)
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if len != src.len() {
        return Err((
            RbcsStatus::InvalidArgument,
            format!("buffer holds {len} values, expected {}", src.len()),
        ));
    }
    if len > 0 {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    }
    Ok(())
}

/// Copies the signal estimate into `buf`, which must hold exactly
/// [`rbcs_result_x_len`] doubles.
///
/// # Safety
/// `result` must be a live handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rbcs_result_x(
    result: *const RbcsResult,
    buf: *mut f64,
    len: usize,
) -> RbcsStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        copy_out(&r.x, buf, len)
    })
}

/// Number of indicator probabilities in the result.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rbcs_result_z_len(result: *const RbcsResult) -> usize {
    result.as_ref().map_or(0, |r| r.z.len())
}

/// Copies the final indicator probabilities `⟨z_m⟩` into `buf`. Methods
/// other than BP-RBCS report all ones.
///
/// # Safety
/// `result` must be a live handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rbcs_result_z(
    result: *const RbcsResult,
    buf: *mut f64,
    len: usize,
) -> RbcsStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        copy_out(&r.z, buf, len)
    })
}

/// Number of sweeps performed. Returns 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rbcs_result_iters(result: *const RbcsResult) -> usize {
    result.as_ref().map_or(0, |r| r.iters)
}

/// Whether the solver met its tolerance.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rbcs_result_converged(result: *const RbcsResult) -> bool {
    result.as_ref().is_some_and(|r| r.converged)
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn rbcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rbcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
