//! C ABI for the proxlogit solvers.
//!
//! Every fallible function returns a [`PlrStatus`]; on failure a message is
//! available from [`plr_last_error_message`] on the same thread. Objects are
//! handed out as opaque pointers and must be released with the matching
//! `*_free` function. Enum-valued fields are plain integers so that values
//! coming from C are validated rather than trusted.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use proxlogit::dataset::{self, LabelColumn};
use proxlogit::logistic;
use proxlogit::path;
use proxlogit::penalty;
use proxlogit::solver;
use proxlogit::{
    Dataset, Error, FitResult, InitialStep, Penalty, PenaltyKind, SolverOptions, StartPoint,
    Variant,
};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    DimensionMismatch = 5,
    Incompatible = 6,
    LineSearchFailed = 7,
    Degenerate = 8,
    Panic = 9,
}

/// Values accepted in `PlrPenalty::kind`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlrPenaltyKind {
    L1 = 0,
    Scad = 1,
    Mcp = 2,
    CappedL1 = 3,
}

/// Values accepted in `PlrSolverOptions::variant`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlrVariant {
    IstaBb = 0,
    IstaReverse = 1,
    FistaLipschitz = 2,
    IstaVanilla = 3,
    FistaVanilla = 4,
}

/// Penalty description. `theta` is read for SCAD and MCP, `epsilon` for
/// capped-l1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlrPenalty {
    /// One of `PlrPenaltyKind`.
    pub kind: u32,
    pub lambda: f64,
    pub theta: f64,
    pub epsilon: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlrSolverOptions {
    /// One of `PlrVariant`.
    pub variant: u32,
    pub eta: f64,
    /// Initial L; values <= 0 select the Lipschitz estimate.
    pub l0: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub max_backtracks: usize,
    pub max_expansions: usize,
    pub seed: u64,
    /// Start from a seeded random point instead of zero.
    pub random_start: bool,
}

/// Opaque dataset handle.
pub struct PlrDataset {
    inner: Dataset,
}

/// Opaque fit result handle.
pub struct PlrFitResult {
    inner: FitResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> PlrStatus {
    match err {
        Error::Io { .. } => PlrStatus::Io,
        Error::RaggedRow { .. }
        | Error::NonNumeric { .. }
        | Error::InvalidLabel { .. }
        | Error::MalformedPair { .. }
        | Error::NonIncreasingIndex { .. } => PlrStatus::Parse,
        Error::DimensionMismatch { .. } => PlrStatus::DimensionMismatch,
        Error::InvalidDataset(_) | Error::InvalidParameter(_) | Error::Config(_) => {
            PlrStatus::InvalidArgument
        }
        Error::IncompatibleVariant { .. } => PlrStatus::Incompatible,
        Error::LineSearchFailed { .. } => PlrStatus::LineSearchFailed,
        Error::ZeroGradientAtOrigin => PlrStatus::Degenerate,
        Error::PathPoint { source, .. } => status_of(source),
    }
}

struct Failure(PlrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PlrStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PlrStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any error or panic for `plr_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PlrStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PlrStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn c_path(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn penalty_kind(raw: u32) -> Result<PenaltyKind, Failure> {
    Ok(match raw {
        0 => PenaltyKind::L1,
        1 => PenaltyKind::Scad,
        2 => PenaltyKind::Mcp,
        3 => PenaltyKind::CappedL1,
        other => return Err(invalid(format!("unknown penalty kind {other}"))),
    })
}

fn kind_code(kind: PenaltyKind) -> u32 {
    match kind {
        PenaltyKind::L1 => PlrPenaltyKind::L1 as u32,
        PenaltyKind::Scad => PlrPenaltyKind::Scad as u32,
        PenaltyKind::Mcp => PlrPenaltyKind::Mcp as u32,
        PenaltyKind::CappedL1 => PlrPenaltyKind::CappedL1 as u32,
    }
}

fn variant(raw: u32) -> Result<Variant, Failure> {
    Ok(match raw {
        0 => Variant::IstaBB,
        1 => Variant::IstaReverse,
        2 => Variant::FistaLipschitz,
        3 => Variant::IstaVanilla,
        4 => Variant::FistaVanilla,
        other => return Err(invalid(format!("unknown solver variant {other}"))),
    })
}

fn to_penalty(p: &PlrPenalty) -> Result<Penalty, Failure> {
    let pen = Penalty {
        kind: penalty_kind(p.kind)?,
        lambda: p.lambda,
        theta: p.theta,
        epsilon: p.epsilon,
    };
    pen.validate()?;
    Ok(pen)
}

fn to_options(o: &PlrSolverOptions) -> Result<SolverOptions, Failure> {
    let opts = SolverOptions {
        variant: variant(o.variant)?,
        eta: o.eta,
        initial_step: if o.l0 > 0.0 {
            InitialStep::Fixed(o.l0)
        } else {
            InitialStep::FromLipschitz
        },
        max_iters: o.max_iters,
        tol: o.tol,
        max_backtracks: o.max_backtracks,
        max_expansions: o.max_expansions,
        seed: o.seed,
        start: if o.random_start {
            StartPoint::Random
        } else {
            StartPoint::Zeros
        },
    };
    opts.validate()?;
    Ok(opts)
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn plr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a dataset from row-major samples: feature `j` of sample `i` is
/// `x[i * n_features + j]`. Labels must be 0/1 or -1/+1.
///
/// # Safety
/// `x` must point to `n_samples * n_features` doubles, `y` to `n_samples`
/// doubles, and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn plr_dataset_from_dense(
    x: *const f64,
    y: *const f64,
    n_samples: usize,
    n_features: usize,
    out: *mut *mut PlrDataset,
) -> PlrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if x.is_null() {
            return Err(null("x"));
        }
        if y.is_null() {
            return Err(null("y"));
        }
        let len = n_samples
            .checked_mul(n_features)
            .ok_or_else(|| invalid("n_samples * n_features overflows"))?;
        let xs = std::slice::from_raw_parts(x, len);
        let ys = std::slice::from_raw_parts(y, n_samples);
        let samples: Vec<Vec<f64>> = if n_features == 0 {
            vec![Vec::new(); n_samples]
        } else {
            xs.chunks(n_features).map(<[f64]>::to_vec).collect()
        };
        let ds = Dataset::from_samples(&samples, ys.to_vec())?;
        write_out(out, Box::into_raw(Box::new(PlrDataset { inner: ds })), "out")
    })
}

/// Loads a CSV file with one sample per row. `label_column` is a 0-based
/// column index, or -1 for the last column.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn plr_dataset_load_csv(
    path: *const c_char,
    label_column: i64,
    has_header: bool,
    out: *mut *mut PlrDataset,
) -> PlrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = c_path(path)?;
        let col = match label_column {
            -1 => LabelColumn::Last,
            c if c >= 0 => LabelColumn::Index(c as usize),
            c => return Err(invalid(format!("label_column {c} must be >= 0 or -1"))),
        };
        let ds = dataset::load_csv(&path, col, has_header)?;
        write_out(out, Box::into_raw(Box::new(PlrDataset { inner: ds })), "out")
    })
}

/// Loads a LIBSVM file. `n_features` is a minimum feature count; pass 0 to
/// infer it from the largest index.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn plr_dataset_load_libsvm(
    path: *const c_char,
    n_features: usize,
    out: *mut *mut PlrDataset,
) -> PlrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = c_path(path)?;
        let min = (n_features > 0).then_some(n_features);
        let ds = dataset::load_libsvm(&path, min)?;
        write_out(out, Box::into_raw(Box::new(PlrDataset { inner: ds })), "out")
    })
}

/// # Safety
/// `data` must come from a `plr_dataset_*` constructor; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn plr_dataset_dims(
    data: *const PlrDataset,
    n_samples: *mut usize,
    n_features: *mut usize,
) -> PlrStatus {
    guard(|| {
        let ds = &deref(data, "data")?.inner;
        if !n_samples.is_null() {
            n_samples.write(ds.n_samples());
        }
        if !n_features.is_null() {
            n_features.write(ds.n_features());
        }
        Ok(())
    })
}

/// # Safety
/// `data` must be null or come from a `plr_dataset_*` constructor, and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn plr_dataset_free(data: *mut PlrDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Smallest λ for which the zero vector is optimal under the l1 penalty.
///
/// # Safety
/// `data` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn plr_lambda_max(data: *const PlrDataset, out: *mut f64) -> PlrStatus {
    guard(|| {
        let ds = &deref(data, "data")?.inner;
        let v = path::lambda_max(ds)?;
        write_out(out, v, "out")
    })
}

/// Lipschitz constant of the loss gradient, estimated by power iteration.
///
/// # Safety
/// `data` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn plr_lipschitz_constant(data: *const PlrDataset, out: *mut f64) -> PlrStatus {
    guard(|| {
        let ds = &deref(data, "data")?.inner;
        let est = logistic::lipschitz(ds)?;
        write_out(out, est.value, "out")
    })
}

/// Penalty of the given kind with the library's default shape parameters.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plr_penalty_default(kind: u32, lambda: f64, out: *mut PlrPenalty) -> PlrStatus {
    guard(|| {
        let pen = Penalty::with_defaults(penalty_kind(kind)?, lambda);
        write_out(
            out,
            PlrPenalty {
                kind: kind_code(pen.kind),
                lambda: pen.lambda,
                theta: pen.theta,
                epsilon: pen.epsilon,
            },
            "out",
        )
    })
}

#[no_mangle]
pub extern "C" fn plr_solver_options_default() -> PlrSolverOptions {
    let d = SolverOptions::default();
    PlrSolverOptions {
        variant: PlrVariant::IstaBb as u32,
        eta: d.eta,
        l0: 0.0,
        max_iters: d.max_iters,
        tol: d.tol,
        max_backtracks: d.max_backtracks,
        max_expansions: d.max_expansions,
        seed: d.seed,
        random_start: false,
    }
}

/// Fits penalized logistic regression. Reaching `max_iters` is not an error;
/// check `plr_fit_result_converged`.
///
/// # Safety
/// All pointers must be valid; `out` receives a handle to free with
/// `plr_fit_result_free`.
#[no_mangle]
pub unsafe extern "C" fn plr_fit(
    data: *const PlrDataset,
    penalty: *const PlrPenalty,
    options: *const PlrSolverOptions,
    out: *mut *mut PlrFitResult,
) -> PlrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = &deref(data, "data")?.inner;
        let pen = to_penalty(deref(penalty, "penalty")?)?;
        let opts = to_options(deref(options, "options")?)?;
        let res = solver::fit(ds, &pen, &opts)?;
        write_out(out, Box::into_raw(Box::new(PlrFitResult { inner: res })), "out")
    })
}

/// Scalar proximal map `argmin_w (L/2)(w - t)^2 + g(w)`.
///
/// # Safety
/// `penalty` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn plr_prox_scalar(
    t: f64,
    penalty: *const PlrPenalty,
    l: f64,
    out: *mut f64,
) -> PlrStatus {
    guard(|| {
        let pen = to_penalty(deref(penalty, "penalty")?)?;
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid(format!("L must be positive and finite, got {l}")));
        }
        if !t.is_finite() {
            return Err(invalid(format!("t must be finite, got {t}")));
        }
        write_out(out, penalty::prox_scalar(t, &pen, l), "out")
    })
}

/// Number of coefficients, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live fit result handle.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_dim(result: *const PlrFitResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.beta.len())
}

/// Copies the coefficients into `out`, which must hold `len` doubles with
/// `len` equal to `plr_fit_result_dim`.
///
/// # Safety
/// `result` must be live and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_coefficients(
    result: *const PlrFitResult,
    out: *mut f64,
    len: usize,
) -> PlrStatus {
    guard(|| {
        let r = &deref(result, "result")?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != r.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: r.beta.len(),
                found: len,
            }
            .into());
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, s) in dst.iter_mut().zip(r.beta.iter()) {
            *d = *s;
        }
        Ok(())
    })
}

/// Final objective, or NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live fit result handle.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_objective(result: *const PlrFitResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.final_objective)
}

/// # Safety
/// `result` must be null or a live fit result handle.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_converged(result: *const PlrFitResult) -> bool {
    result.as_ref().is_some_and(|r| r.inner.converged)
}

/// # Safety
/// `result` must be null or a live fit result handle.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_iterations(result: *const PlrFitResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.iterations())
}

/// Coefficients with magnitude above 1e-10.
///
/// # Safety
/// `result` must be null or a live fit result handle.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_nnz(result: *const PlrFitResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.nnz())
}

/// Number of objective values in the trace (iterations + 1).
///
/// # Safety
/// `result` must be null or a live fit result handle.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_trace_len(result: *const PlrFitResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.trace.len())
}

/// Copies the objective trace, starting with the value at the start point.
///
/// # Safety
/// `result` must be live and `out` must point to `len` writable doubles with
/// `len` equal to `plr_fit_result_trace_len`.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_trace_objectives(
    result: *const PlrFitResult,
    out: *mut f64,
    len: usize,
) -> PlrStatus {
    guard(|| {
        let r = &deref(result, "result")?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != r.trace.len() {
            return Err(Error::DimensionMismatch {
                expected: r.trace.len(),
                found: len,
            }
            .into());
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, f) in dst.iter_mut().zip(r.trace.objectives()) {
            *d = f;
        }
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a live fit result handle, and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn plr_fit_result_free(result: *mut PlrFitResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
