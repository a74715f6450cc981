//! C ABI over the `promil` crate.
//!
//! Every fallible function returns a [`PromilStatus`] and writes its result
//! through an out pointer. On failure, [`promil_last_error`] returns a
//! message for the calling thread. Models are opaque [`PromilModel`]
//! handles that must be released with [`promil_model_free`].
//!
//! Arrays are passed as pointer plus length. Bag instances are a row-major
//! `n_instances x dim` block of doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use promil::bagdata::Bag;
use promil::bernstein::{estimate_quantile_closed, quantile_gradients, SortedPredictions};
use promil::heads::Head;
use promil::model::{Model, ModelFile};
use promil::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromilStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument is outside the operation's domain.
    Domain = 2,
    Parse = 3,
    Config = 4,
    Io = 5,
    Format = 6,
    Numerical = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

pub const PROMIL_HEAD_PROMIL: u32 = 0;
pub const PROMIL_HEAD_MAX: u32 = 1;
pub const PROMIL_HEAD_MEAN: u32 = 2;

/// A trained model loaded from a `promil-model/1` file.
pub struct PromilModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PromilStatus {
    match err {
        Error::Domain(_) => PromilStatus::Domain,
        Error::Parse { .. } => PromilStatus::Parse,
        Error::Config { .. } => PromilStatus::Config,
        Error::Io { .. } => PromilStatus::Io,
        Error::Format(_) => PromilStatus::Format,
        Error::Numerical(_) => PromilStatus::Numerical,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PromilStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PromilStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("`{name}` is a null pointer"));
            PromilStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PromilStatus::Internal
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

fn head_of(code: u32) -> Result<Head, Failure> {
    match code {
        PROMIL_HEAD_PROMIL => Ok(Head::Promil),
        PROMIL_HEAD_MAX => Ok(Head::Max),
        PROMIL_HEAD_MEAN => Ok(Head::Mean),
        other => Err(Failure::Lib(Error::Domain(format!("unknown head code {other}")))),
    }
}

/// Message describing the last failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn promil_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn promil_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a nul-terminated UTF-8 string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn promil_model_load(path: *const c_char, out: *mut *mut PromilModel) -> PromilStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::Domain("path is not valid UTF-8".into()))?;
        let model = ModelFile::load(Path::new(path))?.to_model()?;
        *out = Box::into_raw(Box::new(PromilModel { model }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`promil_model_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn promil_model_free(model: *mut PromilModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of features per instance.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn promil_model_input_dim(model: *const PromilModel, out: *mut usize) -> PromilStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        *self::out(out, "out")? = m.model.input_dim();
        Ok(())
    })
}

/// The model's learned quantile level.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn promil_model_q(model: *const PromilModel, out: *mut f64) -> PromilStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        *self::out(out, "out")? = m.model.q.q();
        Ok(())
    })
}

/// Scores one bag with the given head (`PROMIL_HEAD_*`). Bags with a score
/// above 0.5 are classified positive.
///
/// # Safety
/// `data` must point to `n_instances * dim` doubles; `out_score` must be valid.
#[no_mangle]
pub unsafe extern "C" fn promil_model_score_bag(
    model: *const PromilModel,
    data: *const f64,
    n_instances: usize,
    dim: usize,
    head: u32,
    out_score: *mut f64,
) -> PromilStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        let out_score = out(out_score, "out_score")?;
        let head = head_of(head)?;
        if dim != m.model.input_dim() {
            return Err(Error::Domain(format!(
                "instances have {dim} features but the model expects {}",
                m.model.input_dim()
            ))
            .into());
        }
        let len = n_instances
            .checked_mul(dim)
            .ok_or_else(|| Error::Domain("bag size overflows".into()))?;
        let flat = slice(data, len, "data")?;
        let bag = Bag {
            id: "ffi".into(),
            instances: flat.chunks(dim.max(1)).map(<[f64]>::to_vec).collect(),
            label: false,
            hidden_instance_labels: None,
            positive_fraction: None,
        };
        *out_score = m.model.score_bag(&bag, head)?.score;
        Ok(())
    })
}

/// Bernstein quantile estimate of `values` (any order, each in [0, 1]) at
/// level `q` in [0, 1]. `q = 0` gives the maximum and `q = 1` the minimum.
///
/// # Safety
/// `values` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn promil_estimate_quantile(
    values: *const f64,
    n: usize,
    q: f64,
    eps: f64,
    out: *mut f64,
) -> PromilStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let sorted = SortedPredictions::from_unsorted(slice(values, n, "values")?)?;
        *out = estimate_quantile_closed(&sorted, q, eps)?;
        Ok(())
    })
}

/// Estimate and its derivatives for `q` in (0, 1). `out_grad_values`
/// receives `n` partials in the caller's order of `values`.
///
/// # Safety
/// `values` and `out_grad_values` must point to `n` doubles; the other out
/// pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn promil_quantile_gradients(
    values: *const f64,
    n: usize,
    q: f64,
    eps: f64,
    out_value: *mut f64,
    out_grad_values: *mut f64,
    out_grad_q: *mut f64,
) -> PromilStatus {
    guard(|| {
        let sorted = SortedPredictions::from_unsorted(slice(values, n, "values")?)?;
        let g = quantile_gradients(&sorted, q, eps)?;
        let value = out(out_value, "out_value")?;
        let grad_q = out(out_grad_q, "out_grad_q")?;
        if out_grad_values.is_null() {
            return Err(Failure::Null("out_grad_values"));
        }
        let grads = std::slice::from_raw_parts_mut(out_grad_values, n);
        grads.copy_from_slice(&sorted.scatter(&g.grad_values));
        *value = g.value;
        *grad_q = g.grad_q;
        Ok(())
    })
}

/// Area under the ROC curve. `labels` holds 0 or 1 per score.
///
/// # Safety
/// `scores` and `labels` must point to `n` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn promil_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> PromilStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let scores = slice(scores, n, "scores")?;
        let labels = slice(labels, n, "labels")?
            .iter()
            .map(|&l| match l {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Domain(format!("label {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        *out = promil::metrics::auc(scores, &labels)?;
        Ok(())
    })
}
