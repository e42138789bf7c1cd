//! C ABI over `hharnet` models.
//!
//! Every function returns an [`HharStatus`]; on failure the message is kept
//! per thread and read with [`hhar_last_error`]. Handles are opaque and owned
//! by the caller until passed to [`hhar_model_free`]. No entry point unwinds
//! into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hharnet::container::SavedModel;
use hharnet::metrics::{balanced_accuracy, confusion};
use hharnet::Error;

/// A loaded model. Opaque to C.
pub struct HharModel {
    inner: SavedModel,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HharStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Schema = 4,
    Parse = 5,
    Config = 6,
    Dimension = 7,
    Data = 8,
    Training = 9,
    Metric = 10,
    Format = 11,
    Usage = 12,
    /// The output buffer is too small; the required size was still written.
    BufferTooSmall = 13,
    /// The model kind does not provide this output.
    Unsupported = 14,
    OutOfRange = 15,
    Panic = 16,
}

/// Aggregate scores filled by [`hhar_metrics`]. Undefined values are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HharMetrics {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub misclassifications: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(e: &Error) -> HharStatus {
    match e.kind() {
        "io" => HharStatus::Io,
        "schema" => HharStatus::Schema,
        "parse" => HharStatus::Parse,
        "dimension" => HharStatus::Dimension,
        "data" => HharStatus::Data,
        "training" => HharStatus::Training,
        "metric" => HharStatus::Metric,
        "format" => HharStatus::Format,
        "usage" => HharStatus::Usage,
        _ => HharStatus::Config,
    }
}

struct Failure(HharStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), format!("error[{}]: {e}", e.kind()))
    }
}

fn fail(status: HharStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

/// Runs `f`, records any error or panic, and converts the outcome to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HharStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HharStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HharStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const HharModel) -> Result<&'a SavedModel, Failure> {
    // SAFETY: the caller passes a handle from `hhar_model_load` or NULL.
    unsafe { model.as_ref() }
        .map(|m| &m.inner)
        .ok_or_else(|| fail(HharStatus::NullPointer, "model handle is NULL"))
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(HharStatus::NullPointer, format!("{what} is NULL")));
    }
    // SAFETY: the caller guarantees `len` readable elements at `data`.
    Ok(unsafe { std::slice::from_raw_parts(data, len) })
}

fn check_dim(model: &SavedModel, len: usize) -> Result<(), Failure> {
    if len != model.input_dim() {
        return Err(Error::Dimension {
            expected: model.input_dim(),
            got: len,
        }
        .into());
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hhar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hhar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a model file. On success `*out` receives a handle to free with
/// [`hhar_model_free`]; on failure it is set to NULL.
///
/// # Safety
/// `path` must be NULL or a NUL-terminated string; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn hhar_model_load(path: *const c_char, out: *mut *mut HharModel) -> HharStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(HharStatus::NullPointer, "output handle pointer is NULL"));
        }
        // SAFETY: checked non-NULL above.
        unsafe { *out = ptr::null_mut() };
        if path.is_null() {
            return Err(fail(HharStatus::NullPointer, "path is NULL"));
        }
        // SAFETY: the caller passes a NUL-terminated string.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| fail(HharStatus::InvalidUtf8, "path is not valid UTF-8"))?;
        let inner = SavedModel::load(Path::new(path))?;
        let handle = Box::into_raw(Box::new(HharModel { inner }));
        // SAFETY: checked non-NULL above.
        unsafe { *out = handle };
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hhar_model_free(model: *mut HharModel) {
    if !model.is_null() {
        // SAFETY: the handle came from `Box::into_raw` in `hhar_model_load`.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Number of raw features a prediction expects; 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hhar_model_feature_count(model: *const HharModel) -> usize {
    // SAFETY: forwarded caller contract.
    unsafe { model_ref(model) }.map_or(0, SavedModel::input_dim)
}

/// Number of output classes; 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hhar_model_class_count(model: *const HharModel) -> usize {
    // SAFETY: forwarded caller contract.
    unsafe { model_ref(model) }.map_or(0, SavedModel::n_classes)
}

/// Model kind (`flat`, `lcpn`, `node`, `tree`, `forest`, `knn`) as a static
/// string; NULL for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hhar_model_kind(model: *const HharModel) -> *const c_char {
    // SAFETY: forwarded caller contract.
    let Ok(m) = (unsafe { model_ref(model) }) else {
        return ptr::null();
    };
    let kind = match m.classifier.kind() {
        "flat" => c"flat",
        "lcpn" => c"lcpn",
        "node" => c"node",
        "tree" => c"tree",
        "forest" => c"forest",
        "knn" => c"knn",
        _ => c"unknown",
    };
    kind.as_ptr()
}

/// Copies the name of class `index` into `buf` with a terminating NUL.
/// `*needed` (if not NULL) receives the buffer size required, NUL included.
///
/// # Safety
/// `buf` must be NULL or hold `buf_len` writable bytes; `needed` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn hhar_model_class_name(
    model: *const HharModel,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
    needed: *mut usize,
) -> HharStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let m = unsafe { model_ref(model) }?;
        let name = m
            .leaf_names
            .get(index)
            .ok_or_else(|| fail(HharStatus::OutOfRange, format!("class {index} of {}", m.n_classes())))?;
        let bytes = name.as_bytes();
        if !needed.is_null() {
            // SAFETY: checked non-NULL.
            unsafe { *needed = bytes.len() + 1 };
        }
        if buf.is_null() || buf_len < bytes.len() + 1 {
            return Err(fail(HharStatus::BufferTooSmall, format!("class name needs {} bytes", bytes.len() + 1)));
        }
        // SAFETY: `buf` holds at least `bytes.len() + 1` bytes.
        unsafe {
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
            *buf.add(bytes.len()) = 0;
        }
        Ok(())
    })
}

/// Predicts the class of one raw feature vector. NaN cells are treated as
/// missing and imputed with the training means.
///
/// # Safety
/// `features` must hold `len` readable values; `out_class` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hhar_model_predict(
    model: *const HharModel,
    features: *const f64,
    len: usize,
    out_class: *mut usize,
) -> HharStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let m = unsafe { model_ref(model) }?;
        if out_class.is_null() {
            return Err(fail(HharStatus::NullPointer, "out_class is NULL"));
        }
        // SAFETY: forwarded caller contract.
        let x = unsafe { slice(features, len, "features") }?;
        check_dim(m, len)?;
        let class = m.predict_raw(x)?;
        // SAFETY: checked non-NULL.
        unsafe { *out_class = class };
        Ok(())
    })
}

/// Writes class probabilities for one raw feature vector into `out`, which
/// must hold [`hhar_model_class_count`] values. Trees, forests and kNN return
/// `Unsupported`.
///
/// # Safety
/// `features` must hold `len` readable values; `out` must hold `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn hhar_model_predict_proba(
    model: *const HharModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> HharStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let m = unsafe { model_ref(model) }?;
        // SAFETY: forwarded caller contract.
        let x = unsafe { slice(features, len, "features") }?;
        check_dim(m, len)?;
        if out.is_null() {
            return Err(fail(HharStatus::NullPointer, "out is NULL"));
        }
        if out_len < m.n_classes() {
            return Err(fail(HharStatus::BufferTooSmall, format!("need {} values", m.n_classes())));
        }
        let probs = m
            .predict_proba_raw(x)?
            .ok_or_else(|| fail(HharStatus::Unsupported, format!("{} models give no probabilities", m.classifier.kind())))?;
        // SAFETY: `out` holds at least `n_classes` values.
        unsafe { ptr::copy_nonoverlapping(probs.as_ptr(), out, probs.len()) };
        Ok(())
    })
}

/// Accuracy, balanced accuracy and misclassification count of `len` label
/// pairs over `n_classes` classes.
///
/// # Safety
/// `y_true` and `y_pred` must hold `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hhar_metrics(
    y_true: *const usize,
    y_pred: *const usize,
    len: usize,
    n_classes: usize,
    out: *mut HharMetrics,
) -> HharStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(HharStatus::NullPointer, "out is NULL"));
        }
        // SAFETY: forwarded caller contract.
        let (t, p) = unsafe { (slice(y_true, len, "y_true")?, slice(y_pred, len, "y_pred")?) };
        let cm = confusion(t, p, n_classes)?;
        let metrics = HharMetrics {
            accuracy: hharnet::metrics::accuracy(&cm).unwrap_or(f64::NAN),
            balanced_accuracy: balanced_accuracy(&cm).unwrap_or(f64::NAN),
            misclassifications: cm.misclassifications(),
        };
        // SAFETY: checked non-NULL.
        unsafe { *out = metrics };
        Ok(())
    })
}
