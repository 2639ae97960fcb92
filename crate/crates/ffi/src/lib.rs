//! C ABI for loading trained models, classifying CSI vectors and computing
//! relevance maps.
//!
//! Every fallible function returns a [`CsixStatus`]; on failure the message
//! is available from [`csix_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Class indices
//! are zero-based; dataset locations are reported 1-based as stored.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use csix::dataset::{load_csv, Dataset};
use csix::lrp::{explain, subcarrier_scores};
use csix::mlp::{forward, load_model, model_from_json, predict, NetworkParams};
use csix::CsixError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Dimension = 5,
    Numeric = 6,
    Panic = 7,
}

/// Trained network.
pub struct CsixModel {
    params: NetworkParams,
}

/// Loaded CSI dataset.
pub struct CsixDataset {
    data: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &CsixError) -> CsixStatus {
    match err {
        CsixError::Io { .. } => CsixStatus::Io,
        CsixError::Row { .. } | CsixError::Format(_) | CsixError::Json(_) | CsixError::Csv(_) => {
            CsixStatus::Format
        }
        CsixError::DimensionMismatch { .. } => CsixStatus::Dimension,
        CsixError::Numeric(_) => CsixStatus::Numeric,
        CsixError::Config(_) | CsixError::InvalidInput(_) | CsixError::IndexOutOfRange { .. } => {
            CsixStatus::InvalidArgument
        }
    }
}

struct Failure(CsixStatus, String);

impl From<CsixError> for Failure {
    fn from(e: CsixError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CsixStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CsixStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsixStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CsixStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CsixStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn in_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, want: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len != want {
        return Err(Failure(
            CsixStatus::Dimension,
            format!("{what} holds {len} values, {want} required"),
        ));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn model_ref<'a>(model: *const CsixModel) -> Result<&'a NetworkParams, Failure> {
    model.as_ref().map(|m| &m.params).ok_or_else(|| null("model"))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn csix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a model file written by `csix train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csix_model_load(path: *const c_char, out: *mut *mut CsixModel) -> CsixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = load_model(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(CsixModel { params }));
        Ok(())
    })
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csix_model_from_json(json: *const c_char, out: *mut *mut CsixModel) -> CsixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = model_from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(CsixModel { params }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from a `csix_model_*` constructor and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn csix_model_free(model: *mut CsixModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input width K, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csix_model_input_dim(model: *const CsixModel) -> usize {
    model.as_ref().map_or(0, |m| m.params.input_dim())
}

/// Number of classes M, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csix_model_classes(model: *const CsixModel) -> usize {
    model.as_ref().map_or(0, |m| m.params.classes())
}

/// Raw amplitudes as the network expects them, scaled if the model was
/// trained with input scaling.
fn model_input(params: &NetworkParams, x: &[f64]) -> Result<Vec<f64>, Failure> {
    Ok(match &params.input_scaling {
        Some(scaler) => scaler.apply_row(x)?,
        None => x.to_vec(),
    })
}

/// Zero-based predicted class of one CSI vector.
///
/// # Safety
/// `x` must point to `len` doubles; `out_class` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csix_model_predict(
    model: *const CsixModel,
    x: *const f64,
    len: usize,
    out_class: *mut usize,
) -> CsixStatus {
    guard(|| {
        let params = model_ref(model)?;
        let x = in_slice(x, len, "x")?;
        if out_class.is_null() {
            return Err(null("out_class"));
        }
        *out_class = predict(params, &model_input(params, x)?)?;
        Ok(())
    })
}

/// Softmax output; `out_len` must equal the class count.
///
/// # Safety
/// `x` must point to `len` doubles and `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn csix_model_probabilities(
    model: *const CsixModel,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> CsixStatus {
    guard(|| {
        let params = model_ref(model)?;
        let x = in_slice(x, len, "x")?;
        let out = out_slice(out, out_len, params.classes(), "out")?;
        let trace = forward(params, &model_input(params, x)?)?;
        out.copy_from_slice(trace.y.as_slice().expect("contiguous output"));
        Ok(())
    })
}

/// Normalized input relevance h' of sample `x` (true class `n`) toward
/// class `m`. `out_len` must equal K.
///
/// # Safety
/// `x` must point to `len` doubles and `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn csix_explain(
    model: *const CsixModel,
    x: *const f64,
    len: usize,
    n: usize,
    m: usize,
    out: *mut f64,
    out_len: usize,
) -> CsixStatus {
    guard(|| {
        let params = model_ref(model)?;
        let x = in_slice(x, len, "x")?;
        let out = out_slice(out, out_len, params.input_dim(), "out")?;
        let map = explain(params, &model_input(params, x)?, n, m)?;
        out.copy_from_slice(&map.h_prime);
        Ok(())
    })
}

/// Per-subcarrier mean of h' over the antenna pairs. `len` must equal
/// `subcarriers * antenna_pairs` and `out_len` must equal `subcarriers`.
///
/// # Safety
/// `h_prime` must point to `len` doubles and `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn csix_subcarrier_scores(
    h_prime: *const f64,
    len: usize,
    subcarriers: usize,
    antenna_pairs: usize,
    out: *mut f64,
    out_len: usize,
) -> CsixStatus {
    guard(|| {
        let h = in_slice(h_prime, len, "h_prime")?;
        let out = out_slice(out, out_len, subcarriers, "out")?;
        out.copy_from_slice(&subcarrier_scores(h, subcarriers, antenna_pairs)?.scores);
        Ok(())
    })
}

/// Loads a CSI CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csix_dataset_load(path: *const c_char, out: *mut *mut CsixDataset) -> CsixStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = load_csv(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(CsixDataset { data }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from `csix_dataset_load` and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn csix_dataset_free(dataset: *mut CsixDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Sample count, or 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csix_dataset_len(dataset: *const CsixDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.len())
}

/// Channels per sample K, or 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csix_dataset_channels(dataset: *const CsixDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.channels())
}

/// Copies sample `index` into `out` (`out_len` = K) and its 1-based location
/// into `out_location`.
///
/// # Safety
/// `out` must point to `out_len` writable doubles; `out_location` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csix_dataset_sample(
    dataset: *const CsixDataset,
    index: usize,
    out: *mut f64,
    out_len: usize,
    out_location: *mut usize,
) -> CsixStatus {
    guard(|| {
        let data = &dataset.as_ref().ok_or_else(|| null("dataset"))?.data;
        let sample = data.samples().get(index).ok_or_else(|| {
            Failure(
                CsixStatus::InvalidArgument,
                format!("sample {index} out of range (dataset has {})", data.len()),
            )
        })?;
        let out = out_slice(out, out_len, data.channels(), "out")?;
        if out_location.is_null() {
            return Err(null("out_location"));
        }
        out.copy_from_slice(&sample.channels);
        *out_location = sample.location;
        Ok(())
    })
}

/// Fraction of dataset samples the model classifies correctly.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csix_model_accuracy(
    model: *const CsixModel,
    dataset: *const CsixDataset,
    out: *mut f64,
) -> CsixStatus {
    guard(|| {
        let params = model_ref(model)?;
        let data = &dataset.as_ref().ok_or_else(|| null("dataset"))?.data;
        if out.is_null() {
            return Err(null("out"));
        }
        if data.is_empty() {
            return Err(Failure(CsixStatus::InvalidArgument, "dataset is empty".into()));
        }
        let mut correct = 0usize;
        for s in data.samples() {
            correct += usize::from(predict(params, &model_input(params, &s.channels)?)? == s.class());
        }
        *out = correct as f64 / data.len() as f64;
        Ok(())
    })
}
