//! C ABI over the rcr library.
//!
//! The surface is handle-based: datasets and trained pairs live behind
//! opaque pointers created and freed by this library. Every fallible call
//! returns an [`RcrStatus`]; on failure a human-readable message is kept in
//! thread-local storage and can be read with [`rcr_last_error_message`].
//!
//! The generated header lives at `include/rcr.h`.

use rcr::data::Dataset;
use rcr::experiment::ModelConfig;
use rcr::linalg::Matrix;
use rcr::loss::CostSpec;
use rcr::metrics::evaluate;
use rcr::model::RcRPair;
use rcr::train::{select_lr, train_rcr, TrainConfig};
use serde::Deserialize;
use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    TrainingFailed = 4,
    IoError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into()).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn fail(status: RcrStatus, message: impl Into<String>) -> RcrStatus {
    set_error(message);
    status
}

/// Message describing the most recent failure on this thread, or NULL.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rcr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rcr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque dataset handle.
pub struct RcrDataset {
    inner: Dataset,
}

/// Opaque trained regressor/rejector handle.
pub struct RcrPair {
    inner: RcRPair,
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, RcrStatus> {
    if ptr.is_null() {
        return Err(fail(RcrStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(RcrStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Build a dataset from row-major features (n_rows x n_cols), targets of
/// length n_rows, and an optional cost vector of length n_rows (pass NULL for
/// none). The data is copied.
///
/// # Safety
/// `features` must point to n_rows * n_cols doubles, `targets` to n_rows
/// doubles, and `costs` to n_rows doubles when non-NULL.
#[no_mangle]
pub unsafe extern "C" fn rcr_dataset_new(
    features: *const c_double,
    n_rows: usize,
    n_cols: usize,
    targets: *const c_double,
    costs: *const c_double,
    out: *mut *mut RcrDataset,
) -> RcrStatus {
    if out.is_null() || features.is_null() || targets.is_null() {
        return fail(RcrStatus::NullPointer, "features, targets, and out must be non-NULL");
    }
    let feature_vec = std::slice::from_raw_parts(features, n_rows * n_cols).to_vec();
    let target_vec = std::slice::from_raw_parts(targets, n_rows).to_vec();
    let cost_vec = if costs.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(costs, n_rows).to_vec())
    };
    let matrix = match Matrix::from_vec(n_rows, n_cols, feature_vec) {
        Ok(m) => m,
        Err(e) => return fail(RcrStatus::InvalidArgument, e.to_string()),
    };
    match Dataset::with_costs(matrix, target_vec, cost_vec) {
        Ok(ds) => {
            *out = Box::into_raw(Box::new(RcrDataset { inner: ds }));
            RcrStatus::Ok
        }
        Err(e) => fail(RcrStatus::InvalidArgument, e.to_string()),
    }
}

/// Load a dataset from a CSV file with a header row. `cost_column` may be
/// NULL.
///
/// # Safety
/// All non-NULL pointers must be valid NUL-terminated strings; `out` must be
/// a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn rcr_dataset_load_csv(
    path: *const c_char,
    target_column: *const c_char,
    cost_column: *const c_char,
    out: *mut *mut RcrDataset,
) -> RcrStatus {
    if out.is_null() {
        return fail(RcrStatus::NullPointer, "out is NULL");
    }
    let path = match read_str(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let target = match read_str(target_column, "target_column") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let cost = if cost_column.is_null() {
        None
    } else {
        match read_str(cost_column, "cost_column") {
            Ok(s) => Some(s),
            Err(status) => return status,
        }
    };
    match rcr::data::load_csv(path, target, cost) {
        Ok(ds) => {
            *out = Box::into_raw(Box::new(RcrDataset { inner: ds }));
            RcrStatus::Ok
        }
        Err(e) => fail(RcrStatus::IoError, e.to_string()),
    }
}

/// Number of rows; 0 for NULL.
#[no_mangle]
pub extern "C" fn rcr_dataset_rows(ds: *const RcrDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    unsafe { (*ds).inner.len() }
}

/// Feature dimension; 0 for NULL.
#[no_mangle]
pub extern "C" fn rcr_dataset_dim(ds: *const RcrDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    unsafe { (*ds).inner.dim() }
}

/// Free a dataset handle. NULL is a no-op.
///
/// # Safety
/// `ds` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn rcr_dataset_free(ds: *mut RcrDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Training options parsed from JSON. All fields are optional:
/// `{"train": {...}, "model_h": {...}, "model_r": {...}, "select_lr": false}`
/// where `train` follows the library's training-config schema (loss kind,
/// cost, learning rate and grid, epochs, slow-start epochs, batch size,
/// seed, Adam parameters) and the model blocks give kind plus hidden dims.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TrainOptions {
    train: TrainConfig,
    model_h: ModelConfig,
    model_r: ModelConfig,
    select_lr: bool,
}

/// Train a regressor/rejector pair. `options_json` may be NULL or "{}" for
/// defaults; `val` is used for learning-rate selection when
/// `select_lr` is true, and may equal `train`.
///
/// # Safety
/// `train`, `val`, and `out` must be valid; `options_json` NULL or a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rcr_train(
    train: *const RcrDataset,
    val: *const RcrDataset,
    options_json: *const c_char,
    out: *mut *mut RcrPair,
) -> RcrStatus {
    if train.is_null() || val.is_null() || out.is_null() {
        return fail(RcrStatus::NullPointer, "train, val, and out must be non-NULL");
    }
    let options: TrainOptions = if options_json.is_null() {
        TrainOptions::default()
    } else {
        let text = match read_str(options_json, "options_json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match serde_json::from_str(text) {
            Ok(o) => o,
            Err(e) => return fail(RcrStatus::InvalidArgument, format!("bad options: {e}")),
        }
    };
    let train_ds = &(*train).inner;
    let val_ds = &(*val).inner;
    let spec_h = options.model_h.to_spec(train_ds.dim());
    let spec_r = options.model_r.to_spec(train_ds.dim());

    let chosen = if options.select_lr {
        match select_lr(train_ds, val_ds, &spec_h, &spec_r, &options.train) {
            Ok(cfg) => cfg,
            Err(e) => return fail(RcrStatus::TrainingFailed, e.to_string()),
        }
    } else {
        options.train.clone()
    };
    match train_rcr(train_ds, val_ds, &spec_h, &spec_r, &chosen) {
        Ok((pair, _)) => {
            *out = Box::into_raw(Box::new(RcrPair { inner: pair }));
            RcrStatus::Ok
        }
        Err(e) => fail(RcrStatus::TrainingFailed, e.to_string()),
    }
}

/// Predict one example: writes the regressor output and whether the pair
/// accepts it (1) or rejects it (0).
///
/// # Safety
/// `x` must point to `dim` doubles; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rcr_pair_predict(
    pair: *const RcrPair,
    x: *const c_double,
    dim: usize,
    out_prediction: *mut c_double,
    out_accept: *mut c_int,
) -> RcrStatus {
    if pair.is_null() || x.is_null() || out_prediction.is_null() || out_accept.is_null() {
        return fail(RcrStatus::NullPointer, "pair, x, and outputs must be non-NULL");
    }
    let features = std::slice::from_raw_parts(x, dim);
    match (*pair).inner.decide(features) {
        Ok((prediction, accept)) => {
            *out_prediction = prediction;
            *out_accept = c_int::from(accept);
            RcrStatus::Ok
        }
        Err(e) => fail(RcrStatus::InvalidArgument, e.to_string()),
    }
}

/// Evaluate a pair on a dataset under a cost specification given as JSON
/// (a number for a constant cost, or "per_example"). On success `*out_json`
/// receives a JSON metrics document to be freed with `rcr_string_free`.
///
/// # Safety
/// All pointers must be valid as described above.
#[no_mangle]
pub unsafe extern "C" fn rcr_pair_evaluate(
    pair: *const RcrPair,
    ds: *const RcrDataset,
    cost_json: *const c_char,
    out_json: *mut *mut c_char,
) -> RcrStatus {
    if pair.is_null() || ds.is_null() || out_json.is_null() {
        return fail(RcrStatus::NullPointer, "pair, ds, and out_json must be non-NULL");
    }
    let cost_text = match read_str(cost_json, "cost_json") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let cost: CostSpec = match serde_json::from_str(cost_text) {
        Ok(c) => c,
        Err(e) => return fail(RcrStatus::InvalidArgument, format!("bad cost: {e}")),
    };
    let report = match evaluate(&(*pair).inner, &(*ds).inner, &cost) {
        Ok(r) => r,
        Err(e) => return fail(RcrStatus::InvalidArgument, e.to_string()),
    };
    let text = match serde_json::to_string(&report) {
        Ok(t) => t,
        Err(e) => return fail(RcrStatus::InvalidArgument, e.to_string()),
    };
    match CString::new(text) {
        Ok(s) => {
            *out_json = s.into_raw();
            RcrStatus::Ok
        }
        Err(_) => fail(RcrStatus::InvalidArgument, "metrics JSON contained NUL"),
    }
}

/// Save a pair to a binary checkpoint file.
///
/// # Safety
/// `pair` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rcr_pair_save(pair: *const RcrPair, path: *const c_char) -> RcrStatus {
    if pair.is_null() {
        return fail(RcrStatus::NullPointer, "pair is NULL");
    }
    let path = match read_str(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match (*pair).inner.save_binary_file(path) {
        Ok(()) => RcrStatus::Ok,
        Err(e) => fail(RcrStatus::IoError, e.to_string()),
    }
}

/// Load a pair from a binary checkpoint file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn rcr_pair_load(path: *const c_char, out: *mut *mut RcrPair) -> RcrStatus {
    if out.is_null() {
        return fail(RcrStatus::NullPointer, "out is NULL");
    }
    let path = match read_str(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match RcRPair::load_binary_file(path) {
        Ok(pair) => {
            *out = Box::into_raw(Box::new(RcrPair { inner: pair }));
            RcrStatus::Ok
        }
        Err(e) => fail(RcrStatus::IoError, e.to_string()),
    }
}

/// Free a pair handle. NULL is a no-op.
///
/// # Safety
/// `pair` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn rcr_pair_free(pair: *mut RcrPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Free a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn rcr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
