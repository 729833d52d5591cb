//! C ABI for loading a trained checkpoint and scoring windows of raw rows.
//!
//! Every fallible function returns a status code (`MAMNET_OK` on success).
//! On failure a description is available from [`mamnet_last_error`] on the
//! same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mamnet::checkpoint::Checkpoint;
use mamnet::eval::welch_t_test;
use mamnet::model::predict_window;
use mamnet::numerics::Tensor;
use mamnet::spectral::{dft, magnitude_bins};
use mamnet::{Error, ModelConfig};

pub const MAMNET_OK: i32 = 0;
/// Invalid argument or configuration.
pub const MAMNET_ERR_USAGE: i32 = 1;
/// Unreadable, malformed, or mis-shaped input.
pub const MAMNET_ERR_DATA: i32 = 2;
/// A non-finite value appeared during computation.
pub const MAMNET_ERR_NUMERIC: i32 = 3;
/// A required pointer argument was null.
pub const MAMNET_ERR_NULL: i32 = 4;
/// Internal panic caught at the boundary.
pub const MAMNET_ERR_PANIC: i32 = 5;

/// Opaque handle to a loaded model.
pub struct MamnetModel {
    checkpoint: Checkpoint,
    config: ModelConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(code: i32, msg: &str) -> i32 {
    set_error(msg);
    code
}

fn from_error(e: &Error) -> i32 {
    fail(e.exit_code(), &e.to_string())
}

fn guard(f: impl FnOnce() -> i32) -> i32 {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(MAMNET_ERR_PANIC, "internal panic"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mamnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mamnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a checkpoint file. On success `*out` owns a handle to release with
/// [`mamnet_model_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mamnet_model_load(path: *const c_char, out: *mut *mut MamnetModel) -> i32 {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(MAMNET_ERR_NULL, "path and out must be non-null");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(MAMNET_ERR_USAGE, "path is not valid UTF-8");
        };
        match Checkpoint::load(Path::new(path)) {
            Ok(checkpoint) => {
                let config = checkpoint.model_config();
                *out = Box::into_raw(Box::new(MamnetModel { checkpoint, config }));
                MAMNET_OK
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Releases a handle from [`mamnet_model_load`]. Null is ignored.
///
/// # Safety
/// `model` must come from `mamnet_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mamnet_model_free(model: *mut MamnetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Rows per window the model expects, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mamnet_model_window_len(model: *const MamnetModel) -> usize {
    model.as_ref().map_or(0, |m| m.config.window_len)
}

/// Raw columns per row (before feature selection), or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mamnet_model_feature_count(model: *const MamnetModel) -> usize {
    model.as_ref().map_or(0, |m| m.checkpoint.columns.len())
}

/// Scores one window of raw, unnormalised rows given row-major as
/// `n_rows × n_cols` values. Writes the anomaly probability (classify) or
/// the forecast (regress) to `*score`.
///
/// # Safety
/// `rows` must point to `n_rows * n_cols` readable doubles; `score` must be
/// writable; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mamnet_model_predict_window(
    model: *const MamnetModel,
    rows: *const f64,
    n_rows: usize,
    n_cols: usize,
    score: *mut f64,
) -> i32 {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(MAMNET_ERR_NULL, "model must be non-null");
        };
        if rows.is_null() || score.is_null() {
            return fail(MAMNET_ERR_NULL, "rows and score must be non-null");
        }
        let (w, f) = (m.config.window_len, m.checkpoint.columns.len());
        if n_rows != w || n_cols != f {
            return fail(
                MAMNET_ERR_DATA,
                &format!("window is {n_rows}x{n_cols}, model expects {w}x{f}"),
            );
        }
        let raw = std::slice::from_raw_parts(rows, n_rows * n_cols);
        let mut data = Vec::with_capacity(w * m.config.features);
        for row in raw.chunks(n_cols) {
            match m.checkpoint.transform_row(row) {
                Ok(r) => data.extend(r),
                Err(e) => return from_error(&e),
            }
        }
        let result = Tensor::from_vec(&[w, m.config.features], data)
            .and_then(|t| predict_window(&m.checkpoint.params, &m.config, &t));
        match result {
            Ok(s) => {
                *score = s;
                MAMNET_OK
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Writes `k` normalised DFT magnitudes `|X_j| / len` of `signal` to `out`.
///
/// # Safety
/// `signal` must hold `len` doubles and `out` room for `k`.
#[no_mangle]
pub unsafe extern "C" fn mamnet_dft_magnitudes(signal: *const f64, len: usize, k: usize, out: *mut f64) -> i32 {
    guard(|| {
        if signal.is_null() || out.is_null() {
            return fail(MAMNET_ERR_NULL, "signal and out must be non-null");
        }
        let x = std::slice::from_raw_parts(signal, len);
        match dft(x).and_then(|c| magnitude_bins(&c, k)) {
            Ok(bins) => {
                std::slice::from_raw_parts_mut(out, k).copy_from_slice(&bins);
                MAMNET_OK
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Welch two-sample t-test: statistic, Welch–Satterthwaite df, two-sided p.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mamnet_welch(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    t: *mut f64,
    df: *mut f64,
    p: *mut f64,
) -> i32 {
    guard(|| {
        if a.is_null() || b.is_null() || t.is_null() || df.is_null() || p.is_null() {
            return fail(MAMNET_ERR_NULL, "all pointer arguments must be non-null");
        }
        let (a, b) = (std::slice::from_raw_parts(a, na), std::slice::from_raw_parts(b, nb));
        match welch_t_test(a, b) {
            Ok(r) => {
                *t = r.t;
                *df = r.df;
                *p = r.p;
                MAMNET_OK
            }
            Err(e) => from_error(&e),
        }
    })
}
