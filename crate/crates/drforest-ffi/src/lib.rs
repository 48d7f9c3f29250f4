//! C ABI for the drforest pipeline.
//!
//! Models are opaque handles created by `drf_fit` or `drf_model_load` and
//! released with `drf_model_free`. Every fallible call returns a status
//! code; on failure `drf_last_error` returns a thread-local message that
//! stays valid until the next failing call on the same thread. All matrix
//! arguments are dense row-major doubles. Panics never cross the boundary;
//! they are caught and reported as `DRF_PANIC`.
//!
//! The matching header is maintained by hand at `include/drforest.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use drforest::{
    fit, predict_batch, BackscorerConfig, Error, ForestConfig, InputMatrix, Mat, Metric,
    PipelineConfig, PipelineModel, ResponseMatrix,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrfStatus {
    Ok = 0,
    InvalidArgument = 1,
    FitError = 2,
    PredictError = 3,
    IoError = 4,
    Panic = 5,
}

/// Response metric selector for [`DrfFitOptions`].
pub const DRF_METRIC_EUCLIDEAN: i32 = 0;
/// Isomap geodesic metric; set `isomap_k`.
pub const DRF_METRIC_ISOMAP: i32 = 1;

/// Fit hyperparameters. `mtry = 0` means the default max(1, p/3).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DrfFitOptions {
    pub n_trees: usize,
    pub mtry: usize,
    pub min_leaf: usize,
    pub seed: u64,
    pub metric: i32,
    pub isomap_k: usize,
    pub embedding_dim: usize,
    pub sigma_g: f64,
    pub gamma_g: f64,
}

/// Opaque trained model.
pub struct DrfModel {
    inner: PipelineModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_for(err: &Error) -> DrfStatus {
    match err {
        Error::Io { .. } | Error::VersionMismatch { .. } | Error::CorruptModel(_) => {
            DrfStatus::IoError
        }
        Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::BadDimensions(_)
        | Error::DimensionMismatch { .. } => DrfStatus::InvalidArgument,
        Error::AllZeroAffinity | Error::DegenerateTrainingSet | Error::LeafMeansMissing => {
            DrfStatus::PredictError
        }
        _ => DrfStatus::FitError,
    }
}

fn fail(err: &Error) -> DrfStatus {
    set_error(&err.to_string());
    status_for(err)
}

fn guarded(body: impl FnOnce() -> DrfStatus) -> DrfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in drforest".to_string());
            set_error(&message);
            DrfStatus::Panic
        }
    }
}

/// Fills `out` with the default fit options (100 trees, Euclidean metric,
/// 2 embedding dimensions, sigma_g 100, gamma_g 200).
///
/// # Safety
/// `out` must point to writable memory for one `DrfFitOptions`.
#[no_mangle]
pub unsafe extern "C" fn drf_fit_options_default(out: *mut DrfFitOptions) -> DrfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return DrfStatus::InvalidArgument;
    }
    *out = DrfFitOptions {
        n_trees: 100,
        mtry: 0,
        min_leaf: 1,
        seed: 0,
        metric: DRF_METRIC_EUCLIDEAN,
        isomap_k: 5,
        embedding_dim: 2,
        sigma_g: 100.0,
        gamma_g: 200.0,
    };
    DrfStatus::Ok
}

unsafe fn slice_matrix<'a>(
    data: *const f64,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<Mat, DrfStatus> {
    if data.is_null() {
        set_error(&format!("{what} pointer is null"));
        return Err(DrfStatus::InvalidArgument);
    }
    if rows == 0 || cols == 0 {
        set_error(&format!("{what} dimensions must be positive"));
        return Err(DrfStatus::InvalidArgument);
    }
    let values = std::slice::from_raw_parts(data, rows * cols);
    Ok(Mat::from_row_slice(rows, cols, values))
}

/// Trains a model on row-major inputs `x` (n×p) and responses `y` (n×q).
/// On success stores a heap-allocated model in `*out_model`; release it
/// with `drf_model_free`.
///
/// # Safety
/// `x` must point to n·p doubles, `y` to n·q doubles, `options` to a valid
/// options struct, and `out_model` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn drf_fit(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    q: usize,
    options: *const DrfFitOptions,
    out_model: *mut *mut DrfModel,
) -> DrfStatus {
    if options.is_null() || out_model.is_null() {
        set_error("options and out_model must not be null");
        return DrfStatus::InvalidArgument;
    }
    let opts = *options;
    let x = match slice_matrix(x, n, p, "x") {
        Ok(m) => m,
        Err(s) => return s,
    };
    let y = match slice_matrix(y, n, q, "y") {
        Ok(m) => m,
        Err(s) => return s,
    };
    guarded(|| {
        let metric = match opts.metric {
            DRF_METRIC_EUCLIDEAN => Metric::Euclidean,
            DRF_METRIC_ISOMAP => Metric::Isomap { k: opts.isomap_k },
            other => {
                set_error(&format!("unknown metric selector {other}"));
                return DrfStatus::InvalidArgument;
            }
        };
        let config = PipelineConfig {
            forest: ForestConfig {
                n_trees: opts.n_trees,
                mtry: if opts.mtry == 0 { None } else { Some(opts.mtry) },
                min_leaf: opts.min_leaf,
                bootstrap: true,
                seed: opts.seed,
            },
            metric,
            embedding_dim: opts.embedding_dim,
            backscore: BackscorerConfig {
                sigma_g: opts.sigma_g,
                gamma_g: opts.gamma_g,
            },
        };
        let inputs = match InputMatrix::new(x) {
            Ok(v) => v,
            Err(e) => return fail(&e),
        };
        let responses = match ResponseMatrix::new(y) {
            Ok(v) => v,
            Err(e) => return fail(&e),
        };
        match fit(&inputs, &responses, None, &config) {
            Ok(model) => {
                *out_model = Box::into_raw(Box::new(DrfModel { inner: model }));
                DrfStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Predicts one response. `x_new` holds `p` doubles, `out_y` receives `q`.
///
/// # Safety
/// `model` must come from `drf_fit`/`drf_model_load`; buffer lengths must
/// match the model dimensions reported by `drf_model_dims`.
#[no_mangle]
pub unsafe extern "C" fn drf_predict(
    model: *const DrfModel,
    x_new: *const f64,
    p: usize,
    out_y: *mut f64,
    q: usize,
) -> DrfStatus {
    drf_predict_batch(model, x_new, 1, p, out_y, q)
}

/// Predicts `rows` responses from a row-major input block.
///
/// # Safety
/// `x` must point to rows·p doubles and `out_y` to rows·q writable doubles.
#[no_mangle]
pub unsafe extern "C" fn drf_predict_batch(
    model: *const DrfModel,
    x: *const f64,
    rows: usize,
    p: usize,
    out_y: *mut f64,
    q: usize,
) -> DrfStatus {
    let Some(model) = model.as_ref() else {
        set_error("model pointer is null");
        return DrfStatus::InvalidArgument;
    };
    if out_y.is_null() {
        set_error("out_y pointer is null");
        return DrfStatus::InvalidArgument;
    }
    if p != model.inner.p() || q != model.inner.q() {
        set_error(&format!(
            "dimension mismatch: model expects p={} q={}, caller passed p={p} q={q}",
            model.inner.p(),
            model.inner.q()
        ));
        return DrfStatus::InvalidArgument;
    }
    let x = match slice_matrix(x, rows, p, "x") {
        Ok(m) => m,
        Err(s) => return s,
    };
    guarded(|| match predict_batch(&model.inner, &x) {
        Ok(pred) => {
            let out = std::slice::from_raw_parts_mut(out_y, rows * q);
            for i in 0..rows {
                for j in 0..q {
                    out[i * q + j] = pred[(i, j)];
                }
            }
            DrfStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

unsafe fn path_from(ptr: *const c_char) -> Result<String, DrfStatus> {
    if ptr.is_null() {
        set_error("path pointer is null");
        return Err(DrfStatus::InvalidArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s.to_string()),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(DrfStatus::InvalidArgument)
        }
    }
}

/// Saves a model to a JSON file.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn drf_model_save(
    model: *const DrfModel,
    path: *const c_char,
) -> DrfStatus {
    let Some(model) = model.as_ref() else {
        set_error("model pointer is null");
        return DrfStatus::InvalidArgument;
    };
    let path = match path_from(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guarded(|| match drforest::save_model(&model.inner, &path) {
        Ok(()) => DrfStatus::Ok,
        Err(e) => fail(&e),
    })
}

/// Loads a model saved by `drf_model_save`.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn drf_model_load(
    path: *const c_char,
    out_model: *mut *mut DrfModel,
) -> DrfStatus {
    if out_model.is_null() {
        set_error("out_model pointer is null");
        return DrfStatus::InvalidArgument;
    }
    let path = match path_from(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guarded(|| match drforest::load_model(&path) {
        Ok(model) => {
            *out_model = Box::into_raw(Box::new(DrfModel { inner: model }));
            DrfStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Reports the model's input width, response width, and training size.
///
/// # Safety
/// Output pointers may be null individually; non-null ones must be writable.
#[no_mangle]
pub unsafe extern "C" fn drf_model_dims(
    model: *const DrfModel,
    out_p: *mut usize,
    out_q: *mut usize,
    out_n_train: *mut usize,
) -> DrfStatus {
    let Some(model) = model.as_ref() else {
        set_error("model pointer is null");
        return DrfStatus::InvalidArgument;
    };
    if !out_p.is_null() {
        *out_p = model.inner.p();
    }
    if !out_q.is_null() {
        *out_q = model.inner.q();
    }
    if !out_n_train.is_null() {
        *out_n_train = model.inner.n_train();
    }
    DrfStatus::Ok
}

/// Releases a model handle. Passing null is a no-op.
///
/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn drf_model_free(model: *mut DrfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Message for the most recent failure on this thread; empty string if none.
#[no_mangle]
pub extern "C" fn drf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn drf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
