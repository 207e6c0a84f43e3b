//! C ABI for `zsk`.
//!
//! Objects are opaque handles created by `zsk_*_new`/`load`/`fit` functions
//! and released with the matching `*_free`. Every fallible function returns a
//! [`ZskStatus`] code; on failure a message for the calling thread is
//! available from [`zsk_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use zsk::data::{load_dataset, load_dataset_dir, save_dataset, SideInfoTable, ZeroShotDataset};
use zsk::datagen::{generate, Family, SynthSpec};
use zsk::evaluation::nemenyi_cd;
use zsk::kernels::{dsil_kernel, DsilFormulation, JointPoint, PointSet};
use zsk::methods::{Method, ZeroShotRegressor};
use zsk::persist::{load_model, save_model};
use zsk::svr::SvrConfig;
use zsk::ZskError;

/// Status codes. The first four match the command-line exit codes.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZskStatus {
    Ok = 0,
    /// Invalid argument or configuration.
    InvalidArgument = 1,
    /// Malformed data, unknown target or dimension mismatch.
    DataError = 2,
    /// Runtime failure (I/O, degenerate problem).
    RuntimeError = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZskFamily {
    R = 0,
    S = 1,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZskDsilFormulation {
    Phi = 0,
    KPhi = 1,
    KQ = 2,
}

/// SVR hyperparameters, see [`zsk_svr_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ZskSvrConfig {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_passes: usize,
}

/// Opaque dataset handle.
pub struct ZskDataset(ZeroShotDataset);

/// Opaque fitted-regressor handle.
pub struct ZskRegressor(ZeroShotRegressor);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &ZskError) -> ZskStatus {
    match e.exit_code() {
        1 => ZskStatus::InvalidArgument,
        2 => ZskStatus::DataError,
        _ => ZskStatus::RuntimeError,
    }
}

struct Failure(ZskStatus, String);

impl From<ZskError> for Failure {
    fn from(e: ZskError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> i32 {
    clear_error();
    let status = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ZskStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            ZskStatus::Panic
        }
    };
    status as i32
}

fn null(what: &str) -> Failure {
    Failure(ZskStatus::NullPointer, format!("`{what}` is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ZskStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(ZskStatus::InvalidArgument, msg.into())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zsk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn zsk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn zsk_svr_config_default() -> ZskSvrConfig {
    let d = SvrConfig::default();
    ZskSvrConfig {
        c: d.c,
        epsilon: d.epsilon,
        tol: d.tol,
        max_passes: d.max_passes,
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Loads a dataset from its instance and side-information CSV files.
///
/// # Safety
/// Path arguments must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_load(
    instances_path: *const c_char,
    sideinfo_path: *const c_char,
    out: *mut *mut ZskDataset,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inst = PathBuf::from(str_arg(instances_path, "instances_path")?);
        let side = PathBuf::from(str_arg(sideinfo_path, "sideinfo_path")?);
        *out = boxed(ZskDataset(load_dataset(&inst, &side)?));
        Ok(())
    })
}

/// Loads `instances.csv` and `sideinfo.csv` from a directory.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_load_dir(dir: *const c_char, out: *mut *mut ZskDataset) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        *out = boxed(ZskDataset(load_dataset_dir(&dir)?));
        Ok(())
    })
}

/// Generates a synthetic dataset. `d_prototypes` is used by the S family only.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_generate(
    family: ZskFamily,
    m_o: usize,
    a_s: usize,
    n_o: usize,
    a_x: usize,
    d_prototypes: usize,
    seed: u64,
    out: *mut *mut ZskDataset,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let family = match family {
            ZskFamily::R => Family::R,
            ZskFamily::S => Family::S,
        };
        let spec = SynthSpec {
            family,
            m_o,
            a_s,
            n_o,
            a_x,
            seed,
            d_prototypes,
        };
        *out = boxed(ZskDataset(generate(&spec)?));
        Ok(())
    })
}

/// Builds a dataset from row-major arrays. Target `t` gets the id `"t<t>"`;
/// `row_target[i]` is the target index of row `i`.
///
/// # Safety
/// `features` holds `n_rows * a_x` values, `row_target` and `labels` hold
/// `n_rows` values, `side_info` holds `n_targets * a_s` values.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_from_arrays(
    features: *const f64,
    n_rows: usize,
    a_x: usize,
    row_target: *const usize,
    labels: *const f64,
    side_info: *const f64,
    n_targets: usize,
    a_s: usize,
    out: *mut *mut ZskDataset,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cells = n_rows.checked_mul(a_x).ok_or_else(|| invalid("n_rows * a_x overflows"))?;
        let side_cells = n_targets
            .checked_mul(a_s)
            .ok_or_else(|| invalid("n_targets * a_s overflows"))?;
        let features = slice_arg(features, cells, "features")?;
        let row_target = slice_arg(row_target, n_rows, "row_target")?;
        let labels = slice_arg(labels, n_rows, "labels")?;
        let side = slice_arg(side_info, side_cells, "side_info")?;
        if a_s == 0 {
            return Err(invalid("a_s must be >= 1"));
        }
        let ids: Vec<String> = (0..n_targets).map(|t| format!("t{t}")).collect();
        let table = SideInfoTable::new(
            ids.iter()
                .cloned()
                .zip(side.chunks(a_s).map(<[f64]>::to_vec))
                .collect(),
        )?;
        let row_ids = row_target
            .iter()
            .map(|&t| {
                ids.get(t)
                    .map(String::as_str)
                    .ok_or_else(|| Failure(ZskStatus::DataError, format!("row target index {t} >= n_targets {n_targets}")))
            })
            .collect::<FfiResult<Vec<_>>>()?;
        *out = boxed(ZskDataset(ZeroShotDataset::new(
            features.to_vec(),
            a_x,
            &row_ids,
            labels.to_vec(),
            table,
        )?));
        Ok(())
    })
}

/// Writes `instances.csv` and `sideinfo.csv` into `dir`.
///
/// # Safety
/// `ds` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_save(ds: *const ZskDataset, dir: *const c_char) -> i32 {
    guard(|| {
        let ds = ref_arg(ds, "ds")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        save_dataset(&ds.0, &dir)?;
        Ok(())
    })
}

/// Row count, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_n_rows(ds: *const ZskDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n_rows())
}

/// Feature count, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_a_x(ds: *const ZskDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.a_x())
}

/// Side-information size, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_a_s(ds: *const ZskDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.a_s())
}

/// Number of distinct targets with instances, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_n_targets(ds: *const ZskDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.target_count())
}

/// Releases a dataset. NULL is ignored.
///
/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zsk_dataset_free(ds: *mut ZskDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Fits a regressor. `method` is one of `BL_L`, `BL_Q`, `SR_E`, `SR_M`,
/// `MPLC`, `DSIL`, `DSIL_Phi`, `DSIL_KPhi`, `DSIL_KQ`; `cfg` may be NULL for defaults.
///
/// # Safety
/// `ds` must be a live handle, `method` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zsk_regressor_fit(
    ds: *const ZskDataset,
    method: *const c_char,
    cfg: *const ZskSvrConfig,
    out: *mut *mut ZskRegressor,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let ds = ref_arg(ds, "ds")?;
        let method: Method = str_arg(method, "method")?.parse()?;
        let c = cfg.as_ref().copied().unwrap_or_else(|| zsk_svr_config_default());
        let svr = SvrConfig {
            c: c.c,
            epsilon: c.epsilon,
            tol: c.tol,
            max_passes: c.max_passes,
        };
        *out = boxed(ZskRegressor(ZeroShotRegressor::fit(&ds.0, method, &svr)?));
        Ok(())
    })
}

/// Prediction for one instance `x` (length `a_x`) of a target with side information `s` (length `a_s`).
///
/// # Safety
/// `r` must be a live handle; `x` and `s` must hold `a_x` and `a_s` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zsk_regressor_predict(
    r: *const ZskRegressor,
    x: *const f64,
    a_x: usize,
    s: *const f64,
    a_s: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let r = ref_arg(r, "regressor")?;
        let x = slice_arg(x, a_x, "x")?;
        let s = slice_arg(s, a_s, "s")?;
        *out = r.0.predict(x, s)?;
        Ok(())
    })
}

/// Predictions for `n` instances. Row `i` uses `xs[i*a_x..]` and `ss[i*a_s..]`.
///
/// # Safety
/// `xs` holds `n * a_x` values, `ss` holds `n * a_s` values, `out` has room for `n`.
#[no_mangle]
pub unsafe extern "C" fn zsk_regressor_predict_batch(
    r: *const ZskRegressor,
    xs: *const f64,
    n: usize,
    a_x: usize,
    ss: *const f64,
    a_s: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let r = ref_arg(r, "regressor")?;
        if a_x != r.0.a_x() {
            return Err(ZskError::dims("instance features a_x", r.0.a_x(), a_x).into());
        }
        if a_s != r.0.a_s() {
            return Err(ZskError::dims("side information a_s", r.0.a_s(), a_s).into());
        }
        let xs = slice_arg(xs, n * a_x, "xs")?;
        let ss = slice_arg(ss, n * a_s, "ss")?;
        if n == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let out = slice::from_raw_parts_mut(out, n);
        let mut points = PointSet::with_capacity(a_x, a_s, n);
        for i in 0..n {
            points.push(&xs[i * a_x..(i + 1) * a_x], &ss[i * a_s..(i + 1) * a_s])?;
        }
        out.copy_from_slice(&r.0.predict_points(&points)?);
        Ok(())
    })
}

/// Saves a regressor to a versioned JSON container.
///
/// # Safety
/// `r` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn zsk_regressor_save(r: *const ZskRegressor, path: *const c_char) -> i32 {
    guard(|| {
        let r = ref_arg(r, "regressor")?;
        save_model(&r.0, &PathBuf::from(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Loads a regressor saved by [`zsk_regressor_save`] or the command line.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zsk_regressor_load(path: *const c_char, out: *mut *mut ZskRegressor) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = boxed(ZskRegressor(load_model(&PathBuf::from(str_arg(path, "path")?))?));
        Ok(())
    })
}

/// Feature count the regressor expects, or 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zsk_regressor_a_x(r: *const ZskRegressor) -> usize {
    r.as_ref().map_or(0, |m| m.0.a_x())
}

/// Side-information size the regressor expects, or 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zsk_regressor_a_s(r: *const ZskRegressor) -> usize {
    r.as_ref().map_or(0, |m| m.0.a_s())
}

/// Releases a regressor. NULL is ignored.
///
/// # Safety
/// `r` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zsk_regressor_free(r: *mut ZskRegressor) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// DSIL kernel between `(x1, s1)` and `(x2, s2)`.
///
/// # Safety
/// `x1`, `x2` hold `a_x` values, `s1`, `s2` hold `a_s` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zsk_dsil_kernel(
    x1: *const f64,
    s1: *const f64,
    x2: *const f64,
    s2: *const f64,
    a_x: usize,
    a_s: usize,
    formulation: ZskDsilFormulation,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let p = JointPoint::new(slice_arg(x1, a_x, "x1")?, slice_arg(s1, a_s, "s1")?);
        let q = JointPoint::new(slice_arg(x2, a_x, "x2")?, slice_arg(s2, a_s, "s2")?);
        let f = match formulation {
            ZskDsilFormulation::Phi => DsilFormulation::Phi,
            ZskDsilFormulation::KPhi => DsilFormulation::KPhi,
            ZskDsilFormulation::KQ => DsilFormulation::KQ,
        };
        *out = dsil_kernel(p, q, f)?;
        Ok(())
    })
}

/// Nemenyi critical difference for `k` methods over `n` datasets at `alpha`
/// (0.01, 0.05 or 0.10).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zsk_nemenyi_cd(k: usize, n: usize, alpha: f64, out: *mut f64) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = nemenyi_cd(k, n, alpha)?;
        Ok(())
    })
}
