//! C ABI over `qmc-estimator`.
//!
//! Configs and reports are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns a [`QmcStatus`];
//! on failure [`qmc_last_error`] describes what went wrong on the calling
//! thread. Strings returned by the library are freed with
//! [`qmc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qmc_estimator::purification::{absorption_stats, build_markov_chain, monte_carlo, BasePairModel};
use qmc_estimator::report::{model_from_config, policy_from_config};
use qmc_estimator::{full_report, ArchitectureConfig, Error, ResourceReport};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Config = 4,
    Pipeline = 5,
    Spec = 6,
    /// The purification target is unreachable; stats hold the saturated fidelity.
    Saturated = 7,
    /// The field path does not exist or has no value.
    NotFound = 8,
    Panic = 9,
}

/// Opaque architecture config.
pub struct QmcConfig(ArchitectureConfig);

/// Opaque resource report.
pub struct QmcReport(ResourceReport);

/// Completion-time statistics of one purified link, in pulse slots.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QmcPulseStats {
    pub mean: f64,
    pub rms: f64,
    /// Final pair fidelity, or the saturated fidelity when the call
    /// returns `QMC_STATUS_SATURATED`.
    pub final_fidelity: f64,
    /// Purification rounds (Markov mode).
    pub levels: u32,
    /// Standard error of the mean (Monte Carlo mode).
    pub std_error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> QmcStatus {
    match e.root() {
        Error::Io { .. } => QmcStatus::Io,
        Error::Config(_) => QmcStatus::Config,
        Error::Spec(_) => QmcStatus::Spec,
        Error::Saturation { .. } => QmcStatus::Saturated,
        _ => QmcStatus::Pipeline,
    }
}

fn fail(e: Error) -> QmcStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Run `f`, mapping panics to `QmcStatus::Panic`.
fn guard(f: impl FnOnce() -> QmcStatus) -> QmcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            QmcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, QmcStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(QmcStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        QmcStatus::InvalidUtf8
    })
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("`", stringify!($p), "` is null"));
            return QmcStatus::NullPointer;
        })+
    };
}

fn into_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn qmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn qmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The built-in 2048-bit baseline config. Never null.
#[no_mangle]
pub extern "C" fn qmc_config_baseline() -> *mut QmcConfig {
    Box::into_raw(Box::new(QmcConfig(ArchitectureConfig::baseline())))
}

/// Load a TOML config file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmc_config_from_path(path: *const c_char, out: *mut *mut QmcConfig) -> QmcStatus {
    guard(|| {
        non_null!(out);
        let path = try_status!(str_arg(path));
        match ArchitectureConfig::load(path) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(QmcConfig(cfg)));
                QmcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parse a TOML config from a string.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmc_config_from_str(text: *const c_char, out: *mut *mut QmcConfig) -> QmcStatus {
    guard(|| {
        non_null!(out);
        let text = try_status!(str_arg(text));
        match ArchitectureConfig::from_toml_str(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(QmcConfig(cfg)));
                QmcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Set a numeric config key (e.g. `p_lat`, `purification.kappa`) in its units.
/// The config is unchanged on failure.
///
/// # Safety
/// `config` must come from this library; `key` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qmc_config_set(config: *mut QmcConfig, key: *const c_char, value: f64) -> QmcStatus {
    guard(|| {
        non_null!(config);
        let key = try_status!(str_arg(key));
        match (*config).0.with_value(key, value) {
            Ok(cfg) => {
                (*config).0 = cfg;
                QmcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Read a numeric config key. Unset optional keys give `QMC_STATUS_NOT_FOUND`.
///
/// # Safety
/// `config` must come from this library; `key` must be NUL-terminated;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmc_config_get(config: *const QmcConfig, key: *const c_char, out: *mut f64) -> QmcStatus {
    guard(|| {
        non_null!(config, out);
        let key = try_status!(str_arg(key));
        match (*config).0.get(key) {
            Ok(Some(v)) => {
                *out = v;
                QmcStatus::Ok
            }
            Ok(None) => {
                set_error(format!("`{key}` is not set"));
                QmcStatus::NotFound
            }
            Err(e) => fail(e),
        }
    })
}

/// Config as TOML. Free with `qmc_string_free`.
///
/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn qmc_config_to_toml(config: *const QmcConfig) -> *mut c_char {
    if config.is_null() {
        set_error("`config` is null");
        return ptr::null_mut();
    }
    into_string((*config).0.to_toml_string())
}

/// # Safety
/// `config` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qmc_config_free(config: *mut QmcConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Evaluate the full resource report for a config.
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmc_report_new(config: *const QmcConfig, out: *mut *mut QmcReport) -> QmcStatus {
    guard(|| {
        non_null!(config, out);
        match full_report(&(*config).0) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(QmcReport(r)));
                QmcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Numeric report field at a dotted path such as `workload.t_total_days`.
/// Booleans read as 0 or 1.
///
/// # Safety
/// `report` must come from this library; `path` must be NUL-terminated;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmc_report_field(report: *const QmcReport, path: *const c_char, out: *mut f64) -> QmcStatus {
    guard(|| {
        non_null!(report, out);
        let path = try_status!(str_arg(path));
        match (*report).0.field(path) {
            Some(v) => {
                *out = v;
                QmcStatus::Ok
            }
            None => {
                set_error(format!("no numeric field `{path}`"));
                QmcStatus::NotFound
            }
        }
    })
}

/// 1 if the report carries a feasibility violation, 0 if not, -1 on null.
///
/// # Safety
/// `report` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn qmc_report_has_violation(report: *const QmcReport) -> i32 {
    if report.is_null() {
        set_error("`report` is null");
        return -1;
    }
    i32::from((*report).0.has_violation())
}

/// Report as pretty JSON. Free with `qmc_string_free`.
///
/// # Safety
/// `report` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn qmc_report_json(report: *const QmcReport) -> *mut c_char {
    if report.is_null() {
        set_error("`report` is null");
        return ptr::null_mut();
    }
    into_string((*report).0.to_json())
}

/// Report as an aligned text table. Free with `qmc_string_free`.
///
/// # Safety
/// `report` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn qmc_report_text(report: *const QmcReport) -> *mut c_char {
    if report.is_null() {
        set_error("`report` is null");
        return ptr::null_mut();
    }
    into_string((*report).0.to_text())
}

/// # Safety
/// `report` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qmc_report_free(report: *mut QmcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn qmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn link_model(config: *const QmcConfig, eps_local: f64) -> Result<BasePairModel, Error> {
    let model = model_from_config(&(*config).0)?;
    BasePairModel::new(model.params, eps_local)
}

/// Exact (absorbing-chain) purification cost of one link.
/// `loss_db` in dB, `eps_local` as a fraction. On `QMC_STATUS_SATURATED`,
/// `out->final_fidelity` holds the saturated fidelity.
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmc_purify_markov(
    config: *const QmcConfig,
    loss_db: f64,
    eps_local: f64,
    f_target: f64,
    out: *mut QmcPulseStats,
) -> QmcStatus {
    guard(|| {
        non_null!(config, out);
        let model = try_status!(link_model(config, eps_local).map_err(fail));
        let policy = policy_from_config(&(*config).0);
        let result = build_markov_chain(&policy, &model, loss_db, f_target)
            .and_then(|chain| Ok((chain.levels(), absorption_stats(&chain)?)));
        match result {
            Ok((levels, s)) => {
                *out = QmcPulseStats {
                    mean: s.mean,
                    rms: s.rms,
                    final_fidelity: s.final_fidelity,
                    levels: levels as u32,
                    std_error: 0.0,
                };
                QmcStatus::Ok
            }
            Err(e) => {
                if let Error::Saturation { saturated, levels, .. } = e.root() {
                    *out = QmcPulseStats {
                        final_fidelity: *saturated,
                        levels: *levels as u32,
                        ..Default::default()
                    };
                }
                fail(e)
            }
        }
    })
}

/// Seeded Monte Carlo purification cost of one link.
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmc_purify_monte_carlo(
    config: *const QmcConfig,
    loss_db: f64,
    eps_local: f64,
    f_target: f64,
    trials: usize,
    seed: u64,
    out: *mut QmcPulseStats,
) -> QmcStatus {
    guard(|| {
        non_null!(config, out);
        let model = try_status!(link_model(config, eps_local).map_err(fail));
        let policy = policy_from_config(&(*config).0);
        match monte_carlo(&policy, &model, loss_db, f_target, trials, seed) {
            Ok(mc) => {
                *out = QmcPulseStats {
                    mean: mc.stats.mean,
                    rms: mc.stats.rms,
                    final_fidelity: mc.stats.final_fidelity,
                    levels: 0,
                    std_error: mc.std_error,
                };
                QmcStatus::Ok
            }
            Err(e) => {
                if let Error::Saturation { saturated, .. } = e.root() {
                    *out = QmcPulseStats {
                        final_fidelity: *saturated,
                        ..Default::default()
                    };
                }
                fail(e)
            }
        }
    })
}
