//! C ABI over the `fsistab` solver.
//!
//! Models are opaque handles created from config text and released with
//! [`fsi_model_free`]. Every fallible call returns an [`FsiStatus`]; on failure
//! the message is kept per thread and read with [`fsi_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use fsistab::config::{parse_config, RunConfig};
use fsistab::evolve::{evolve, EvolveOptions};
use fsistab::run::{run_subcommand, Model, Subcommand};
use fsistab::FsiError;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or out-of-range configuration.
    Config = 3,
    /// A solve, step or analysis failed.
    Numerical = 4,
    /// The run completed but its check did not pass.
    CheckFailed = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 8,
}

/// Opaque model handle.
pub struct FsiModel {
    config: RunConfig,
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &FsiError) -> FsiStatus {
    match err {
        FsiError::Io(_) => FsiStatus::Io,
        e if e.is_validation() => FsiStatus::Config,
        _ => FsiStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (FsiStatus, String)>) -> FsiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FsiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FsiStatus::Panic
        }
    }
}

fn lift<T>(r: fsistab::Result<T>) -> Result<T, (FsiStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FsiStatus, String)> {
    if p.is_null() {
        return Err((FsiStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FsiStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn model_ref<'a>(m: *const FsiModel) -> Result<&'a FsiModel, (FsiStatus, String)> {
    m.as_ref().ok_or((FsiStatus::NullPointer, "model handle is null".to_string()))
}

fn null_out(what: &str) -> (FsiStatus, String) {
    (FsiStatus::NullPointer, format!("{what} is null"))
}

/// Builds a model from `key = value` config text. On success `*out` owns the
/// new handle.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_new(config: *const c_char, out: *mut *mut FsiModel) -> FsiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(config, "config")?;
        let config = lift(parse_config(text))?;
        let model = lift(Model::build(&config))?;
        *out = Box::into_raw(Box::new(FsiModel { config, model }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`fsi_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_free(model: *mut FsiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of unknowns of the reduced generator.
///
/// # Safety
/// `model` must be a live handle and `order` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_order(model: *const FsiModel, order: *mut usize) -> FsiStatus {
    guard(|| {
        let m = model_ref(model)?;
        let order = order.as_mut().ok_or_else(|| null_out("order"))?;
        *order = m.model.generator.order();
        Ok(())
    })
}

/// `‖A n0‖_H / ‖n0‖_H` for the model's generator.
///
/// # Safety
/// `model` must be a live handle and `residual` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fsi_null_residual(model: *const FsiModel, residual: *mut f64) -> FsiStatus {
    guard(|| {
        let m = model_ref(model)?;
        let residual = residual.as_mut().ok_or_else(|| null_out("residual"))?;
        *residual = lift(m.model.null.residual(&m.model.calc, &m.model.generator))?;
        Ok(())
    })
}

/// Evolves the configured initial data over the configured horizon and
/// writes the energy at every step, `E(0)` first. `*written` receives the
/// sample count, `T/dt + 1`; when `capacity` is smaller nothing is copied and
/// [`FsiStatus::BufferTooSmall`] is returned with `*written` set, so a caller
/// may pass a null buffer with zero capacity to query the size.
///
/// # Safety
/// `model` must be a live handle, `written` a valid pointer and `energy`
/// valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn fsi_evolve_energy(
    model: *const FsiModel,
    energy: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> FsiStatus {
    guard(|| {
        let m = model_ref(model)?;
        let written = written.as_mut().ok_or_else(|| null_out("written"))?;
        let cfg = &m.config;
        let need = lift(fsistab::evolve::step_count(cfg.dt, cfg.t_final))? + 1;
        *written = need;
        if capacity < need {
            return Err((FsiStatus::BufferTooSmall, format!("need {need} slots, got {capacity}")));
        }
        if energy.is_null() {
            return Err(null_out("energy"));
        }
        let mm = &m.model;
        let s0 = lift(mm.initial_state(cfg))?;
        let opts = EvolveOptions { dt: cfg.dt, t_final: cfg.t_final, stride: usize::MAX };
        let ev = lift(evolve(&mm.calc, &mm.ambient, &mm.generator, &s0, opts))?;
        std::slice::from_raw_parts_mut(energy, need).copy_from_slice(&ev.trace.energy);
        Ok(())
    })
}

/// Runs a CLI subcommand (`simulate`, `spectrum`, `nullspace`, `decay`,
/// `diagnose`, `selftest`) with config text, writing artifacts under
/// `out_dir` when it is not null.
///
/// # Safety
/// `name` and `config` must be NUL-terminated strings; `out_dir` may be null.
#[no_mangle]
pub unsafe extern "C" fn fsi_run(name: *const c_char, config: *const c_char, out_dir: *const c_char) -> FsiStatus {
    guard(|| {
        let cmd: Subcommand = lift(read_str(name, "name")?.parse())?;
        let mut cfg = lift(parse_config(read_str(config, "config")?))?;
        if !out_dir.is_null() {
            cfg.out = PathBuf::from(read_str(out_dir, "out_dir")?);
        }
        let outcome = lift(run_subcommand(cmd, &cfg))?;
        if outcome.pass {
            Ok(())
        } else {
            Err((FsiStatus::CheckFailed, format!("{cmd}: check failed")))
        }
    })
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fsi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fsi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
