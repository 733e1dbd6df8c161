//! C ABI over the `svlasov` solver.
//!
//! A simulation is an opaque `SvSimulation*` created from a TOML
//! configuration string and released with `sv_simulation_free`. Every entry
//! point returns an `SvStatus`; on failure `sv_last_error_message` describes
//! the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use svlasov::config::SimulationConfig;
use svlasov::solver::{sample_increments, DomainMode, Simulation};
use svlasov::Error;

/// Status codes returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    NumericalAbort = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Diagnostics of the latest step. `has_potential` is 0 when the field has
/// no potential, in which case `potential` and `total` are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SvDiagnostics {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub momentum: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub half_width: f64,
    pub has_potential: i32,
    pub grew: i32,
}

/// Current mesh; the value table holds `nx * nv` doubles, position-major.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SvGridDims {
    pub nx: usize,
    pub nv: usize,
    pub length: f64,
    pub dx: f64,
    pub dv: f64,
    pub half_width: f64,
    pub step: usize,
    pub steps: usize,
}

/// Opaque simulation handle.
pub struct SvSimulation {
    sim: Simulation,
    steps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SvStatus {
    match e {
        Error::NonFinite { .. } => SvStatus::NumericalAbort,
        _ => SvStatus::ConfigError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SvStatus, String)>) -> SvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SvStatus::Panic
        }
    }
}

fn fail(e: Error) -> (SvStatus, String) {
    (status_of(&e), e.to_string())
}

const NULL: fn(&str) -> (SvStatus, String) = |what| (SvStatus::NullPointer, format!("{what} is null"));

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Create a simulation for sample `sample` (path seed `seed + sample`) of
/// the configuration in `config_toml`.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_simulation_new(
    config_toml: *const c_char,
    sample: u64,
    out: *mut *mut SvSimulation,
) -> SvStatus {
    guard(|| {
        if config_toml.is_null() {
            return Err(NULL("config_toml"));
        }
        if out.is_null() {
            return Err(NULL("out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(config_toml)
            .to_str()
            .map_err(|e| (SvStatus::InvalidUtf8, e.to_string()))?;
        let cfg = SimulationConfig::from_toml_str(text).map_err(fail)?;
        let inc = sample_increments(&cfg, sample).map_err(fail)?;
        let sim = Simulation::new(&cfg, inc, DomainMode::Adaptive).map_err(fail)?;
        *out = Box::into_raw(Box::new(SvSimulation { sim, steps: cfg.steps }));
        Ok(())
    })
}

/// Advance one step. `advanced` receives 1, or 0 when the run was already
/// complete.
///
/// # Safety
/// `handle` must come from `sv_simulation_new`; `advanced` may be null.
#[no_mangle]
pub unsafe extern "C" fn sv_simulation_step(handle: *mut SvSimulation, advanced: *mut i32) -> SvStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| NULL("handle"))?;
        let more = h.sim.step().map_err(fail)?;
        if let Some(a) = advanced.as_mut() {
            *a = i32::from(more);
        }
        Ok(())
    })
}

/// Step until the final time.
///
/// # Safety
/// `handle` must come from `sv_simulation_new`.
#[no_mangle]
pub unsafe extern "C" fn sv_simulation_run(handle: *mut SvSimulation) -> SvStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| NULL("handle"))?;
        while h.sim.step().map_err(fail)? {}
        Ok(())
    })
}

/// Diagnostics after the latest step (the initial record before any step).
///
/// # Safety
/// `handle` must come from `sv_simulation_new`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sv_simulation_diagnostics(handle: *const SvSimulation, out: *mut SvDiagnostics) -> SvStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| NULL("handle"))?;
        let out = out.as_mut().ok_or_else(|| NULL("out"))?;
        let d = h.sim.diagnostics().last().expect("initial record");
        *out = SvDiagnostics {
            t: d.t,
            mass: d.mass,
            l1: d.l1,
            l2: d.l2,
            momentum: d.momentum,
            kinetic: d.kinetic,
            potential: d.potential.unwrap_or(f64::NAN),
            total: d.total.unwrap_or(f64::NAN),
            half_width: d.half_width,
            has_potential: i32::from(d.potential.is_some()),
            grew: i32::from(d.grew),
        };
        Ok(())
    })
}

/// Current mesh dimensions and step counters.
///
/// # Safety
/// `handle` must come from `sv_simulation_new`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sv_simulation_grid(handle: *const SvSimulation, out: *mut SvGridDims) -> SvStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| NULL("handle"))?;
        let out = out.as_mut().ok_or_else(|| NULL("out"))?;
        let g = h.sim.density().grid();
        *out = SvGridDims {
            nx: g.nx(),
            nv: g.nv(),
            length: g.length(),
            dx: g.dx(),
            dv: g.dv(),
            half_width: g.half_width(),
            step: h.sim.step_index(),
            steps: h.steps,
        };
        Ok(())
    })
}

/// Copy the `nx * nv` nodal values into `buf` (capacity `len` doubles).
///
/// # Safety
/// `handle` must come from `sv_simulation_new`; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sv_simulation_copy_values(handle: *const SvSimulation, buf: *mut f64, len: usize) -> SvStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| NULL("handle"))?;
        if buf.is_null() {
            return Err(NULL("buf"));
        }
        let values = h.sim.density().values();
        if len < values.len() {
            return Err((SvStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", values.len())));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Release a simulation. Null is ignored.
///
/// # Safety
/// `handle` must come from `sv_simulation_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sv_simulation_free(handle: *mut SvSimulation) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
