//! C interface to the `lowmach` solver.
//!
//! Simulations are opaque [`LmSimulation`] handles. Every fallible call
//! returns an [`LmStatus`]; on failure the message is kept per thread and
//! can be fetched with [`lm_last_error_message`]. Field data is exchanged
//! through caller-owned `double` buffers, cell `i` fastest.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lowmach::cases::CaseRegistry;
use lowmach::config::CaseConfig;
use lowmach::integrators::{euler_tableau, heun2_tableau, heun3_tableau, rk4_tableau};
use lowmach::run::Simulation;
use lowmach::stability::{ab_polys, advection_spectrum, max_cfl, StabilityMethod};
use lowmach::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    /// The state lost positivity; the handle keeps the last valid state.
    Breakdown = 4,
    Io = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Opaque simulation handle.
pub struct LmSimulation {
    sim: Simulation,
    config: CaseConfig,
    breakdown_cell: Option<(usize, usize)>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> LmStatus {
    match e {
        Error::Io(_) => LmStatus::Io,
        e if e.is_breakdown() => LmStatus::Breakdown,
        _ => LmStatus::Config,
    }
}

fn fail(status: LmStatus, msg: impl Into<String>) -> LmStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> LmStatus) -> LmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == LmStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(LmStatus::Internal, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, LmStatus> {
    if p.is_null() {
        return Err(fail(LmStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(sim: *mut LmSimulation) -> Result<&'a mut LmSimulation, LmStatus> {
    sim.as_mut()
        .ok_or_else(|| fail(LmStatus::NullPointer, "simulation handle is null"))
}

fn create(cfg: CaseConfig, out: *mut *mut LmSimulation) -> LmStatus {
    let registry = CaseRegistry::builtin();
    match Simulation::new(&cfg, &registry) {
        Ok(sim) => {
            let boxed = Box::new(LmSimulation {
                sim,
                config: cfg,
                breakdown_cell: None,
            });
            unsafe { *out = Box::into_raw(boxed) };
            LmStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Copy the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len` bytes. Returns the full
/// message length without the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create a simulation from INI text that names its case in `[case]`.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_new(config: *const c_char, out: *mut *mut LmSimulation) -> LmStatus {
    guard(|| {
        if out.is_null() {
            return fail(LmStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let text = match str_arg(config, "config") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match CaseRegistry::builtin().config_from_str(text) {
            Ok(cfg) => create(cfg, out),
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Create a simulation of a built-in case with its default settings.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_new_case(
    name: *const c_char,
    out: *mut *mut LmSimulation,
) -> LmStatus {
    guard(|| {
        if out.is_null() {
            return fail(LmStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let name = match str_arg(name, "name") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match CaseRegistry::builtin().default_config(name) {
            Ok(cfg) => create(cfg, out),
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from `lm_simulation_new*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_free(sim: *mut LmSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Grid size in cells.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_size(
    sim: *mut LmSimulation,
    ni: *mut usize,
    nj: *mut usize,
) -> LmStatus {
    guard(|| {
        let h = match handle(sim) {
            Ok(h) => h,
            Err(s) => return s,
        };
        if ni.is_null() || nj.is_null() {
            return fail(LmStatus::NullPointer, "output pointer is null");
        }
        *ni = h.sim.grid().ni;
        *nj = h.sim.grid().nj;
        LmStatus::Ok
    })
}

/// Current simulation time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_time(sim: *const LmSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |h| h.sim.time())
}

/// CFL-limited step for the current state.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_stable_dt(sim: *mut LmSimulation, dt: *mut f64) -> LmStatus {
    guard(|| {
        let h = match handle(sim) {
            Ok(h) => h,
            Err(s) => return s,
        };
        if dt.is_null() {
            return fail(LmStatus::NullPointer, "dt is null");
        }
        *dt = h.sim.stable_dt();
        LmStatus::Ok
    })
}

fn record(h: &mut LmSimulation, e: Error) -> LmStatus {
    h.breakdown_cell = e.breakdown_cell();
    fail(status_of(&e), format!("t = {}: {e}", h.sim.time()))
}

/// Advance by one step of length `dt`.
///
/// # Safety
/// `sim` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_step(sim: *mut LmSimulation, dt: f64) -> LmStatus {
    guard(|| {
        let h = match handle(sim) {
            Ok(h) => h,
            Err(s) => return s,
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return fail(
                LmStatus::InvalidArgument,
                format!("dt must be positive, got {dt}"),
            );
        }
        match h.sim.step(dt) {
            Ok(_) => LmStatus::Ok,
            Err(e) => record(h, e),
        }
    })
}

/// Advance with CFL-controlled steps until `t_end`, or until the density
/// change rate drops below the configured steady tolerance.
///
/// # Safety
/// `sim` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_advance(sim: *mut LmSimulation, t_end: f64) -> LmStatus {
    guard(|| {
        let h = match handle(sim) {
            Ok(h) => h,
            Err(s) => return s,
        };
        if !t_end.is_finite() {
            return fail(LmStatus::InvalidArgument, "t_end must be finite");
        }
        let tol = h.config.time.steady_tol;
        match h.sim.advance_to(t_end, tol, |_, _| Ok(false)) {
            Ok(_) => LmStatus::Ok,
            Err(e) => record(h, e),
        }
    })
}

/// Cell of the last breakdown on this handle.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_breakdown_cell(
    sim: *mut LmSimulation,
    i: *mut usize,
    j: *mut usize,
) -> LmStatus {
    guard(|| {
        let h = match handle(sim) {
            Ok(h) => h,
            Err(s) => return s,
        };
        if i.is_null() || j.is_null() {
            return fail(LmStatus::NullPointer, "output pointer is null");
        }
        match h.breakdown_cell {
            Some((a, b)) => {
                *i = a;
                *j = b;
                LmStatus::Ok
            }
            None => fail(LmStatus::InvalidArgument, "no breakdown recorded"),
        }
    })
}

unsafe fn fill(
    buf: *mut f64,
    len: usize,
    rows: impl ExactSizeIterator<Item = [f64; 4]>,
    width: usize,
) -> LmStatus {
    let need = rows.len() * width;
    if buf.is_null() {
        return fail(LmStatus::NullPointer, "buffer is null");
    }
    if len < need {
        return fail(
            LmStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {need}"),
        );
    }
    let out = std::slice::from_raw_parts_mut(buf, need);
    for (chunk, row) in out.chunks_exact_mut(width).zip(rows) {
        chunk.copy_from_slice(&row[..width]);
    }
    LmStatus::Ok
}

/// Write `rho, u, v, p` per cell into `buf`, which holds `len` doubles
/// (at least `4 * ni * nj`).
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_primitives(
    sim: *mut LmSimulation,
    buf: *mut f64,
    len: usize,
) -> LmStatus {
    guard(|| {
        let h = match handle(sim) {
            Ok(h) => h,
            Err(s) => return s,
        };
        fill(buf, len, h.sim.primitives().iter().map(|q| q.to_array()), 4)
    })
}

/// Write `x, y` per cell center into `buf` (at least `2 * ni * nj`).
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_cell_centers(
    sim: *mut LmSimulation,
    buf: *mut f64,
    len: usize,
) -> LmStatus {
    guard(|| {
        let h = match handle(sim) {
            Ok(h) => h,
            Err(s) => return s,
        };
        fill(
            buf,
            len,
            h.sim.grid().cell_centers.iter().map(|c| [c[0], c[1], 0.0, 0.0]),
            2,
        )
    })
}

/// Domain integrals of mass, x/y momentum and energy into `out[4]`.
///
/// # Safety
/// `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lm_simulation_totals(sim: *mut LmSimulation, out: *mut f64) -> LmStatus {
    guard(|| {
        let h = match handle(sim) {
            Ok(h) => h,
            Err(s) => return s,
        };
        fill(out, 4, std::iter::once(h.sim.totals()), 4)
    })
}

/// Largest stable step on the convex hull of the periodic advection
/// spectrum with upwind weight `eps` on `n` cells. `method` is one of
/// euler, heun2, heun3, rk4, ab1 .. ab5.
///
/// # Safety
/// `method` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_max_cfl(method: *const c_char, eps: f64, n: usize, out: *mut f64) -> LmStatus {
    guard(|| {
        let name = match str_arg(method, "method") {
            Ok(t) => t,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(LmStatus::NullPointer, "out is null");
        }
        if n < 3 || !eps.is_finite() {
            return fail(LmStatus::InvalidArgument, "need n >= 3 and finite eps");
        }
        let spectrum = advection_spectrum(n, eps);
        let rk = [euler_tableau(), heun2_tableau(), heun3_tableau(), rk4_tableau()];
        if let Some(tab) = rk.iter().find(|t| t.name == name) {
            *out = max_cfl(StabilityMethod::RungeKutta(tab), &spectrum);
            return LmStatus::Ok;
        }
        for k in 1..=5 {
            let polys = ab_polys(k).expect("orders 1 to 5 exist");
            if polys.label == name {
                *out = max_cfl(StabilityMethod::Multistep(&polys), &spectrum);
                return LmStatus::Ok;
            }
        }
        fail(LmStatus::InvalidArgument, format!("unknown method '{name}'"))
    })
}
