//! C ABI for the travelwave solvers.
//!
//! Experiments are described by the same TOML text the command-line tool
//! reads and are held behind opaque handles. Every fallible function returns
//! a [`TwStatus`]; on failure a description is available from
//! [`tw_last_error`] on the calling thread. Handles are freed with their
//! matching `*_free` function; passing null to a free function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use travelwave::cli::{self, ExperimentConfig};
use travelwave::iterate::{self, IterationTrace, PetviashviliMap, Termination};
use travelwave::models::{initial_guess, Model};
use travelwave::spectrum::{self, EigenOptions};
use travelwave::Error;

/// Result codes of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Invalid configuration, grid or initial guess.
    Config = 3,
    /// A buffer length does not match the state dimension.
    LengthMismatch = 4,
    /// A solver, extrapolation or eigensolver failure.
    Numerical = 5,
    Io = 6,
    IndexOutOfRange = 7,
    /// A panic was caught at the boundary; the handle should be discarded.
    Panic = 8,
}

/// Why an iteration stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwTermination {
    Converged = 0,
    MaxIters = 1,
    Diverged = 2,
    NumericalBreakdown = 3,
}

impl From<Termination> for TwTermination {
    fn from(t: Termination) -> Self {
        match t {
            Termination::Converged => TwTermination::Converged,
            Termination::MaxIters => TwTermination::MaxIters,
            Termination::Diverged => TwTermination::Diverged,
            Termination::NumericalBreakdown => TwTermination::NumericalBreakdown,
        }
    }
}

/// Which linearized map [`tw_experiment_spectrum`] analyses.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwOperator {
    /// `L^{-1} N'(u)`, the linearization of the plain fixed-point map.
    Classical = 0,
    /// The linearization of the configured stabilized stepper.
    Stabilized = 1,
}

/// One trace row.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwTraceRow {
    pub iter: usize,
    pub res: f64,
    pub diff: f64,
    pub sfe: f64,
    pub seconds: f64,
}

/// Totals of a finished solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwSummary {
    pub iterations: usize,
    pub final_res: f64,
    pub reason: TwTermination,
    /// Nonzero when Anderson mixing reported an ill-conditioned system.
    pub ill_conditioned: u8,
}

/// A parsed configuration together with its discretized model.
pub struct TwExperiment {
    config: ExperimentConfig,
    model: Box<dyn Model>,
}

/// A finished solve: the trace and the final state.
pub struct TwSolution {
    trace: IterationTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(TwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config { .. } | Error::InvalidGrid(_) | Error::IncompatibleKind { .. } => TwStatus::Config,
            Error::LengthMismatch { .. } | Error::DimensionMismatch(_) => TwStatus::LengthMismatch,
            Error::Io(_) => TwStatus::Io,
            _ => TwStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TwStatus::NullPointer, format!("`{what}` is null"))
}

/// Run `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            TwStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {message}"));
            TwStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes a handle from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller guarantees `len` readable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller guarantees `len` writable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn check_len(expected: usize, got: usize) -> Result<(), Failure> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got }.into())
    }
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: `out` is non-null and points to writable storage for a `T`.
    unsafe { out.write(value) };
    Ok(())
}

/// Description of the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn tw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn tw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a TOML experiment description and build its model.
///
/// # Safety
/// `toml` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_experiment_from_toml(toml: *const c_char, out: *mut *mut TwExperiment) -> TwStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        // SAFETY: checked non-null; the caller guarantees nul termination.
        let text = unsafe { CStr::from_ptr(toml) }
            .to_str()
            .map_err(|e| Failure(TwStatus::InvalidUtf8, e.to_string()))?;
        let config = ExperimentConfig::from_toml(text)?;
        let model = config.build_model()?;
        let handle = Box::into_raw(Box::new(TwExperiment { config, model }));
        // SAFETY: `out` is checked by `write_out`.
        unsafe { write_out(out, handle, "out") }.inspect_err(|_| {
            // SAFETY: `handle` came from `Box::into_raw` just above.
            drop(unsafe { Box::from_raw(handle) });
        })
    })
}

/// # Safety
/// `exp` must be null or a handle from [`tw_experiment_from_toml`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn tw_experiment_free(exp: *mut TwExperiment) {
    if !exp.is_null() {
        // SAFETY: see the function contract.
        drop(unsafe { Box::from_raw(exp) });
    }
}

/// Length of a state vector of the experiment's model.
///
/// # Safety
/// `exp` must be a live experiment handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_experiment_dim(exp: *const TwExperiment, out: *mut usize) -> TwStatus {
    guard(|| {
        let exp = unsafe { as_ref(exp, "exp") }?;
        unsafe { write_out(out, exp.model.dim(), "out") }
    })
}

/// Write the configured initial guess into `buf` (length `len`).
///
/// # Safety
/// `exp` must be a live experiment handle and `buf` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tw_experiment_initial_guess(exp: *const TwExperiment, buf: *mut f64, len: usize) -> TwStatus {
    guard(|| {
        let exp = unsafe { as_ref(exp, "exp") }?;
        let buf = unsafe { slice_mut(buf, len, "buf") }?;
        check_len(exp.model.dim(), len)?;
        buf.copy_from_slice(&initial_guess(&exp.config.guess, exp.model.as_ref())?);
        Ok(())
    })
}

/// `||L u - N(u)||` at `state`.
///
/// # Safety
/// `exp` must be a live experiment handle, `state` hold `len` doubles and
/// `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_experiment_residual(
    exp: *const TwExperiment,
    state: *const f64,
    len: usize,
    out: *mut f64,
) -> TwStatus {
    guard(|| {
        let exp = unsafe { as_ref(exp, "exp") }?;
        let state = unsafe { slice(state, len, "state") }?;
        check_len(exp.model.dim(), len)?;
        unsafe { write_out(out, exp.model.residual_norm(state), "out") }
    })
}

fn finish(trace: IterationTrace, out: *mut *mut TwSolution) -> Result<(), Failure> {
    let handle = Box::into_raw(Box::new(TwSolution { trace }));
    // SAFETY: `out` is checked by `write_out`.
    unsafe { write_out(out, handle, "out") }.inspect_err(|_| {
        // SAFETY: `handle` came from `Box::into_raw` just above.
        drop(unsafe { Box::from_raw(handle) });
    })
}

/// Solve from the configured initial guess with the configured accelerator.
/// A run that stops without converging still succeeds; inspect its summary.
///
/// # Safety
/// `exp` must be a live experiment handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_experiment_solve(exp: *const TwExperiment, out: *mut *mut TwSolution) -> TwStatus {
    guard(|| {
        let exp = unsafe { as_ref(exp, "exp") }?;
        let outcome = cli::solve_with(&exp.config, exp.model.as_ref(), &exp.config.accel)?;
        finish(outcome.trace, out)
    })
}

/// Solve from the caller's initial iterate `u0` (length `len`).
///
/// # Safety
/// `exp` must be a live experiment handle, `u0` hold `len` doubles and `out`
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_experiment_solve_from(
    exp: *const TwExperiment,
    u0: *const f64,
    len: usize,
    out: *mut *mut TwSolution,
) -> TwStatus {
    guard(|| {
        let exp = unsafe { as_ref(exp, "exp") }?;
        let u0 = unsafe { slice(u0, len, "u0") }?;
        check_len(exp.model.dim(), len)?;
        let cfg = &exp.config;
        let mut map = PetviashviliMap::new(exp.model.as_ref(), cfg.solver.stepper);
        if let Some(e) = &cfg.solver.exponents {
            map = map.with_exponents(e.clone())?;
        }
        let trace = iterate::run(u0, &map, &cfg.stopping, &cfg.accel.to_acceleration(cfg.seed))?;
        finish(trace, out)
    })
}

/// Leading `count` eigenvalues (by modulus) of a linearized map at `state`,
/// written as real parts to `re` and imaginary parts to `im`.
///
/// # Safety
/// `exp` must be a live experiment handle, `state` hold `len` doubles and
/// `re`, `im` hold `count` doubles each.
#[no_mangle]
pub unsafe extern "C" fn tw_experiment_spectrum(
    exp: *const TwExperiment,
    state: *const f64,
    len: usize,
    which: TwOperator,
    count: usize,
    re: *mut f64,
    im: *mut f64,
) -> TwStatus {
    guard(|| {
        let exp = unsafe { as_ref(exp, "exp") }?;
        let state = unsafe { slice(state, len, "state") }?;
        let re = unsafe { slice_mut(re, count, "re") }?;
        let im = unsafe { slice_mut(im, count, "im") }?;
        check_len(exp.model.dim(), len)?;
        let opts = EigenOptions {
            count,
            seed: exp.config.seed,
            ..Default::default()
        };
        let report = match which {
            TwOperator::Classical => spectrum::classical_spectrum(exp.model.as_ref(), state, &opts)?,
            TwOperator::Stabilized => {
                let map = PetviashviliMap::new(exp.model.as_ref(), exp.config.solver.stepper);
                spectrum::petviashvili_spectrum(&map, state, &opts)?
            }
        };
        for (k, z) in report.eigenvalues.iter().enumerate().take(count) {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn tw_solution_free(sol: *mut TwSolution) {
    if !sol.is_null() {
        // SAFETY: see the function contract.
        drop(unsafe { Box::from_raw(sol) });
    }
}

/// # Safety
/// `sol` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_solution_summary(sol: *const TwSolution, out: *mut TwSummary) -> TwStatus {
    guard(|| {
        let t = &unsafe { as_ref(sol, "sol") }?.trace;
        let summary = TwSummary {
            iterations: t.iterations(),
            final_res: t.final_res(),
            reason: t.reason.into(),
            ill_conditioned: u8::from(t.ill_conditioned),
        };
        unsafe { write_out(out, summary, "out") }
    })
}

/// Number of trace rows (iterations plus the initial row).
///
/// # Safety
/// `sol` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_solution_row_count(sol: *const TwSolution, out: *mut usize) -> TwStatus {
    guard(|| {
        let t = &unsafe { as_ref(sol, "sol") }?.trace;
        unsafe { write_out(out, t.rows.len(), "out") }
    })
}

/// # Safety
/// `sol` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_solution_row(sol: *const TwSolution, index: usize, out: *mut TwTraceRow) -> TwStatus {
    guard(|| {
        let t = &unsafe { as_ref(sol, "sol") }?.trace;
        let r = t
            .rows
            .get(index)
            .ok_or_else(|| Failure(TwStatus::IndexOutOfRange, format!("row {index} of {}", t.rows.len())))?;
        let row = TwTraceRow {
            iter: r.iter,
            res: r.res,
            diff: r.diff,
            sfe: r.sfe,
            seconds: r.seconds,
        };
        unsafe { write_out(out, row, "out") }
    })
}

/// Copy the final state into `buf` (length `len`).
///
/// # Safety
/// `sol` must be a live solution handle and `buf` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tw_solution_state(sol: *const TwSolution, buf: *mut f64, len: usize) -> TwStatus {
    guard(|| {
        let t = &unsafe { as_ref(sol, "sol") }?.trace;
        let buf = unsafe { slice_mut(buf, len, "buf") }?;
        check_len(t.state.len(), len)?;
        buf.copy_from_slice(&t.state);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_status_codes() {
        let f: Failure = Error::InvalidGrid("x".into()).into();
        assert_eq!(f.0, TwStatus::Config);
        let f: Failure = Error::LengthMismatch { expected: 1, got: 2 }.into();
        assert_eq!(f.0, TwStatus::LengthMismatch);
        let f: Failure = Error::Breakdown("x".into()).into();
        assert_eq!(f.0, TwStatus::Numerical);
    }

    #[test]
    fn panics_are_caught() {
        assert_eq!(guard(|| panic!("boom")), TwStatus::Panic);
        let msg = unsafe { CStr::from_ptr(tw_last_error()) }.to_str().unwrap().to_string();
        assert_eq!(msg, "panic: boom");
        assert_eq!(guard(|| Ok(())), TwStatus::Ok);
        assert!(unsafe { CStr::from_ptr(tw_last_error()) }.to_bytes().is_empty());
    }
}
