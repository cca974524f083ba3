//! C ABI over `pqc-core`.
//!
//! Every fallible call returns a [`PqcStatus`]; on failure the message is
//! kept per thread and read back with [`pqc_last_error_message`]. Handles
//! are opaque and released with their matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pqc_core::algebra::BitString;
use pqc_core::circuit::{parse_circuit, Circuit};
use pqc_core::lindblad::{parse_hamiltonian, PauliHamiltonian};
use pqc_core::runner::{
    amplitude_pipeline, cmd_all, cmd_lindblad, cmd_search, cmd_verify_gates, OutputFormat, RunConfig,
};
use pqc_core::PqcError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Compute = 5,
    Panic = 6,
}

/// A parsed Clifford+T circuit.
pub struct PqcCircuit(Circuit);

/// A parsed stabilizer Hamiltonian.
pub struct PqcHamiltonian(PauliHamiltonian);

/// A finished run: pass flag plus its rendered report.
pub struct PqcReport {
    pass: bool,
    text: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(PqcStatus, String);

impl From<PqcError> for Fail {
    fn from(e: PqcError) -> Self {
        let status = match e {
            PqcError::Parse { .. } => PqcStatus::Parse,
            PqcError::Dimension(_) | PqcError::Size { .. } | PqcError::UnsupportedPhase(_) => {
                PqcStatus::InvalidArgument
            }
            _ => PqcStatus::Compute,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PqcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PqcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside pqc");
            PqcStatus::Panic
        }
    }
}

fn null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(PqcStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(PqcStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn report(pass: bool, body: String, out: *mut *mut PqcReport) -> Result<(), Fail> {
    let text = CString::new(body).map_err(|e| Fail(PqcStatus::Compute, e.to_string()))?;
    unsafe { *out = Box::into_raw(Box::new(PqcReport { pass, text })) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pqc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn pqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `src` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_circuit_parse(src: *const c_char, out: *mut *mut PqcCircuit) -> PqcStatus {
    guard(|| {
        null(out, "out")?;
        let c = parse_circuit(text(src, "src")?)?;
        *out = Box::into_raw(Box::new(PqcCircuit(c)));
        Ok(())
    })
}

/// # Safety
/// `circuit` must come from [`pqc_circuit_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn pqc_circuit_free(circuit: *mut PqcCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// Qubit count, or 0 for a null handle.
///
/// # Safety
/// `circuit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pqc_circuit_num_qubits(circuit: *const PqcCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.0.num_qubits())
}

/// `<alpha| H^n U |0^n>` through the Pauli pipeline, with the statevector
/// value alongside. Any output pointer may be null.
///
/// # Safety
/// `circuit` must be a live handle, `alpha` a NUL-terminated bit string.
#[no_mangle]
pub unsafe extern "C" fn pqc_amplitude(
    circuit: *const PqcCircuit,
    alpha: *const c_char,
    pqc_re: *mut f64,
    pqc_im: *mut f64,
    oracle_re: *mut f64,
    oracle_im: *mut f64,
) -> PqcStatus {
    guard(|| {
        null(circuit, "circuit")?;
        let alpha: BitString = text(alpha, "alpha")?.parse()?;
        let (pqc, oracle, ..) = amplitude_pipeline(&(*circuit).0, &alpha)?;
        for (p, v) in [
            (pqc_re, pqc.re),
            (pqc_im, pqc.im),
            (oracle_re, oracle.re),
            (oracle_im, oracle.im),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `src` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_hamiltonian_parse(src: *const c_char, out: *mut *mut PqcHamiltonian) -> PqcStatus {
    guard(|| {
        null(out, "out")?;
        let h = parse_hamiltonian(text(src, "src")?)?;
        *out = Box::into_raw(Box::new(PqcHamiltonian(h)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`pqc_hamiltonian_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn pqc_hamiltonian_free(h: *mut PqcHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Integrates the block Lindbladian to `t_max` with step `dt`.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_lindblad(
    h: *const PqcHamiltonian,
    t_max: f64,
    dt: f64,
    out: *mut *mut PqcReport,
) -> PqcStatus {
    guard(|| {
        null(h, "hamiltonian")?;
        null(out, "out")?;
        if !(dt > 0.0 && t_max > 0.0) {
            return Err(Fail(PqcStatus::InvalidArgument, "dt and t_max must be positive".into()));
        }
        let cfg = RunConfig {
            dt,
            t_max,
            ..RunConfig::default()
        };
        let (s, _) = cmd_lindblad(&(*h).0, &cfg, None)?;
        report(s.pass, s.render(OutputFormat::Json), out)
    })
}

/// Recovers the planted bit string `target`.
///
/// # Safety
/// `target` must be a NUL-terminated bit string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_search(target: *const c_char, seed: u64, out: *mut *mut PqcReport) -> PqcStatus {
    guard(|| {
        null(out, "out")?;
        let t: BitString = text(target, "target")?.parse()?;
        let cfg = RunConfig {
            seed,
            ..RunConfig::default()
        };
        let r = cmd_search(&t, &cfg)?;
        report(r.pass, r.render(OutputFormat::Json), out)
    })
}

/// Checks the gate library. A non-positive `tolerance` keeps the default.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_verify_gates(tolerance: f64, out: *mut *mut PqcReport) -> PqcStatus {
    guard(|| {
        null(out, "out")?;
        let cfg = RunConfig {
            tolerance: (tolerance > 0.0).then_some(tolerance),
            ..RunConfig::default()
        };
        let r = cmd_verify_gates(&cfg);
        report(r.pass, r.render(OutputFormat::Json), out)
    })
}

/// Runs every numbered check.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqc_run_all(seed: u64, out: *mut *mut PqcReport) -> PqcStatus {
    guard(|| {
        null(out, "out")?;
        let cfg = RunConfig {
            seed,
            ..RunConfig::default()
        };
        let r = cmd_all(&cfg);
        report(r.pass, r.to_json(), out)
    })
}

/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pqc_report_pass(r: *const PqcReport) -> bool {
    r.as_ref().is_some_and(|r| r.pass)
}

/// JSON text owned by the report; null for a null handle.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pqc_report_json(r: *const PqcReport) -> *const c_char {
    r.as_ref().map_or(std::ptr::null(), |r| r.text.as_ptr())
}

/// # Safety
/// `r` must come from one of the report-producing calls or be null.
#[no_mangle]
pub unsafe extern "C" fn pqc_report_free(r: *mut PqcReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
