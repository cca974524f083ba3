use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use pqc_ffi::*;

fn last_error() -> String {
    let p = pqc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn report_json(r: *const PqcReport) -> serde_json::Value {
    let s = unsafe { CStr::from_ptr(pqc_report_json(r)) };
    serde_json::from_str(s.to_str().unwrap()).unwrap()
}

#[test]
fn circuit_round_trip_and_amplitude() {
    let src = CString::new("qubits 3\nH 0\nT 1\nCNOT 1 2\nS 2\n").unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(pqc_circuit_parse(src.as_ptr(), &mut c), PqcStatus::Ok);
        assert_eq!(pqc_circuit_num_qubits(c), 3);
        let alpha = CString::new("010").unwrap();
        let (mut a, mut b, mut x, mut y) = (0.0, 0.0, 0.0, 0.0);
        assert_eq!(
            pqc_amplitude(c, alpha.as_ptr(), &mut a, &mut b, &mut x, &mut y),
            PqcStatus::Ok
        );
        assert!((a - x).abs() < 1e-9 && (b - y).abs() < 1e-9);
        assert!(pqc_last_error_message().is_null());
        pqc_circuit_free(c);
    }
}

#[test]
fn parse_errors_set_message() {
    let src = CString::new("qubits 2\nH 7\n").unwrap();
    let mut c = ptr::null_mut();
    let st = unsafe { pqc_circuit_parse(src.as_ptr(), &mut c) };
    assert_eq!(st, PqcStatus::Parse);
    assert!(c.is_null());
    assert!(last_error().contains("line 2"));
}

#[test]
fn null_and_bad_arguments() {
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { pqc_circuit_parse(ptr::null(), &mut c) },
        PqcStatus::NullPointer
    );
    assert!(last_error().contains("src"));

    let src = CString::new("qubits 2\n").unwrap();
    unsafe {
        assert_eq!(pqc_circuit_parse(src.as_ptr(), &mut c), PqcStatus::Ok);
        let alpha = CString::new("0").unwrap();
        let st = pqc_amplitude(
            c,
            alpha.as_ptr(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(st, PqcStatus::InvalidArgument);
        pqc_circuit_free(c);
        pqc_circuit_free(ptr::null_mut());
    }

    let bad = [0x71u8, 0xff, 0];
    let st = unsafe { pqc_circuit_parse(bad.as_ptr().cast(), &mut c) };
    assert_eq!(st, PqcStatus::InvalidUtf8);

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { pqc_search(ptr::null(), 0, &mut r) }, PqcStatus::NullPointer);
    assert!(!unsafe { pqc_report_pass(ptr::null()) });
    assert!(unsafe { pqc_report_json(ptr::null()) }.is_null());
}

#[test]
fn lindblad_report() {
    let src = CString::new("qubits 1\n1 X\n1 Z\n").unwrap();
    let mut h = ptr::null_mut();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(pqc_hamiltonian_parse(src.as_ptr(), &mut h), PqcStatus::Ok);
        assert_eq!(pqc_lindblad(h, 3.0, -1.0, &mut r), PqcStatus::InvalidArgument);
        assert_eq!(pqc_lindblad(h, 3.0, 1e-3, &mut r), PqcStatus::Ok);
        assert!(pqc_report_pass(r));
        let v = report_json(r);
        let exact = 2.0 - std::f64::consts::SQRT_2;
        assert!((v["decay_rate_exact"].as_f64().unwrap() - exact).abs() < 1e-12);
        pqc_report_free(r);
        pqc_hamiltonian_free(h);
    }
}

#[test]
fn search_and_gates() {
    let target = CString::new("101100").unwrap();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(pqc_search(target.as_ptr(), 3, &mut r), PqcStatus::Ok);
        assert!(pqc_report_pass(r));
        assert_eq!(report_json(r)["found"], "101100");
        pqc_report_free(r);

        assert_eq!(pqc_verify_gates(0.0, &mut r), PqcStatus::Ok);
        assert!(pqc_report_pass(r));
        assert_eq!(report_json(r)["gates"].as_array().unwrap().len(), 10);
        pqc_report_free(r);

        assert_eq!(pqc_verify_gates(1e-20, &mut r), PqcStatus::Ok);
        assert!(!pqc_report_pass(r));
        pqc_report_free(r);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(pqc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_exports_and_compiles() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/pqc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "pqc_last_error_message",
        "pqc_circuit_parse",
        "pqc_amplitude",
        "pqc_hamiltonian_parse",
        "pqc_lindblad",
        "pqc_search",
        "pqc_verify_gates",
        "pqc_run_all",
        "pqc_report_json",
        "pqc_report_free",
    ] {
        assert!(text.contains(&format!("{f}(")), "{f} missing from header");
    }
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    else {
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
