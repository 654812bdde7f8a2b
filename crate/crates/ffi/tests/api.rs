use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;
use transleak_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { tl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn transmon(ej: f64, n: usize) -> *mut TlTransmon {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { tl_transmon_new(ej, n, 0.0, &mut t) }, TlStatus::Ok);
    t
}

fn bath(kappa: f64, beta: f64) -> *mut TlBath {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { tl_bath_new(kappa, beta, 50.0, &mut b) }, TlStatus::Ok);
    b
}

#[test]
fn transmon_handle_round_trip() {
    let t = transmon(100.0, 4);
    let mut n = 0;
    let mut alpha = 0.0;
    let mut freqs = [0.0; 4];
    unsafe {
        assert_eq!(tl_transmon_n_levels(t, &mut n), TlStatus::Ok);
        assert_eq!(tl_transmon_anharmonicity(t, &mut alpha), TlStatus::Ok);
        assert_eq!(tl_transmon_frequencies(t, freqs.as_mut_ptr(), 4), TlStatus::Ok);
        tl_transmon_free(t);
    }
    assert_eq!(n, 4);
    assert_eq!(freqs[0], 0.0);
    assert!((freqs[1] - 1.0).abs() < 1e-12);
    assert!(alpha < 0.0 && (freqs[2] - freqs[1] - 1.0 - alpha).abs() < 1e-12);
}

#[test]
fn errors_are_reported_with_messages() {
    let mut t = ptr::null_mut();
    let s = unsafe { tl_transmon_new(100.0, 1, 0.0, &mut t) };
    assert_eq!(s, TlStatus::InvalidArgument);
    assert!(t.is_null());
    assert!(last_error().contains("n_levels"));

    let mut b = ptr::null_mut();
    assert_eq!(
        unsafe { tl_bath_new(0.1, -1.0, 50.0, &mut b) },
        TlStatus::InvalidArgument
    );
    assert!(last_error().contains("beta"));

    assert_eq!(
        unsafe { tl_transmon_n_levels(ptr::null(), ptr::null_mut()) },
        TlStatus::NullPointer
    );

    let t = transmon(100.0, 3);
    let mut small = [0.0; 2];
    assert_eq!(
        unsafe { tl_transmon_frequencies(t, small.as_mut_ptr(), 2) },
        TlStatus::BufferTooSmall
    );
    unsafe { tl_transmon_free(t) };
    // freeing null is a no-op
    unsafe {
        tl_transmon_free(ptr::null_mut());
        tl_bath_free(ptr::null_mut());
        tl_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn message_is_truncated_to_buffer() {
    let mut t = ptr::null_mut();
    unsafe { tl_transmon_new(-5.0, 3, 0.0, &mut t) };
    let mut buf = [0x7f as c_char; 8];
    let n = unsafe { tl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 7);
    assert_eq!(buf[7], 0);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 7);
}

#[test]
fn correlation_imaginary_part_has_closed_form() {
    let b = bath(0.2, 5.0);
    let (mut re, mut im) = (0.0, 0.0);
    let t = 0.03;
    assert_eq!(unsafe { tl_bath_correlation(b, t, &mut re, &mut im) }, TlStatus::Ok);
    unsafe { tl_bath_free(b) };
    let exact = -0.2 * 50f64.powi(3) * t * (-50.0 * t).exp() / 8.0;
    assert!((im - exact).abs() < 1e-7 * exact.abs());
    assert!(re > 0.0);
}

#[test]
fn lindblad_decay_through_the_c_interface() {
    let t = transmon(100.0, 3);
    let b = bath(0.01, 5.0);
    let mut tr = ptr::null_mut();
    let s = unsafe { tl_evolve(t, b, TlMethod::Lindblad, 1, 20.0, 0.01, 1, 0, 100, &mut tr) };
    assert_eq!(s, TlStatus::Ok);
    let mut len = 0;
    unsafe { tl_trajectory_len(tr, &mut len) };
    assert_eq!(len, 21);
    let mut times = vec![0.0; len];
    let mut p1 = vec![0.0; len];
    let mut se = vec![1.0; len];
    let (mut l_max, mut t_max) = (0.0, 0.0);
    unsafe {
        assert_eq!(tl_trajectory_times(tr, times.as_mut_ptr(), len), TlStatus::Ok);
        assert_eq!(tl_trajectory_population(tr, 1, p1.as_mut_ptr(), len), TlStatus::Ok);
        assert_eq!(
            tl_trajectory_population_stderr(tr, 1, se.as_mut_ptr(), len),
            TlStatus::Ok
        );
        assert_eq!(tl_trajectory_max_leakage(tr, &mut l_max, &mut t_max), TlStatus::Ok);
        assert_eq!(
            tl_trajectory_population(tr, 3, p1.as_mut_ptr(), len),
            TlStatus::InvalidArgument
        );
        tl_trajectory_free(tr);
        tl_bath_free(b);
        tl_transmon_free(t);
    }
    assert!((times[len - 1] - 20.0).abs() < 1e-9);
    assert!(se.iter().all(|&s| s == 0.0));
    // early-time decay at rate ~ kappa coth(beta/2)
    let rate = 0.01 / 2.5f64.tanh();
    assert!((p1[len - 1] - (-rate * 20.0f64).exp()).abs() < 5e-3);
    assert!(l_max > 0.0 && l_max < 0.01);
}

#[test]
fn not_gate_without_bath_is_accurate() {
    let t = transmon(100.0, 2);
    let b = bath(0.0, 10.0);
    let (mut f, mut l) = (0.0, 0.0);
    let omega = 0.02;
    let s = unsafe {
        tl_not_gate(
            t,
            b,
            TlMethod::VonNeumann,
            TlPulse::SimpleNot,
            omega,
            // ramps add area on top of the hold
            0.95 * std::f64::consts::PI / omega,
            0.02,
            &mut f,
            &mut l,
        )
    };
    unsafe {
        tl_bath_free(b);
        tl_transmon_free(t);
    }
    assert_eq!(s, TlStatus::Ok, "{}", last_error());
    assert!(f > 0.999, "fidelity {f}");
    assert!(l.abs() < 1e-12);
}

#[test]
fn scenario_errors_map_to_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"decay\"\n[transmon]\nej_over_ec = 100.0\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let mut passed = 7;
    let s = unsafe { tl_run_scenario(c.as_ptr(), out.as_ptr(), &mut passed) };
    assert_eq!(s, TlStatus::Config);
    assert_eq!(passed, 7);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(tl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/transleak.h");
    assert!(header.exists());
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "tl_transmon_new",
        "tl_evolve",
        "tl_last_error_message",
        "TL_STATUS_PANIC",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"transleak.h\"\nint main(void) { TlTransmon *t = 0; return tl_transmon_new(100.0, 3, 0.0, &t) == TL_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
