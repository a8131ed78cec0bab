use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use adacusum_ffi::*;

fn last_error() -> String {
    let p = adacusum_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn series(values: &[f64]) -> *mut AdacusumSeries {
    let mut s = ptr::null_mut();
    let st = unsafe { adacusum_series_new(values.as_ptr(), values.len(), &mut s) };
    assert_eq!(st, AdacusumStatus::Ok);
    s
}

fn curve(name: &str) -> *mut AdacusumCurve {
    let name = CString::new(name).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { adacusum_curve_builtin(name.as_ptr(), &mut c) },
        AdacusumStatus::Ok
    );
    c
}

#[test]
fn fixed_gamma_estimate() {
    let s = series(&[1.0, 1.0, 1.0, 5.0, 5.0]);
    let mut est = AdacusumEstimate::default();
    assert_eq!(
        unsafe { adacusum_estimate(s, 0.0, &mut est) },
        AdacusumStatus::Ok
    );
    assert_eq!(est.m_hat, 3);
    assert_eq!(est.tau_hat, 0.6);
    assert!((est.statistic - 2.146625258399799).abs() < 1e-12);

    let mut t = 0.0;
    assert_eq!(
        unsafe { adacusum_weighted_statistic(s, 0.0, &mut t) },
        AdacusumStatus::Ok
    );
    assert_eq!(t, est.statistic);

    assert_eq!(
        unsafe { adacusum_estimate(s, 0.75, &mut est) },
        AdacusumStatus::InvalidInput
    );
    assert!(last_error().contains("0.75"));
    unsafe { adacusum_series_free(s) };
}

#[test]
fn adaptive_estimate_and_studentization() {
    let s = series(&[1.0, 1.0, 1.0, 5.0, 5.0]);
    let c = curve("ii");
    let mut r = AdacusumAdaptiveEstimate::default();
    assert_eq!(
        unsafe { adacusum_adaptive_estimate(s, c, false, &mut r) },
        AdacusumStatus::Ok
    );
    assert!((r.gamma_hat - 0.1).abs() < 1e-12);
    assert_eq!(r.tau_prelim, 0.6);
    assert_eq!(r.m_hat, 3);

    let flat = series(&[2.0; 6]);
    let st = unsafe { adacusum_adaptive_estimate(flat, c, true, &mut r) };
    assert_eq!(st, AdacusumStatus::DegenerateVariance);
    unsafe {
        adacusum_series_free(flat);
        adacusum_series_free(s);
        adacusum_curve_free(c);
    }
}

#[test]
fn curves() {
    let c = curve("tent");
    assert!(unsafe { adacusum_curve_is_h0_compatible(c) });
    let mut g = 0.0;
    assert_eq!(
        unsafe { adacusum_curve_eval(c, 0.1, &mut g) },
        AdacusumStatus::Ok
    );
    assert!((g - 0.2).abs() < 1e-15);
    assert_eq!(
        unsafe { adacusum_curve_eval(c, 1.5, &mut g) },
        AdacusumStatus::InvalidInput
    );
    unsafe { adacusum_curve_free(c) };

    let xs = [0.0, 0.5, 1.0];
    let gs = [0.5, 0.0, 0.5];
    let mut k = ptr::null_mut();
    let st = unsafe { adacusum_curve_from_knots(xs.as_ptr(), gs.as_ptr(), 3, &mut k) };
    assert_eq!(st, AdacusumStatus::Ok);
    assert_eq!(
        unsafe { adacusum_curve_eval(k, 0.25, &mut g) },
        AdacusumStatus::Ok
    );
    assert!((g - 0.25).abs() < 1e-15);
    assert!(!unsafe { adacusum_curve_is_h0_compatible(k) });
    unsafe { adacusum_curve_free(k) };

    let bad = [0.0, 0.7, 0.6];
    let st = unsafe { adacusum_curve_from_knots(bad.as_ptr(), gs.as_ptr(), 3, &mut k) };
    assert_eq!(st, AdacusumStatus::InvalidInput);

    let name = CString::new("seven").unwrap();
    assert_eq!(
        unsafe { adacusum_curve_builtin(name.as_ptr(), &mut k) },
        AdacusumStatus::InvalidInput
    );
}

#[test]
fn null_handles() {
    let mut est = AdacusumEstimate::default();
    assert_eq!(
        unsafe { adacusum_estimate(ptr::null(), 0.0, &mut est) },
        AdacusumStatus::NullPointer
    );
    assert!(last_error().contains("series"));
    let s = series(&[1.0, 2.0, 3.0]);
    assert_eq!(
        unsafe { adacusum_estimate(s, 0.0, ptr::null_mut()) },
        AdacusumStatus::NullPointer
    );
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { adacusum_series_new(ptr::null(), 4, &mut out) },
        AdacusumStatus::NullPointer
    );
    assert_eq!(
        unsafe { adacusum_series_new(ptr::null(), 0, &mut out) },
        AdacusumStatus::InvalidInput
    );
    assert_eq!(unsafe { adacusum_series_len(ptr::null()) }, 0);
    unsafe {
        adacusum_series_free(ptr::null_mut());
        adacusum_curve_free(ptr::null_mut());
        adacusum_table_free(ptr::null_mut());
        adacusum_series_free(s);
    }
}

#[test]
fn error_message_cleared_on_success() {
    let mut q = 0.0;
    assert_eq!(
        unsafe { adacusum_kolmogorov_quantile(1.5, &mut q) },
        AdacusumStatus::InvalidInput
    );
    assert!(!adacusum_last_error_message().is_null());
    assert_eq!(
        unsafe { adacusum_kolmogorov_quantile(0.95, &mut q) },
        AdacusumStatus::Ok
    );
    assert!(adacusum_last_error_message().is_null());
    assert!((q - 1.3580986).abs() < 1e-6);
    assert!((adacusum_kolmogorov_cdf(q) - 0.95).abs() < 1e-9);
}

#[test]
fn kolmogorov_test_requires_h0_compatible_curve() {
    let s = series(&[0.3, -1.2, 0.8, 0.1, -0.4, 1.1, -0.9, 0.2]);
    let c = curve("iv");
    let mut d = std::mem::MaybeUninit::<AdacusumTestDecision>::uninit();
    let st = unsafe { adacusum_adaptive_test(s, c, 0.05, ptr::null(), d.as_mut_ptr()) };
    assert_eq!(st, AdacusumStatus::Configuration);
    assert!(last_error().contains("g(0)=g(1)=0"));
    unsafe {
        adacusum_curve_free(c);
        adacusum_series_free(s);
    }
}

#[test]
fn table_round_trip_through_cli_file() {
    let dir = tempfile::TempDir::new().unwrap();
    let path = dir.path().join("table.json");
    let mut t = adacusum::CriticalValueTable::new(5, 1000);
    for gamma in [0.0, 0.25, 0.5] {
        let e = adacusum::mc_quantile(
            adacusum::WeightExponent::new(gamma).unwrap(),
            40,
            0.95,
            1000,
            5,
            adacusum::Workers::SERIAL,
        )
        .unwrap();
        t.insert(e, false);
    }
    t.save(&path).unwrap();

    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut table = ptr::null_mut();
    assert_eq!(
        unsafe { adacusum_table_load(cpath.as_ptr(), &mut table) },
        AdacusumStatus::Ok
    );

    let mut e = AdacusumTableEntry::default();
    assert_eq!(
        unsafe { adacusum_table_lookup(table, 0.2, 40, 0.95, &mut e) },
        AdacusumStatus::Ok
    );
    assert_eq!(e.gamma, 0.25);
    assert_eq!(e.replications, 1000);
    assert_eq!(
        unsafe { adacusum_table_lookup(table, 0.2, 41, 0.95, &mut e) },
        AdacusumStatus::MissingQuantile
    );

    let mut direct = AdacusumTableEntry::default();
    let st = unsafe { adacusum_mc_quantile(0.5, 40, 0.95, 1000, 5, 2, &mut direct) };
    assert_eq!(st, AdacusumStatus::Ok);
    let mut stored = AdacusumTableEntry::default();
    unsafe { adacusum_table_lookup(table, 0.5, 40, 0.95, &mut stored) };
    assert_eq!(direct.value, stored.value);
    assert_eq!(direct.stderr, stored.stderr);

    let values: Vec<f64> = (0..40)
        .map(|i| if i < 12 { 0.0 } else { 4.0 } + 0.01 * (i % 3) as f64)
        .collect();
    let s = series(&values);
    let c = curve("iv");
    let mut d = std::mem::MaybeUninit::<AdacusumTestDecision>::uninit();
    let st = unsafe { adacusum_adaptive_test(s, c, 0.05, table, d.as_mut_ptr()) };
    assert_eq!(st, AdacusumStatus::Ok);
    let d = unsafe { d.assume_init() };
    assert!(d.reject);
    assert_eq!(d.source, AdacusumQuantileSource::Table);
    assert_eq!(d.entry.n, 40);
    assert_eq!(d.entry.value, d.critical_value);

    let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
    let mut other = ptr::null_mut();
    assert_eq!(
        unsafe { adacusum_table_load(missing.as_ptr(), &mut other) },
        AdacusumStatus::Io
    );
    unsafe {
        adacusum_series_free(s);
        adacusum_curve_free(c);
        adacusum_table_free(table);
    }
}

#[test]
fn generated_header_declares_every_export() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/adacusum.h"))
            .unwrap();
    for name in [
        "adacusum_version",
        "adacusum_last_error_message",
        "adacusum_series_new",
        "adacusum_series_free",
        "adacusum_curve_builtin",
        "adacusum_curve_from_knots",
        "adacusum_estimate",
        "adacusum_adaptive_estimate",
        "adacusum_adaptive_test",
        "adacusum_kolmogorov_quantile",
        "adacusum_mc_quantile",
        "adacusum_table_load",
        "adacusum_table_lookup",
        "typedef struct AdacusumSeries AdacusumSeries;",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// `target/<profile>`, derived from the test executable in `target/<profile>/deps`.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

/// Path to an up-to-date `libadacusum_ffi.a`; `cargo test` alone does not
/// produce the staticlib artifact.
fn static_library() -> PathBuf {
    let dir = profile_dir();
    let mut build = Command::new(option_env!("CARGO").unwrap_or("cargo"));
    build.args(["build", "--quiet", "-p", "adacusum-ffi", "--lib"]);
    if dir.file_name().is_some_and(|n| n == "release") {
        build.arg("--release");
    }
    let status = build.status().expect("run cargo");
    assert!(status.success(), "building the static library failed");
    dir.join("libadacusum_ffi.a")
}

#[test]
fn c_program_links_against_static_library() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler on PATH");
        return;
    }
    let lib = static_library();
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::TempDir::new().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .arg(root.join("tests/c_smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
