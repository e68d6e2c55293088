use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use tlab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tlab_last_error()) }.to_string_lossy().into_owned()
}

fn symmetric(eps: f64, m: usize) -> *mut TlabChannel {
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { tlab_channel_symmetric(eps, m, &mut ch) }, TlabStatus::Ok);
    assert!(!ch.is_null());
    ch
}

#[test]
fn bounds_match_library() {
    let ch = symmetric(0.1, 10);
    let stats = tlab::predictors::SymmetricChannelSpec::new(0.1, 10).unwrap().stats();
    let mut s = TlabStats::default();
    assert_eq!(unsafe { tlab_channel_stats(ch, &mut s) }, TlabStatus::Ok);
    assert_eq!((s.h, s.sigma, s.rho), (stats.h, stats.sigma, stats.rho));

    let mut b = TlabBound::default();
    assert_eq!(unsafe { tlab_converse_exact(ch, 1600, 0.1, 0.0, &mut b) }, TlabStatus::Ok);
    let want = tlab::bounds::converse_exact(&stats, 1600, 0.1, 1.0 / 40.0).unwrap();
    assert_eq!(b.value_nats, want.value_nats);
    assert_eq!(b.vacuous, 0);

    assert_eq!(unsafe { tlab_converse_approx(ch, 400, 0.1, &mut b) }, TlabStatus::Ok);
    assert_eq!(b.value_nats, tlab::bounds::converse_approx(&stats, 400, 0.1).unwrap().value_nats);

    assert_eq!(unsafe { tlab_achievability(ch, 100, 0.1, &mut b) }, TlabStatus::SampleSizeTooSmall);
    assert!(last_error().contains("too small"), "{}", last_error());
    assert_eq!(unsafe { tlab_achievability(ch, 1600, 0.1, &mut b) }, TlabStatus::Ok);
    assert!(last_error().is_empty());
    unsafe { tlab_channel_free(ch) };
}

#[test]
fn errors_are_reported() {
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { tlab_channel_symmetric(0.1, 1, &mut ch) }, TlabStatus::InvalidArgument);
    assert!(ch.is_null());
    assert_eq!(unsafe { tlab_channel_symmetric(1.5, 4, &mut ch) }, TlabStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { tlab_channel_symmetric(0.1, 4, ptr::null_mut()) }, TlabStatus::NullPointer);

    let mut b = TlabBound::default();
    assert_eq!(unsafe { tlab_converse_approx(ptr::null(), 10, 0.1, &mut b) }, TlabStatus::NullPointer);

    let path = CString::new("/nonexistent/scores.csv").unwrap();
    assert_eq!(unsafe { tlab_channel_from_scores_csv(path.as_ptr(), &mut ch) }, TlabStatus::Io);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "p_0,p_1,label\n0.5,0.4,0\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { tlab_channel_from_scores_csv(bad.as_ptr(), &mut ch) }, TlabStatus::Parse);
    assert!(last_error().contains(":2:"), "{}", last_error());

    unsafe {
        tlab_channel_free(ptr::null_mut());
        tlab_config_free(ptr::null_mut());
    }
}

#[test]
fn divergences_and_exponents() {
    let (p1, p2) = ([0.8, 0.2], [0.2, 0.8]);
    let mut g = 0.0;
    assert_eq!(unsafe { tlab_gjs(p1.as_ptr(), p2.as_ptr(), 2, 1.0, &mut g) }, TlabStatus::Ok);
    let d1 = tlab::prob::CategoricalDist::new(p1.to_vec()).unwrap();
    let d2 = tlab::prob::CategoricalDist::new(p2.to_vec()).unwrap();
    assert_eq!(g, tlab::prob::gjs(&d1, &d2, 1.0).unwrap());

    let mut e = TlabExponent::default();
    assert_eq!(unsafe { tlab_f_exponent(p1.as_ptr(), p2.as_ptr(), 2, 1.0, 0.05, &mut e) }, TlabStatus::Ok);
    assert_eq!(e.feasible, 1);
    assert!((e.value - 0.187601).abs() < 1e-5, "{}", e.value);

    let bad = [0.5, 0.6];
    assert_eq!(unsafe { tlab_gjs(bad.as_ptr(), p2.as_ptr(), 2, 1.0, &mut g) }, TlabStatus::InvalidArgument);
    assert_eq!(unsafe { tlab_gjs(ptr::null(), p2.as_ptr(), 2, 1.0, &mut g) }, TlabStatus::NullPointer);
}

#[test]
fn experiment_runs_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.json");
    let kind = CString::new("theorem1_audit").unwrap();
    let overrides = CString::new(r#"{"trials": 25, "output": {"format": "json"}}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { tlab_config_new(kind.as_ptr(), overrides.as_ptr(), &mut cfg) }, TlabStatus::Ok);
    let path = CString::new(out.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { tlab_run_experiment(cfg, path.as_ptr()) }, TlabStatus::Ok, "{}", last_error());
    unsafe { tlab_config_free(cfg) };
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 25);

    let unknown = CString::new("nope").unwrap();
    assert_eq!(
        unsafe { tlab_config_new(unknown.as_ptr(), ptr::null(), &mut cfg) },
        TlabStatus::InvalidArgument
    );
    let bad = CString::new(r#"{"n_grid": []}"#).unwrap();
    assert_eq!(unsafe { tlab_config_new(kind.as_ptr(), bad.as_ptr(), &mut cfg) }, TlabStatus::InvalidArgument);
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(tlab_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// The generated header is valid C and declares every exported function.
#[test]
fn header_compiles() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("tlab.h")).unwrap();
    for f in [
        "tlab_last_error",
        "tlab_version",
        "tlab_channel_symmetric",
        "tlab_channel_from_scores_csv",
        "tlab_channel_free",
        "tlab_channel_stats",
        "tlab_converse_exact",
        "tlab_converse_approx",
        "tlab_achievability",
        "tlab_gjs",
        "tlab_f_exponent",
        "tlab_config_new",
        "tlab_config_free",
        "tlab_run_experiment",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"tlab.h\"\nint main(void) { TlabChannel *ch = 0; TlabBound b;\n\
         if (tlab_channel_symmetric(0.1, 10, &ch) != TLAB_STATUS_OK) return 1;\n\
         tlab_converse_approx(ch, 100, 0.1, &b); tlab_channel_free(ch); return 0; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "C compiler rejected the header"),
        Err(e) => eprintln!("skipping C compile check: {e}"),
    }
}
