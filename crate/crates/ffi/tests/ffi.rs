use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use geolift_ffi::*;

fn builtin(name: &str) -> *mut GeoliftManifold {
    let mut m = ptr::null_mut();
    let name = CString::new(name).unwrap();
    assert_eq!(
        unsafe { geolift_manifold_builtin(name.as_ptr(), &mut m) },
        GeoliftStatus::Ok
    );
    m
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(geolift_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn call_json(
    f: unsafe extern "C" fn(
        *const GeoliftManifold,
        *const std::ffi::c_char,
        *mut *mut std::ffi::c_char,
    ) -> GeoliftStatus,
    m: *const GeoliftManifold,
    req: &str,
) -> (GeoliftStatus, Option<serde_json::Value>) {
    let req = CString::new(req).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { f(m, req.as_ptr(), &mut out) };
    let doc = (!out.is_null()).then(|| {
        let v = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
        unsafe { geolift_string_free(out) };
        v
    });
    (status, doc)
}

#[test]
fn exp_and_differential() {
    let m = builtin("euclid");
    assert_eq!(unsafe { geolift_manifold_dim(m) }, 2);
    let (p, v) = ([1.0, 1.0], [2.0, -1.0]);
    let mut out = [0.0; 2];
    assert_eq!(
        unsafe { geolift_exp_map(m, p.as_ptr(), v.as_ptr(), 2, 1e-10, out.as_mut_ptr()) },
        GeoliftStatus::Ok
    );
    assert!((out[0] - 3.0).abs() < 1e-12 && out[1].abs() < 1e-12);
    let mut jac = [0.0; 4];
    let mut smin = 0.0;
    let s = unsafe { geolift_d_exp(m, p.as_ptr(), v.as_ptr(), 2, 1e-10, jac.as_mut_ptr(), &mut smin) };
    assert_eq!(s, GeoliftStatus::Ok);
    assert!((jac[0] - 1.0).abs() < 1e-12 && jac[1].abs() < 1e-12 && (jac[3] - 1.0).abs() < 1e-12);
    assert!((smin - 1.0).abs() < 1e-12);
    unsafe { geolift_manifold_free(m) };
}

#[test]
fn errors_are_codes_with_messages() {
    let m = builtin("punctured-mink");
    let (p, v) = ([0.0, 0.0], [2.0, 0.0]);
    let mut out = [0.0; 2];
    let s = unsafe { geolift_exp_map(m, p.as_ptr(), v.as_ptr(), 2, 1e-10, out.as_mut_ptr()) };
    assert_eq!(s, GeoliftStatus::LeftDomain);
    assert!(last_error().contains("left the domain"));

    let s = unsafe { geolift_exp_map(ptr::null(), p.as_ptr(), v.as_ptr(), 2, 1e-10, out.as_mut_ptr()) };
    assert_eq!(s, GeoliftStatus::NullPointer);

    let bad = CString::new("[manifold]\ndim = 2\n").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { geolift_manifold_from_toml(bad.as_ptr(), &mut h) },
        GeoliftStatus::ConfigError
    );
    assert!(h.is_null());
    unsafe { geolift_manifold_free(m) };
}

#[test]
fn json_entry_points() {
    let m = builtin("punctured-mink");
    let (s, doc) = call_json(geolift_lift_json, m, r#"{"path": [[0, 0], [1, 0.3], [2, 0]]}"#);
    assert_eq!(s, GeoliftStatus::Inextensible);
    assert_eq!(doc.unwrap()["status"]["kind"], "inextensible_in_domain");
    let (s, _) = call_json(geolift_lift_json, m, r#"{"path": 3}"#);
    assert_eq!(s, GeoliftStatus::InvalidArgument);
    unsafe { geolift_manifold_free(m) };

    let toml = CString::new(
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../manifolds/euclid.toml")).unwrap(),
    )
    .unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { geolift_manifold_from_toml(toml.as_ptr(), &mut m) },
        GeoliftStatus::Ok
    );
    let (s, doc) = call_json(
        geolift_connect_json,
        m,
        r#"{"p": [0, 0], "q": [3, 4], "via": [[1, 3]]}"#,
    );
    assert_eq!(s, GeoliftStatus::Ok);
    assert!((doc.unwrap()["length"].as_f64().unwrap() - 5.0).abs() < 1e-10);
    unsafe { geolift_manifold_free(m) };
}

#[test]
fn c_program_links_against_the_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libgeolift_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let built = Command::new(cc)
        .arg(crate_dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .expect("C compiler runs");
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
