//! C ABI over `geolift`.
//!
//! Manifolds are opaque handles created from TOML text or a shipped config
//! name and released with `geolift_manifold_free`. Every fallible function
//! returns a `GeoliftStatus`; on anything but `GEOLIFT_STATUS_OK` a message
//! is available from `geolift_last_error_message` on the same thread.
//! Strings returned through `char **` out-parameters are owned by the
//! caller and released with `geolift_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use geolift::connect::{connect_geodesic, ConnectError, ConnectOptions};
use geolift::flow::{d_exp, exp_map_tol, ExpResult};
use geolift::geometry::{Point, Tangent};
use geolift::lifting::{quasi_lift, BasePath, LiftOptions, LiftStatus};
use geolift::manifold::{parse_metric, MetricSpec};
use serde::Deserialize;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeoliftStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    /// The geodesic left the chart domain before time 1.
    LeftDomain = 4,
    /// The lift (or connection search) cannot be continued in the domain.
    Inextensible = 5,
    BudgetExhausted = 6,
    /// The solver finished without a result, e.g. a stalled polish.
    Failed = 7,
    Panic = 8,
}

/// Opaque manifold handle.
pub struct GeoliftManifold {
    spec: MetricSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: GeoliftStatus, msg: impl Into<String>) -> GeoliftStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> GeoliftStatus) -> GeoliftStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(GeoliftStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, GeoliftStatus> {
    if s.is_null() {
        return Err(fail(GeoliftStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(GeoliftStatus::InvalidArgument, "string argument is not UTF-8"))
}

unsafe fn manifold<'a>(m: *const GeoliftManifold) -> Result<&'a MetricSpec, GeoliftStatus> {
    m.as_ref()
        .map(|m| &m.spec)
        .ok_or_else(|| fail(GeoliftStatus::NullPointer, "null manifold"))
}

unsafe fn vector(x: *const f64, dim: usize, m: &MetricSpec) -> Result<Vec<f64>, GeoliftStatus> {
    if x.is_null() {
        return Err(fail(GeoliftStatus::NullPointer, "null coordinate array"));
    }
    if dim != m.dim() {
        return Err(fail(
            GeoliftStatus::InvalidArgument,
            format!("dimension {dim}, manifold has {}", m.dim()),
        ));
    }
    Ok(std::slice::from_raw_parts(x, dim).to_vec())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    *out = CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut());
}

fn store(out: *mut *mut GeoliftManifold, spec: MetricSpec) -> GeoliftStatus {
    unsafe { *out = Box::into_raw(Box::new(GeoliftManifold { spec })) };
    GeoliftStatus::Ok
}

/// Parses a manifold config given as TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn geolift_manifold_from_toml(
    toml: *const c_char,
    out: *mut *mut GeoliftManifold,
) -> GeoliftStatus {
    guard(|| {
        if out.is_null() {
            return fail(GeoliftStatus::NullPointer, "null out pointer");
        }
        let toml = match text(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_metric(toml) {
            Ok(spec) => store(out, spec),
            Err(e) => fail(GeoliftStatus::ConfigError, e.to_string()),
        }
    })
}

/// Loads one of the shipped configs by name (`"sphere"`, `"torus"`, ...).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn geolift_manifold_builtin(
    name: *const c_char,
    out: *mut *mut GeoliftManifold,
) -> GeoliftStatus {
    guard(|| {
        if out.is_null() {
            return fail(GeoliftStatus::NullPointer, "null out pointer");
        }
        let name = match text(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match MetricSpec::builtin(name) {
            Some(spec) => store(out, spec),
            None => fail(GeoliftStatus::ConfigError, format!("no shipped config named {name:?}")),
        }
    })
}

/// Releases a manifold handle. Null is ignored.
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn geolift_manifold_free(m: *mut GeoliftManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Chart dimension, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geolift_manifold_dim(m: *const GeoliftManifold) -> usize {
    m.as_ref().map_or(0, |m| m.spec.dim())
}

/// `E_p(v)` into `out` (`dim` doubles).
///
/// # Safety
/// `p`, `v` and `out` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn geolift_exp_map(
    m: *const GeoliftManifold,
    p: *const f64,
    v: *const f64,
    dim: usize,
    tol: f64,
    out: *mut f64,
) -> GeoliftStatus {
    guard(|| {
        let run = || -> Result<GeoliftStatus, GeoliftStatus> {
            let m = manifold(m)?;
            let (p, v) = (vector(p, dim, m)?, vector(v, dim, m)?);
            if out.is_null() {
                return Err(fail(GeoliftStatus::NullPointer, "null output array"));
            }
            if !(tol > 0.0) {
                return Err(fail(GeoliftStatus::InvalidArgument, "tol must be positive"));
            }
            let base = Point::new(p);
            match exp_map_tol(m, &base, &Tangent::new(&base, v), tol) {
                ExpResult::Reached { point } => {
                    std::slice::from_raw_parts_mut(out, dim).copy_from_slice(point.coords());
                    Ok(GeoliftStatus::Ok)
                }
                ExpResult::LeftDomain { t_exit, .. } => Err(fail(
                    GeoliftStatus::LeftDomain,
                    format!("geodesic left the domain at t = {t_exit}"),
                )),
                ExpResult::StepFailure { t } => Err(fail(
                    GeoliftStatus::Failed,
                    format!("integrator step failure at t = {t}"),
                )),
            }
        };
        run().unwrap_or_else(|s| s)
    })
}

/// `dE_v` as a row-major `dim × dim` matrix, plus its smallest singular
/// value when `sigma_min` is not null.
///
/// # Safety
/// `p` and `v` must point to `dim` doubles, `matrix` to `dim * dim`.
#[no_mangle]
pub unsafe extern "C" fn geolift_d_exp(
    m: *const GeoliftManifold,
    p: *const f64,
    v: *const f64,
    dim: usize,
    tol: f64,
    matrix: *mut f64,
    sigma_min: *mut f64,
) -> GeoliftStatus {
    guard(|| {
        let run = || -> Result<GeoliftStatus, GeoliftStatus> {
            let m = manifold(m)?;
            let (p, v) = (vector(p, dim, m)?, vector(v, dim, m)?);
            if matrix.is_null() {
                return Err(fail(GeoliftStatus::NullPointer, "null output matrix"));
            }
            if !(tol > 0.0) {
                return Err(fail(GeoliftStatus::InvalidArgument, "tol must be positive"));
            }
            let base = Point::new(p);
            let frame = d_exp(m, &base, &Tangent::new(&base, v), tol)
                .map_err(|e| fail(GeoliftStatus::LeftDomain, e.to_string()))?;
            let out = std::slice::from_raw_parts_mut(matrix, dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    out[i * dim + j] = frame.matrix[(i, j)];
                }
            }
            if !sigma_min.is_null() {
                *sigma_min = frame.sigma_min();
            }
            Ok(GeoliftStatus::Ok)
        };
        run().unwrap_or_else(|s| s)
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftRequest {
    path: Vec<Vec<f64>>,
    p: Option<Vec<f64>>,
    v0: Option<Vec<f64>>,
    #[serde(default)]
    options: LiftOptions,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectRequest {
    p: Vec<f64>,
    q: Vec<f64>,
    #[serde(default)]
    via: Vec<Vec<f64>>,
    #[serde(default)]
    options: ConnectOptions,
}

fn lift_status(s: &LiftStatus) -> GeoliftStatus {
    match s {
        LiftStatus::Global => GeoliftStatus::Ok,
        LiftStatus::InextensibleInDomain { .. } => GeoliftStatus::Inextensible,
        LiftStatus::BudgetExhausted { .. } => GeoliftStatus::BudgetExhausted,
    }
}

fn json_call(
    request: *const c_char,
    result: *mut *mut c_char,
    body: impl FnOnce(&str) -> Result<(GeoliftStatus, String), GeoliftStatus>,
) -> GeoliftStatus {
    guard(|| {
        if result.is_null() {
            return fail(GeoliftStatus::NullPointer, "null result pointer");
        }
        unsafe { *result = ptr::null_mut() };
        let req = match unsafe { text(request) } {
            Ok(t) => t,
            Err(s) => return s,
        };
        match body(req) {
            Ok((status, json)) => {
                unsafe { put_string(result, json) };
                if status != GeoliftStatus::Ok {
                    set_error(format!("finished with {status:?}; see the result document"));
                }
                status
            }
            Err(s) => s,
        }
    })
}

fn bad_request(e: impl std::fmt::Display) -> GeoliftStatus {
    fail(GeoliftStatus::InvalidArgument, e.to_string())
}

/// Quasi-lifts a polyline. The request is JSON
/// `{"path": [[..], ..], "p": [..]?, "v0": [..]?, "options": {..}?}`;
/// the result is the lift document, also on inextensible or budget stops.
///
/// # Safety
/// `request` must be a NUL-terminated string, `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn geolift_lift_json(
    m: *const GeoliftManifold,
    request: *const c_char,
    result: *mut *mut c_char,
) -> GeoliftStatus {
    let m = match manifold(m) {
        Ok(m) => m,
        Err(s) => return s,
    };
    json_call(request, result, |req| {
        let req: LiftRequest = serde_json::from_str(req).map_err(bad_request)?;
        let path = BasePath::polyline(&req.path).map_err(bad_request)?;
        let base = Point::new(req.p.unwrap_or_else(|| path.start()));
        let v0 = match req.v0 {
            Some(v) => Tangent::new(&base, v),
            None => Tangent::zero(&base),
        };
        let lift = quasi_lift(m, &path, &v0, &req.options).map_err(bad_request)?;
        let json = serde_json::to_string(&lift).map_err(bad_request)?;
        Ok((lift_status(&lift.status), json))
    })
}

/// Geodesic from `p` to `q` by lifting the polyline `p, via.., q`. The
/// request is JSON `{"p": [..], "q": [..], "via": [[..]]?, "options": {..}?}`.
/// On success the result is the solution document; on a failed lift it
/// holds the error and the lift status.
///
/// # Safety
/// `request` must be a NUL-terminated string, `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn geolift_connect_json(
    m: *const GeoliftManifold,
    request: *const c_char,
    result: *mut *mut c_char,
) -> GeoliftStatus {
    let m = match manifold(m) {
        Ok(m) => m,
        Err(s) => return s,
    };
    json_call(request, result, |req| {
        let req: ConnectRequest = serde_json::from_str(req).map_err(bad_request)?;
        let mut verts = vec![req.p.clone()];
        verts.extend(req.via);
        verts.push(req.q.clone());
        let seed = BasePath::polyline(&verts).map_err(bad_request)?;
        match connect_geodesic(m, &Point::new(req.p), &Point::new(req.q), &seed, &req.options) {
            Ok(s) => Ok((GeoliftStatus::Ok, serde_json::to_string(&s).map_err(bad_request)?)),
            Err(ConnectError::Invalid(e)) => Err(bad_request(e)),
            Err(e) => {
                let (status, lift_status) = match &e {
                    ConnectError::Lift { lift, .. } => (self::lift_status(&lift.status), Some(lift.status.clone())),
                    _ => (GeoliftStatus::Failed, None),
                };
                let doc = serde_json::json!({ "error": e.to_string(), "status": lift_status });
                Ok((status, doc.to_string()))
            }
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn geolift_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last non-OK status on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn geolift_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
