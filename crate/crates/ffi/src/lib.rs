//! C ABI over `tlab`.
//!
//! Every fallible function returns a [`TlabStatus`]; on failure a message is
//! available from [`tlab_last_error`] on the same thread. Objects are handed
//! out as opaque pointers and must be released with the matching `_free`
//! function. All information quantities are in nats.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use tlab::bounds::{self, BoundReport};
use tlab::exponents;
use tlab::harness::{self, ExperimentConfig, ExperimentKind};
use tlab::predictors::SymmetricChannelSpec;
use tlab::prob::{self, CategoricalDist, LogCondStats};
use tlab::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    DegenerateChannel = 4,
    SampleSizeTooSmall = 5,
    TooLarge = 6,
    Io = 7,
    Parse = 8,
    Panic = 99,
}

impl From<&Error> for TlabStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain { .. } => Self::Domain,
            Error::DegenerateChannel => Self::DegenerateChannel,
            Error::SampleSizeTooSmall { .. } => Self::SampleSizeTooSmall,
            Error::TooLarge { .. } | Error::CellBudgetExceeded { .. } => Self::TooLarge,
            Error::Io { .. } => Self::Io,
            Error::Parse { .. } => Self::Parse,
            _ => Self::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (TlabStatus, String)>) -> TlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TlabStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TlabStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (TlabStatus, String) {
    (TlabStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (TlabStatus, String) {
    (TlabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (TlabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string(p: *const c_char, what: &str) -> Result<String, (TlabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_string)
        .map_err(|_| (TlabStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn dist(p: *const f64, len: usize, what: &str) -> Result<CategoricalDist, (TlabStatus, String)> {
    CategoricalDist::new(slice(p, len, what)?.to_vec()).map_err(lib_err)
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (TlabStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `tlab_*` call on the same thread.
#[no_mangle]
pub extern "C" fn tlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Moments of `log P(Y|X)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TlabStats {
    pub h: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl From<LogCondStats> for TlabStats {
    fn from(s: LogCondStats) -> Self {
        Self {
            h: s.h,
            sigma: s.sigma,
            rho: s.rho,
        }
    }
}

/// A bound on `n gamma` in nats. `vacuous` is 1 when the bound carries no
/// information (value `-inf`).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TlabBound {
    pub value_nats: f64,
    pub per_sample_nats: f64,
    pub vacuous: i32,
}

impl From<BoundReport> for TlabBound {
    fn from(r: BoundReport) -> Self {
        Self {
            value_nats: r.value_nats,
            per_sample_nats: r.per_sample_nats,
            vacuous: i32::from(r.vacuous),
        }
    }
}

/// Result of an exponent minimization. `value` is `+inf` when infeasible.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TlabExponent {
    pub value: f64,
    pub certified_gap: f64,
    pub feasible: i32,
    pub heuristic: i32,
}

/// Opaque channel: the moments of `log P(Y|X)` from a symmetric channel or a
/// score file.
pub struct TlabChannel {
    stats: LogCondStats,
}

/// Symmetric channel with flip probability `epsilon` over `m_classes` labels.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn tlab_channel_symmetric(epsilon: f64, m_classes: usize, out: *mut *mut TlabChannel) -> TlabStatus {
    guard(|| {
        let spec = SymmetricChannelSpec::new(epsilon, m_classes).map_err(lib_err)?;
        let ch = Box::new(TlabChannel { stats: spec.stats() });
        write(out, Box::into_raw(ch), "out")
    })
}

/// Plug-in channel from a score CSV (`p_0,...,p_{M-1},label`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tlab_channel_from_scores_csv(path: *const c_char, out: *mut *mut TlabChannel) -> TlabStatus {
    guard(|| {
        let path = PathBuf::from(string(path, "path")?);
        let stats = harness::load_scores_csv(&path)
            .and_then(|d| d.plug_in_stats())
            .map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(TlabChannel { stats })), "out")
    })
}

/// Releases a channel. Null is ignored.
///
/// # Safety
/// `ch` must come from a `tlab_channel_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tlab_channel_free(ch: *mut TlabChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

unsafe fn channel<'a>(ch: *const TlabChannel) -> Result<&'a TlabChannel, (TlabStatus, String)> {
    ch.as_ref().ok_or_else(|| null("channel"))
}

/// # Safety
/// `ch` must be a live channel and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tlab_channel_stats(ch: *const TlabChannel, out: *mut TlabStats) -> TlabStatus {
    guard(|| write(out, channel(ch)?.stats.into(), "out"))
}

/// Exact finite-n converse. A non-positive `delta` selects `1/sqrt(n)`.
///
/// # Safety
/// `ch` must be a live channel and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tlab_converse_exact(
    ch: *const TlabChannel,
    n: usize,
    alpha: f64,
    delta: f64,
    out: *mut TlabBound,
) -> TlabStatus {
    guard(|| {
        let stats = channel(ch)?.stats;
        let delta = if delta > 0.0 { delta } else { bounds::default_delta(n) };
        let r = bounds::converse_exact(&stats, n, alpha, delta).map_err(lib_err)?;
        write(out, r.into(), "out")
    })
}

/// Approximate converse with the constant term dropped.
///
/// # Safety
/// `ch` must be a live channel and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tlab_converse_approx(ch: *const TlabChannel, n: usize, alpha: f64, out: *mut TlabBound) -> TlabStatus {
    guard(|| {
        let r = bounds::converse_approx(&channel(ch)?.stats, n, alpha).map_err(lib_err)?;
        write(out, r.into(), "out")
    })
}

/// Achievability bound; fails with `SampleSizeTooSmall` below the valid range.
///
/// # Safety
/// `ch` must be a live channel and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tlab_achievability(ch: *const TlabChannel, n: usize, alpha: f64, out: *mut TlabBound) -> TlabStatus {
    guard(|| {
        let r = bounds::achievability(&channel(ch)?.stats, n, alpha).map_err(lib_err)?;
        write(out, r.into(), "out")
    })
}

/// `GJS(P1, P2, alpha)` for two distributions of length `k`.
///
/// # Safety
/// `p1` and `p2` must point to `k` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tlab_gjs(p1: *const f64, p2: *const f64, k: usize, alpha: f64, out: *mut f64) -> TlabStatus {
    guard(|| {
        let (a, b) = (dist(p1, k, "p1")?, dist(p2, k, "p2")?);
        let v = prob::gjs(&a, &b, alpha).map_err(lib_err)?;
        write(out, v, "out")
    })
}

/// `F(P1, P2)`: the minimum of `D(Q2||P2) + alpha D(Q1||P1)` subject to
/// `GJS(Q1, Q2, alpha) <= lambda`.
///
/// # Safety
/// `p1` and `p2` must point to `k` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tlab_f_exponent(
    p1: *const f64,
    p2: *const f64,
    k: usize,
    alpha: f64,
    lambda: f64,
    out: *mut TlabExponent,
) -> TlabStatus {
    guard(|| {
        let (a, b) = (dist(p1, k, "p1")?, dist(p2, k, "p2")?);
        let s = exponents::f_exponent(&a, &b, alpha, lambda).map_err(lib_err)?;
        let r = TlabExponent {
            value: s.value,
            certified_gap: s.certified_gap,
            feasible: i32::from(s.feasible),
            heuristic: i32::from(s.heuristic),
        };
        write(out, r, "out")
    })
}

/// Opaque experiment configuration.
pub struct TlabConfig {
    cfg: ExperimentConfig,
}

fn parse_kind(s: &str) -> Option<ExperimentKind> {
    [
        ExperimentKind::BoundsCurve,
        ExperimentKind::BonferroniCompare,
        ExperimentKind::GutmanSim,
        ExperimentKind::ExponentTable,
        ExperimentKind::OneShotAudit,
    ]
    .into_iter()
    .find(|k| k.as_str() == s)
}

/// Default configuration for `kind` (`bounds_curve`, `bonferroni_compare`,
/// `gutman_sim`, `exponent_table`, `theorem1_audit`), with the fields of the
/// JSON object `overrides` applied when it is non-null.
///
/// # Safety
/// `kind` must be a NUL-terminated string, `overrides` null or
/// NUL-terminated, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tlab_config_new(
    kind: *const c_char,
    overrides: *const c_char,
    out: *mut *mut TlabConfig,
) -> TlabStatus {
    guard(|| {
        let name = string(kind, "kind")?;
        let kind = parse_kind(&name).ok_or((TlabStatus::InvalidArgument, format!("unknown experiment {name:?}")))?;
        let mut cfg = ExperimentConfig::default_for(kind);
        if !overrides.is_null() {
            cfg = ExperimentConfig::overlay_json(&cfg, &string(overrides, "overrides")?).map_err(lib_err)?;
        }
        cfg.validate().map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(TlabConfig { cfg })), "out")
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must come from `tlab_config_new` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tlab_config_free(cfg: *mut TlabConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the experiment and writes it to `path` in the configured format and
/// log base.
///
/// # Safety
/// `cfg` must be a live configuration and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tlab_run_experiment(cfg: *const TlabConfig, path: *const c_char) -> TlabStatus {
    guard(|| {
        let mut cfg = cfg.as_ref().ok_or_else(|| null("config"))?.cfg.clone();
        cfg.output.path = Some(PathBuf::from(string(path, "path")?));
        harness::run_and_emit(&cfg).map(|_| ()).map_err(lib_err)
    })
}
