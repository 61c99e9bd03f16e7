//! C ABI over `ghzsim`.
//!
//! Measurement sets live behind an opaque [`GhzsimSet`] handle. Every
//! fallible call returns a [`GhzsimStatus`]; on failure the message is kept
//! per thread and can be read with [`ghzsim_last_error`]. Panics never cross
//! the boundary, they surface as [`GhzsimStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ghzsim::accounting::{aggregate, outcome_counts, TrialSummary};
use ghzsim::numerics::{AngleKind, AngleUnit, ExactAngle};
use ghzsim::oracle::{ghz_prob, outcome_from_mask, MeasurementSet, N_ENUM};
use ghzsim::protocol::{run_prepared_trials, run_trial, PreparedSet, ProtocolConfig, Variant};
use ghzsim::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhzsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidAngle = 3,
    InvalidConfig = 4,
    TooLarge = 5,
    NotEquatorial = 6,
    PrecisionExhausted = 7,
    DepthExceeded = 8,
    TapeExhausted = 9,
    InsufficientSamples = 10,
    Io = 11,
    Internal = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhzsimUnit {
    /// Angles are multiples of π.
    Pi = 0,
    Radians = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhzsimVariant {
    Sequential = 0,
    Doubling = 1,
    ConstantRound = 2,
    Parallel = 3,
    Equatorial = 4,
}

/// Costs of a single run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GhzsimTrialStats {
    pub random_bits: u64,
    pub bits_to_leader: u64,
    pub bits_from_leader: u64,
    pub outer_rounds: u32,
    pub inner_k_final: u32,
    pub bernoulli_k_final: u32,
    pub parallel_time_steps: u64,
}

/// Means over a batch of runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GhzsimSampleSummary {
    pub trials: u64,
    pub mean_random_bits: f64,
    pub mean_total_bits: f64,
    pub mean_outer_rounds: f64,
    pub mean_parallel_time_steps: f64,
    /// 1 when every applicable budget check passed.
    pub budget_pass: i32,
}

/// Opaque handle to a validated measurement set.
pub struct GhzsimSet {
    set: PreparedSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn status_of(e: &Error) -> GhzsimStatus {
    match e {
        Error::PrecisionExhausted { .. } => GhzsimStatus::PrecisionExhausted,
        Error::DepthExceeded { .. } => GhzsimStatus::DepthExceeded,
        Error::TapeExhausted { .. } => GhzsimStatus::TapeExhausted,
        Error::TooLarge { .. } => GhzsimStatus::TooLarge,
        Error::NotEquatorial { .. } => GhzsimStatus::NotEquatorial,
        Error::InvalidAngle(_) => GhzsimStatus::InvalidAngle,
        Error::InvalidConfig(_) => GhzsimStatus::InvalidConfig,
        Error::InsufficientSamples { .. } => GhzsimStatus::InsufficientSamples,
        Error::Io(_) => GhzsimStatus::Io,
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(GhzsimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GhzsimStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any failure and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GhzsimStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GhzsimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GhzsimStatus::Internal
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(GhzsimStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(p: *const GhzsimSet) -> Result<&'a GhzsimSet, Failure> {
    p.as_ref().ok_or_else(|| null("set"))
}

fn to_variant(v: GhzsimVariant) -> Variant {
    match v {
        GhzsimVariant::Sequential => Variant::Sequential,
        GhzsimVariant::Doubling => Variant::Doubling,
        GhzsimVariant::ConstantRound => Variant::ConstantRound,
        GhzsimVariant::Parallel => Variant::Parallel,
        GhzsimVariant::Equatorial => Variant::Equatorial,
    }
}

/// Builds a measurement set from `n` pairs of angle literals such as `"1/3"`
/// or `"0.25"`.
///
/// # Safety
/// `thetas` and `phis` must each point to `n` valid NUL-terminated strings;
/// `out` must be writable. The handle is released with [`ghzsim_set_free`].
#[no_mangle]
pub unsafe extern "C" fn ghzsim_set_new(
    thetas: *const *const c_char,
    phis: *const *const c_char,
    n: usize,
    unit: GhzsimUnit,
    out: *mut *mut GhzsimSet,
) -> GhzsimStatus {
    guard(|| {
        if thetas.is_null() || phis.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let unit = match unit {
            GhzsimUnit::Pi => AngleUnit::Pi,
            GhzsimUnit::Radians => AngleUnit::Rad,
        };
        let mut t = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        for j in 0..n {
            t.push(ExactAngle::parse(c_str(*thetas.add(j), "theta")?, unit, AngleKind::Azimuthal)?);
            p.push(ExactAngle::parse(c_str(*phis.add(j), "phi")?, unit, AngleKind::Elevation)?);
        }
        let m = MeasurementSet::new(t, p)?;
        let set = PreparedSet::new(&m)?;
        *out = Box::into_raw(Box::new(GhzsimSet { set }));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from [`ghzsim_set_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ghzsim_set_free(set: *mut GhzsimSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of parties, 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ghzsim_set_parties(set: *const GhzsimSet) -> usize {
    set.as_ref().map_or(0, |s| s.set.n())
}

/// Exact probability of an outcome, rounded to double. Bit `j` of `mask` set
/// means party `j` (0-based) reads `−1`.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ghzsim_oracle_prob(set: *const GhzsimSet, mask: u64, out: *mut f64) -> GhzsimStatus {
    guard(|| {
        let s = handle(set)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = s.set.n();
        if n < 64 && mask >> n != 0 {
            return Err(Failure(GhzsimStatus::InvalidConfig, format!("mask {mask:#x} has bits above party {n}")));
        }
        *out = ghz_prob(s.set.set(), &outcome_from_mask(mask, n)).to_f64();
        Ok(())
    })
}

/// One run with trial id `trial` under `seed`. Writes `n` entries of `±1`
/// to `outcome`; `stats` may be null.
///
/// # Safety
/// `set` must be a live handle, `outcome` must have room for `n` values and
/// `stats` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ghzsim_run_trial(
    set: *const GhzsimSet,
    variant: GhzsimVariant,
    seed: u64,
    trial: u64,
    outcome: *mut i8,
    stats: *mut GhzsimTrialStats,
) -> GhzsimStatus {
    guard(|| {
        let s = handle(set)?;
        if outcome.is_null() {
            return Err(null("outcome"));
        }
        let cfg = ProtocolConfig::new(to_variant(variant), seed, 1);
        let (x, t) = run_trial(&s.set, &cfg, trial)?;
        std::ptr::copy_nonoverlapping(x.as_ptr(), outcome, x.len());
        if let Some(st) = stats.as_mut() {
            *st = GhzsimTrialStats {
                random_bits: t.random_bits,
                bits_to_leader: t.bits_to_leader,
                bits_from_leader: t.bits_from_leader,
                outer_rounds: t.outer_rounds,
                inner_k_final: t.inner_k_final,
                bernoulli_k_final: t.bernoulli_k_final,
                parallel_time_steps: t.parallel_time_steps,
            };
        }
        Ok(())
    })
}

/// Runs trials `0..trials` across the available cores. When `counts` is
/// non-null it receives `2^n` outcome counts indexed by mask, which requires
/// `n ≤ 16`. `summary` may be null.
///
/// # Safety
/// `set` must be a live handle, `counts` null or room for `2^n` values and
/// `summary` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ghzsim_sample(
    set: *const GhzsimSet,
    variant: GhzsimVariant,
    seed: u64,
    trials: u64,
    counts: *mut u64,
    summary: *mut GhzsimSampleSummary,
) -> GhzsimStatus {
    guard(|| {
        let s = handle(set)?;
        let n = s.set.n();
        if !counts.is_null() && n > N_ENUM {
            return Err(Error::TooLarge { n, cap: N_ENUM }.into());
        }
        if trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()).into());
        }
        let v = to_variant(variant);
        let cfg = ProtocolConfig::new(v, seed, trials);
        let runs = run_prepared_trials(&s.set, &cfg, 0..trials)?;
        let rows: Vec<TrialSummary> = runs.iter().map(TrialSummary::from).collect();
        if !counts.is_null() {
            let c = outcome_counts(n, &rows);
            std::ptr::copy_nonoverlapping(c.as_ptr(), counts, c.len());
        }
        if let Some(out) = summary.as_mut() {
            let r = aggregate(n, v, &rows, 0)?;
            *out = GhzsimSampleSummary {
                trials,
                mean_random_bits: r.random_bits.mean,
                mean_total_bits: r.total_bits.mean,
                mean_outer_rounds: r.outer_rounds.mean,
                mean_parallel_time_steps: r.parallel_time_steps.mean,
                budget_pass: r.all_pass as i32,
            };
        }
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn ghzsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ghzsim_status_string(status: GhzsimStatus) -> *const c_char {
    let s: &'static CStr = match status {
        GhzsimStatus::Ok => c"ok",
        GhzsimStatus::NullPointer => c"null pointer",
        GhzsimStatus::InvalidUtf8 => c"invalid UTF-8",
        GhzsimStatus::InvalidAngle => c"invalid angle",
        GhzsimStatus::InvalidConfig => c"invalid configuration",
        GhzsimStatus::TooLarge => c"too many parties",
        GhzsimStatus::NotEquatorial => c"measurement set is not equatorial",
        GhzsimStatus::PrecisionExhausted => c"precision exhausted",
        GhzsimStatus::DepthExceeded => c"depth cap exceeded",
        GhzsimStatus::TapeExhausted => c"bit tape exhausted",
        GhzsimStatus::InsufficientSamples => c"insufficient samples",
        GhzsimStatus::Io => c"io error",
        GhzsimStatus::Internal => c"internal error",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn ghzsim_version() -> *const c_char {
    const V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    V.as_ptr()
}
