//! C ABI over the `sst_topk` library.
//!
//! Instances live behind an opaque [`SstInstance`] handle. Every fallible
//! function returns an [`SstStatus`]; on failure the message is kept per
//! thread and can be read with [`sst_last_error_message`]. Panics never cross
//! the boundary and are reported as [`SstStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sst_topk::domination::DominationSolver;
use sst_topk::harness::{self, SuccessEstimate};
use sst_topk::info::{info_vec, lb_domination, lb_topk, LowerBound};
use sst_topk::io::{self, Instance};
use sst_topk::model::{domination_from_topk, embed_domination, DominationInstance};
use sst_topk::oracles;

/// Status returned by every fallible call. The numeric values of
/// `Parameter`, `Resource` and `Invariant` match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SstStatus {
    Ok = 0,
    NullPointer = 1,
    Parameter = 2,
    Resource = 3,
    Invariant = 4,
    InvalidUtf8 = 5,
    WrongKind = 6,
    Panic = 7,
}

/// Kind of instance held by a handle.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SstKind {
    TopK = 0,
    Domination = 1,
}

/// Domination solvers reachable through [`sst_estimate_success`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SstSolver {
    Count = 0,
    Max = 1,
    Comb = 2,
    Cube = 3,
    Coup = 4,
    /// Counting restricted to the coordinates passed alongside.
    Subset = 5,
    /// Maximum a posteriori rule (needs the instance parameters).
    Bayes = 6,
}

/// Exact quantities computed by [`sst_exact_oracle`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SstOracle {
    SuccessCount = 0,
    SuccessMax = 1,
    SuccessBayes = 2,
    MutualInformation = 3,
}

/// Summary of an instance. Lower bounds that do not exist are reported as
/// positive infinity (no information) or NaN (the Top-K embedding is not
/// available for this domination instance).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SstInfo {
    pub n: usize,
    pub total_bits: f64,
    pub l1_gap: f64,
    pub l2_gap_sq: f64,
    pub linf_gap: f64,
    pub lb_domination: f64,
    pub lb_topk: f64,
}

/// Monte Carlo success estimate with its 95% Wilson interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SstEstimate {
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// Empirical minimum sample count. When `reached` is 0 the target was not
/// met below the cap and `r_hat` is 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SstRmin {
    pub reached: u8,
    pub r_hat: usize,
    pub r_low: usize,
}

/// Opaque instance handle.
pub struct SstInstance {
    inner: Instance,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: SstStatus,
    message: String,
}

impl Failure {
    fn new(status: SstStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }
}

impl From<sst_topk::Error> for Failure {
    fn from(e: sst_topk::Error) -> Self {
        let status = match e.exit_code() {
            3 => SstStatus::Resource,
            4 => SstStatus::Invariant,
            _ => SstStatus::Parameter,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    // interior NULs would truncate the C string, so replace them
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `body`, converting errors and panics into a status code.
fn guard<F>(body: F) -> SstStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let text = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure::new(SstStatus::Panic, format!("panic: {text}")))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            SstStatus::Ok
        }
        Err(f) => {
            set_last_error(f.message);
            f.status
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(SstStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(SstStatus::NullPointer, format!("{what} is null")))
}

fn domination(handle: &SstInstance) -> Result<&DominationInstance, Failure> {
    match &handle.inner {
        Instance::Domination(d) => Ok(d),
        Instance::TopK(_) => Err(Failure::new(SstStatus::WrongKind, "expected a domination instance")),
    }
}

fn estimate_out(e: &SuccessEstimate) -> SstEstimate {
    SstEstimate {
        trials: e.trials,
        successes: e.successes,
        p_hat: e.p_hat,
        wilson_low: e.wilson_low,
        wilson_high: e.wilson_high,
    }
}

unsafe fn solver_from(
    algo: SstSolver,
    alpha: f64,
    subset: *const usize,
    subset_len: usize,
) -> Result<Option<DominationSolver>, Failure> {
    Ok(Some(match algo {
        SstSolver::Count => DominationSolver::Count,
        SstSolver::Max => DominationSolver::Max,
        SstSolver::Comb => DominationSolver::Comb { alpha },
        SstSolver::Cube => DominationSolver::Cube,
        SstSolver::Coup => DominationSolver::Coup { alpha },
        SstSolver::Subset => {
            if subset.is_null() {
                return Err(Failure::new(SstStatus::NullPointer, "subset is null"));
            }
            DominationSolver::Subset(std::slice::from_raw_parts(subset, subset_len).to_vec())
        }
        SstSolver::Bayes => return Ok(None),
    }))
}

fn lb_value(lb: LowerBound) -> f64 {
    lb.finite().unwrap_or(f64::INFINITY)
}

/// Message of the last failed call on this thread, or null if the last call
/// succeeded. The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sst_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an instance from a NUL-terminated JSON document and stores a new
/// handle in `*out`. Release it with [`sst_instance_free`].
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sst_instance_from_json(json: *const c_char, out: *mut *mut SstInstance) -> SstStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if json.is_null() {
            return Err(Failure::new(SstStatus::NullPointer, "json is null"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure::new(SstStatus::InvalidUtf8, format!("json is not UTF-8: {e}")))?;
        let inner = io::from_json(text)?;
        *out = Box::into_raw(Box::new(SstInstance { inner }));
        Ok(())
    })
}

/// Serializes the instance to its canonical JSON form. The string in `*out`
/// must be released with [`sst_string_free`].
///
/// # Safety
/// `instance` must come from [`sst_instance_from_json`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sst_instance_to_json(instance: *const SstInstance, out: *mut *mut c_char) -> SstStatus {
    guard(|| {
        let handle = deref(instance, "instance")?;
        let out = out_ref(out, "out")?;
        let text = io::to_json(&handle.inner);
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string produced by this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn sst_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases an instance handle. Null is ignored.
///
/// # Safety
/// `instance` must be null or a live handle, freed only once.
#[no_mangle]
pub unsafe extern "C" fn sst_instance_free(instance: *mut SstInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Writes the instance kind to `*out`.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sst_instance_kind(instance: *const SstInstance, out: *mut SstKind) -> SstStatus {
    guard(|| {
        let kind = match deref(instance, "instance")?.inner {
            Instance::TopK(_) => SstKind::TopK,
            Instance::Domination(_) => SstKind::Domination,
        };
        *out_ref(out, "out")? = kind;
        Ok(())
    })
}

/// Fills `*out` with the information summary. Top-K instances are summarized
/// through their reduced domination view.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sst_instance_info(instance: *const SstInstance, out: *mut SstInfo) -> SstStatus {
    guard(|| {
        let handle = deref(instance, "instance")?;
        let out = out_ref(out, "out")?;
        let (d, topk_lb) = match &handle.inner {
            Instance::Domination(d) => {
                (d.clone(), embed_domination(d).ok().map_or(f64::NAN, |t| lb_value(lb_topk(&t))))
            }
            Instance::TopK(t) => (domination_from_topk(t), lb_value(lb_topk(t))),
        };
        let report = info_vec(&d);
        *out = SstInfo {
            n: d.n(),
            total_bits: report.total,
            l1_gap: report.l1_gap,
            l2_gap_sq: report.l2_gap_sq,
            linf_gap: report.linf_gap,
            lb_domination: lb_value(lb_domination(&d)),
            lb_topk: topk_lb,
        };
        Ok(())
    })
}

/// Copies the per-coordinate information into `buf`. Pass a null `buf` to
/// learn the required length through `*len`; otherwise `*len` must hold the
/// buffer capacity and receives the number of values written.
///
/// # Safety
/// `buf` must be null or point to `*len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sst_instance_per_coordinate(
    instance: *const SstInstance,
    buf: *mut f64,
    len: *mut usize,
) -> SstStatus {
    guard(|| {
        let handle = deref(instance, "instance")?;
        let len = out_ref(len, "len")?;
        let values = match &handle.inner {
            Instance::Domination(d) => info_vec(d).per_coordinate,
            Instance::TopK(t) => info_vec(&domination_from_topk(t)).per_coordinate,
        };
        if buf.is_null() {
            *len = values.len();
            return Ok(());
        }
        if *len < values.len() {
            return Err(Failure::new(
                SstStatus::Parameter,
                format!("buffer holds {} values, {} needed", *len, values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(&values);
        *len = values.len();
        Ok(())
    })
}

/// Monte Carlo success probability at `r` columns over `trials` seeded
/// trials. For Top-K instances `algo` is ignored and the Top-K solver runs
/// with `alpha`. `subset` (0-based, `subset_len` entries) is read only for
/// [`SstSolver::Subset`].
///
/// # Safety
/// `instance` and `out` must be valid; `subset` must point to `subset_len`
/// values when the subset solver is chosen.
#[no_mangle]
pub unsafe extern "C" fn sst_estimate_success(
    instance: *const SstInstance,
    algo: SstSolver,
    alpha: f64,
    subset: *const usize,
    subset_len: usize,
    r: usize,
    trials: usize,
    seed: u64,
    out: *mut SstEstimate,
) -> SstStatus {
    guard(|| {
        let handle = deref(instance, "instance")?;
        let out = out_ref(out, "out")?;
        let est = match &handle.inner {
            Instance::TopK(t) => harness::estimate_success_topk(t, alpha, r, trials, seed)?,
            Instance::Domination(d) => match solver_from(algo, alpha, subset, subset_len)? {
                Some(solver) => harness::estimate_success(&solver, d, r, trials, seed)?,
                None => harness::estimate_success_bayes(d, r, trials, seed)?,
            },
        };
        *out = estimate_out(&est);
        Ok(())
    })
}

/// Empirical smallest `r` whose 95% Wilson lower bound reaches `target_p`,
/// searched up to `r_max`. Arguments otherwise follow
/// [`sst_estimate_success`]; the Bayes rule is not searchable here.
///
/// # Safety
/// Same requirements as [`sst_estimate_success`].
#[no_mangle]
pub unsafe extern "C" fn sst_estimate_rmin(
    instance: *const SstInstance,
    algo: SstSolver,
    alpha: f64,
    subset: *const usize,
    subset_len: usize,
    target_p: f64,
    trials: usize,
    seed: u64,
    r_max: usize,
    out: *mut SstRmin,
) -> SstStatus {
    guard(|| {
        let handle = deref(instance, "instance")?;
        let out = out_ref(out, "out")?;
        let est = match &handle.inner {
            Instance::TopK(t) => harness::estimate_rmin_topk(t, "ffi", alpha, target_p, trials, seed, r_max)?,
            Instance::Domination(d) => {
                let solver = solver_from(algo, alpha, subset, subset_len)?
                    .ok_or_else(|| Failure::new(SstStatus::Parameter, "the Bayes rule has no r_min search"))?;
                harness::estimate_rmin(&solver, d, "ffi", target_p, trials, seed, r_max)?
            }
        };
        *out = SstRmin { reached: u8::from(est.reached()), r_hat: est.r_hat.unwrap_or(0), r_low: est.r_low };
        Ok(())
    })
}

/// Exact success probability or mutual information at `r` columns on a
/// domination instance.
///
/// # Safety
/// `instance` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sst_exact_oracle(
    instance: *const SstInstance,
    what: SstOracle,
    r: usize,
    out: *mut f64,
) -> SstStatus {
    guard(|| {
        let d = domination(deref(instance, "instance")?)?;
        let out = out_ref(out, "out")?;
        let v = match what {
            SstOracle::SuccessCount => oracles::exact_success_count(d, r)?,
            SstOracle::SuccessMax => oracles::exact_success_max(d, r)?,
            SstOracle::SuccessBayes => oracles::exact_success_bayes(d, r)?,
            SstOracle::MutualInformation => oracles::exact_mutual_information(d, r)?,
        };
        *out = v.value;
        Ok(())
    })
}
