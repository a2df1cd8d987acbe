//! C ABI for the planner and the simulation harness.
//!
//! Configuration crosses the boundary as JSON (the same schema the CLI
//! reads); results come back as JSON strings or scalars. Handles are opaque;
//! every function returns a [`BpStatus`] and a failing call stores a message
//! retrievable with [`bp_last_error`]. All functions catch panics.
//!
//! The header is generated into `include/beamplan.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use beamplan::arraysim::dft_codebook;
use beamplan::error::Error;
use beamplan::harness::{run_experiment, ExperimentConfig};
use beamplan::planner::{realize_plan, solve, Plan};
use beamplan::skeleton::QuantizedSkeleton;
use beamplan::stochastic::{build_scenario, derive_process, SkeletonProcess};

/// Status codes returned by every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    InvalidArgument = 1,
    SchemaError = 2,
    Capacity = 3,
    NullConditioning = 4,
    ModelMismatch = 5,
    Infeasible = 6,
    Io = 7,
    Serde = 8,
    NullPointer = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let fallback = CString::new("error message contained NUL").unwrap();
    let msg = CString::new(message).unwrap_or(fallback);
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> BpStatus {
    match err.class() {
        "invalid-argument" => BpStatus::InvalidArgument,
        "schema-error" => BpStatus::SchemaError,
        "capacity" => BpStatus::Capacity,
        "null-conditioning" => BpStatus::NullConditioning,
        "model-mismatch" => BpStatus::ModelMismatch,
        "infeasible" => BpStatus::Infeasible,
        "io" => BpStatus::Io,
        _ => BpStatus::Serde,
    }
}

fn fail(err: Error) -> BpStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn guarded(body: impl FnOnce() -> BpStatus) -> BpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            BpStatus::Panic
        }
    }
}

/// An adaptive measurement plan bound to its skeleton process.
pub struct BpPlan {
    process: SkeletonProcess,
    plan: Plan,
}

unsafe fn read_cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().ok()
}

fn build_plan(config_json: &str) -> Result<BpPlan, Error> {
    let config: ExperimentConfig = serde_json::from_str(config_json)?;
    config.validate()?;
    let scenario = build_scenario(&config.scenario, config.seed)?;
    let f_book = dft_codebook(config.books.n_bs, config.books.bs_beams)?;
    let w_book = dft_codebook(config.books.n_ue, config.books.ue_beams)?;
    let path_count = scenario
        .path_count()
        .ok_or_else(|| Error::InvalidArgument("inconsistent path counts".into()))?;
    let blockage = config.blockage.to_model(path_count)?;
    let process = derive_process(
        &scenario,
        &blockage,
        &f_book,
        &w_book,
        config.planner.l,
        config.planner.state_cap,
    )?;
    let plan = solve(&process, &config.planner, process.m())?;
    Ok(BpPlan { process, plan })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bp_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Copy the last error message (NUL-terminated, truncated to `cap`) into
/// `buf`; returns the full message length in bytes, or 0 if none.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be null (then only
/// the length is returned).
#[no_mangle]
pub unsafe extern "C" fn bp_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len() - 1
    })
}

/// Build the optimal plan for the experiment configuration (JSON, same
/// schema as the CLI). On success `*out` owns the new handle.
///
/// # Safety
/// `config_json` must be a NUL-terminated UTF-8 string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn bp_plan_new(
    config_json: *const c_char,
    out: *mut *mut BpPlan,
) -> BpStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return BpStatus::NullPointer;
        }
        let Some(config) = (unsafe { read_cstr(config_json) }) else {
            set_error("config_json is null or not UTF-8");
            return BpStatus::NullPointer;
        };
        match build_plan(config) {
            Ok(plan) => {
                unsafe { *out = Box::into_raw(Box::new(plan)) };
                BpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a plan handle. Null is a no-op.
///
/// # Safety
/// `plan` must be a pointer returned by [`bp_plan_new`], at most once.
#[no_mangle]
pub unsafe extern "C" fn bp_plan_free(plan: *mut BpPlan) {
    if !plan.is_null() {
        drop(unsafe { Box::from_raw(plan) });
    }
}

/// Expected number of reference points of the plan.
///
/// # Safety
/// `plan` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bp_plan_expected_k(plan: *const BpPlan, out: *mut f64) -> BpStatus {
    guarded(|| {
        let (Some(plan), false) = (unsafe { plan.as_ref() }, out.is_null()) else {
            set_error("null pointer");
            return BpStatus::NullPointer;
        };
        unsafe { *out = plan.plan.expected_k().to_f64() };
        BpStatus::Ok
    })
}

/// First location the plan measures.
///
/// # Safety
/// `plan` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bp_plan_root(plan: *const BpPlan, out: *mut u32) -> BpStatus {
    guarded(|| {
        let (Some(plan), false) = (unsafe { plan.as_ref() }, out.is_null()) else {
            set_error("null pointer");
            return BpStatus::NullPointer;
        };
        unsafe { *out = plan.plan.root() as u32 };
        BpStatus::Ok
    })
}

/// Serialize the plan (decisions keyed by beam-index skeletons) to JSON.
/// The returned string must be released with [`bp_string_free`].
///
/// # Safety
/// `plan` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bp_plan_to_json(
    plan: *const BpPlan,
    out: *mut *mut c_char,
) -> BpStatus {
    guarded(|| {
        let (Some(plan), false) = (unsafe { plan.as_ref() }, out.is_null()) else {
            set_error("null pointer");
            return BpStatus::NullPointer;
        };
        let doc = plan.plan.to_doc(&plan.process);
        match serde_json::to_string(&doc) {
            Ok(body) => {
                let s = CString::new(body).expect("JSON has no NUL");
                unsafe { *out = s.into_raw() };
                BpStatus::Ok
            }
            Err(e) => fail(e.into()),
        }
    })
}

/// Realize the plan against measured skeletons supplied by the callback and
/// return the realized partition as JSON. The callback receives a 1-based
/// location, must fill `pairs` (length `2 * L`) with the `(bs, ue)` beam
/// indices of the skeleton observed there (-1 marking a blocked slot), and
/// return 0 on success.
///
/// # Safety
/// `plan` must be a live handle, `out` valid; the callback must honor the
/// buffer contract.
#[no_mangle]
pub unsafe extern "C" fn bp_plan_realize(
    plan: *const BpPlan,
    measure: Option<
        extern "C" fn(location: u32, pairs: *mut i32, len: usize, user: *mut libc::c_void) -> i32,
    >,
    user: *mut libc::c_void,
    out: *mut *mut c_char,
) -> BpStatus {
    guarded(|| {
        let (Some(handle), Some(measure), false) =
            (unsafe { plan.as_ref() }, measure, out.is_null())
        else {
            set_error("null pointer");
            return BpStatus::NullPointer;
        };
        let l = handle.process.l();
        let mut fetch = |loc: usize| -> Result<QuantizedSkeleton, Error> {
            let mut pairs = vec![-1i32; 2 * l];
            let rc = measure(loc as u32, pairs.as_mut_ptr(), pairs.len(), user);
            if rc != 0 {
                return Err(Error::ModelMismatch(format!(
                    "measurement callback failed with code {rc} at location {loc}"
                )));
            }
            let slots = pairs
                .chunks(2)
                .map(|c| {
                    if c[0] < 0 || c[1] < 0 {
                        None
                    } else {
                        Some(beamplan::skeleton::BeamPair {
                            bs: c[0] as u16,
                            ue: c[1] as u16,
                        })
                    }
                })
                .collect();
            Ok(QuantizedSkeleton::new(slots))
        };
        match realize_plan(&handle.plan, &handle.process, &mut fetch) {
            Ok(partition) => match serde_json::to_string(&partition) {
                Ok(body) => {
                    let s = CString::new(body).expect("JSON has no NUL");
                    unsafe { *out = s.into_raw() };
                    BpStatus::Ok
                }
                Err(e) => fail(e.into()),
            },
            Err(e) => fail(e),
        }
    })
}

/// Run the full experiment described by the configuration JSON and return
/// the report as JSON. Release the string with [`bp_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated UTF-8 string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bp_simulate(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> BpStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return BpStatus::NullPointer;
        }
        let Some(config) = (unsafe { read_cstr(config_json) }) else {
            set_error("config_json is null or not UTF-8");
            return BpStatus::NullPointer;
        };
        let config: ExperimentConfig = match serde_json::from_str(config) {
            Ok(c) => c,
            Err(e) => return fail(e.into()),
        };
        match run_experiment(&config) {
            Ok(report) => match serde_json::to_string(&report) {
                Ok(body) => {
                    let s = CString::new(body).expect("JSON has no NUL");
                    unsafe { *out = s.into_raw() };
                    BpStatus::Ok
                }
                Err(e) => fail(e.into()),
            },
            Err(e) => fail(e),
        }
    })
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library, at most once.
#[no_mangle]
pub unsafe extern "C" fn bp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
