//! C ABI over the `gelation` library.
//!
//! Models live behind an opaque `GelModel` handle created by
//! `gel_model_new` / `gel_model_from_json` and released with `gel_model_free`.
//! Every fallible call returns a `GelStatus`; on failure a message is
//! available from `gel_last_error` on the same thread. Results are written
//! through caller-owned out-pointers, vector outputs into caller buffers whose
//! length is passed alongside.
//!
//! Panics never cross the boundary: they are reported as `GEL_STATUS_PANIC`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gelation::branching::{
    extinction_fixed_point, extinction_series, simulate_branching_replicas, BranchingCaps,
    MeanMatrix,
};
use gelation::graph_sim::sample_graph;
use gelation::lambert_euler::invert;
use gelation::smoluchowski::{total_mass, zeta};
use gelation::{classify, gelation_time, ClusterSize, Error, ModelParams, Phase, SquareMatrix};

/// Opaque model handle.
pub struct GelModel {
    params: ModelParams,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GelStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NoConvergence = 3,
    SizeOverflow = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GelPhase {
    Subcritical = 0,
    Critical = 1,
    Supercritical = 2,
}

impl From<Phase> for GelPhase {
    fn from(p: Phase) -> Self {
        match p {
            Phase::Subcritical => GelPhase::Subcritical,
            Phase::Critical => GelPhase::Critical,
            Phase::Supercritical => GelPhase::Supercritical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(GelStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NoConvergence { .. } => GelStatus::NoConvergence,
            Error::SizeOverflow { .. } => GelStatus::SizeOverflow,
            _ => GelStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GelStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GelStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GelStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            GelStatus::Panic
        }
    }
}

unsafe fn params_of<'a>(m: *const GelModel) -> Result<&'a ModelParams, Failure> {
    m.as_ref().map(|m| &m.params).ok_or_else(|| null("model"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn out_slice<'a>(
    p: *mut f64,
    len: usize,
    need: usize,
    what: &str,
) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(Failure(
            GelStatus::BufferTooSmall,
            format!("{what} holds {len} values, need {need}"),
        ));
    }
    Ok(slice::from_raw_parts_mut(p, need))
}

fn boxed(params: ModelParams) -> *mut GelModel {
    Box::into_raw(Box::new(GelModel { params }))
}

/// Builds and validates a model from a row-major `k x k` matrix and `k` densities.
///
/// # Safety
/// `v` must point to `k * k` doubles, `alpha` to `k` doubles, `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn gel_model_new(
    k: usize,
    v: *const f64,
    alpha: *const f64,
    out_model: *mut *mut GelModel,
) -> GelStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        *slot = ptr::null_mut();
        if v.is_null() || alpha.is_null() {
            return Err(null("v or alpha"));
        }
        if k == 0 {
            return Err(Failure(GelStatus::InvalidInput, "k must be >= 1".into()));
        }
        let cells = k
            .checked_mul(k)
            .ok_or_else(|| Failure(GelStatus::InvalidInput, "k too large".into()))?;
        let v = SquareMatrix::from_row_major(k, slice::from_raw_parts(v, cells).to_vec())
            .expect("length is k * k");
        let params = ModelParams::new(v, slice::from_raw_parts(alpha, k).to_vec())?;
        *slot = boxed(params);
        Ok(())
    })
}

/// Parses `{"k": .., "V": [[..]], "alpha": [..]}` and validates it.
///
/// # Safety
/// `json` must be a nul-terminated string; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gel_model_from_json(
    json: *const c_char,
    out_model: *mut *mut GelModel,
) -> GelStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        *slot = ptr::null_mut();
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(GelStatus::InvalidInput, format!("json is not UTF-8: {e}")))?;
        *slot = boxed(ModelParams::from_json_str(text)?);
        Ok(())
    })
}

/// Releases a model. Null is a no-op.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gel_model_free(model: *mut GelModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of types, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gel_model_dim(model: *const GelModel) -> usize {
    model.as_ref().map_or(0, |m| m.params.k())
}

/// # Safety
/// `model` must be a live handle; `out_t` writable. Infinite when `V` is zero.
#[no_mangle]
pub unsafe extern "C" fn gel_gelation_time(model: *const GelModel, out_t: *mut f64) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let slot = out(out_t, "out_t")?;
        *slot = gelation_time(p)?;
        Ok(())
    })
}

/// Phase of `alpha t` and `rho(V D[alpha] t)`.
///
/// # Safety
/// `model` must be a live handle; `out_phase` and `out_rho` writable.
#[no_mangle]
pub unsafe extern "C" fn gel_classify(
    model: *const GelModel,
    t: f64,
    out_phase: *mut GelPhase,
    out_rho: *mut f64,
) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let phase = out(out_phase, "out_phase")?;
        let rho = out(out_rho, "out_rho")?;
        let r = classify(p, t)?;
        *phase = r.phase.into();
        *rho = r.rho;
        Ok(())
    })
}

/// Cluster density `zeta_x(t)` for the composition `x[0..k]`.
///
/// # Safety
/// `x` must point to `k` values; `out_zeta` writable.
#[no_mangle]
pub unsafe extern "C" fn gel_zeta(
    model: *const GelModel,
    x: *const u32,
    k: usize,
    t: f64,
    out_zeta: *mut f64,
) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let slot = out(out_zeta, "out_zeta")?;
        if x.is_null() {
            return Err(null("x"));
        }
        if k != p.k() {
            return Err(Failure(
                GelStatus::InvalidInput,
                format!("x has {k} entries, model has {}", p.k()),
            ));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Failure(
                GelStatus::InvalidInput,
                format!("time must be >= 0, got {t}"),
            ));
        }
        let x = ClusterSize::new(slice::from_raw_parts(x, k).to_vec())?;
        *slot = zeta(p, &x, t);
        Ok(())
    })
}

/// Truncated mass `sum_{|x| <= nmax} zeta_x(t) x` into `out_mass[0..k]`.
///
/// # Safety
/// `out_mass` must hold `len` doubles; `out_tail` writable.
#[no_mangle]
pub unsafe extern "C" fn gel_total_mass(
    model: *const GelModel,
    t: f64,
    nmax: usize,
    out_mass: *mut f64,
    len: usize,
    out_tail: *mut f64,
) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let mass = out_slice(out_mass, len, p.k(), "out_mass")?;
        let tail = out(out_tail, "out_tail")?;
        let r = total_mass(p, t, nmax)?;
        mass.copy_from_slice(&r.mass);
        *tail = r.tail_bound;
        Ok(())
    })
}

/// Smallest solution `y` of `y e^{-Vy} = alpha t e^{-V alpha t}`.
/// `out_iterations` and `out_residual` may be null.
///
/// # Safety
/// `out_y` must hold `len` doubles; the optional out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gel_invert(
    model: *const GelModel,
    t: f64,
    out_y: *mut f64,
    len: usize,
    out_iterations: *mut usize,
    out_residual: *mut f64,
) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let y = out_slice(out_y, len, p.k(), "out_y")?;
        let r = invert(p, t)?;
        y.copy_from_slice(&r.y);
        if let Some(it) = out_iterations.as_mut() {
            *it = r.iterations;
        }
        if let Some(res) = out_residual.as_mut() {
            *res = r.residual;
        }
        Ok(())
    })
}

/// Extinction probabilities of the branching process with `M = V D[alpha] t`,
/// as the smallest fixed point of the offspring pgf.
///
/// # Safety
/// `out_eta` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gel_extinction_fixed_point(
    model: *const GelModel,
    t: f64,
    out_eta: *mut f64,
    len: usize,
) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let eta = out_slice(out_eta, len, p.k(), "out_eta")?;
        let m = MeanMatrix::from_model(p, t)?;
        eta.copy_from_slice(&extinction_fixed_point(&m)?.eta);
        Ok(())
    })
}

/// Extinction probabilities from the truncated cluster series.
///
/// # Safety
/// `out_eta` must hold `len` doubles; `out_tail` writable.
#[no_mangle]
pub unsafe extern "C" fn gel_extinction_series(
    model: *const GelModel,
    t: f64,
    nmax: usize,
    out_eta: *mut f64,
    len: usize,
    out_tail: *mut f64,
) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let eta = out_slice(out_eta, len, p.k(), "out_eta")?;
        let tail = out(out_tail, "out_tail")?;
        let r = extinction_series(p, t, nmax)?;
        eta.copy_from_slice(&r.eta);
        *tail = r.tail_bound;
        Ok(())
    })
}

/// Runs `replicas` lineages from one individual of `start_type` and counts
/// the extinct ones. Replica `r` uses seed `seed ^ r`.
///
/// # Safety
/// `out_extinct` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gel_simulate_branching(
    model: *const GelModel,
    t: f64,
    start_type: usize,
    seed: u64,
    replicas: u64,
    max_generations: u64,
    population_cap: u64,
    out_extinct: *mut u64,
) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let slot = out(out_extinct, "out_extinct")?;
        if start_type >= p.k() {
            return Err(Failure(
                GelStatus::InvalidInput,
                format!("start_type {start_type} out of range for k = {}", p.k()),
            ));
        }
        let m = MeanMatrix::from_model(p, t)?;
        let caps = BranchingCaps {
            max_generations,
            population_cap,
        };
        *slot = simulate_branching_replicas(&m, start_type, seed, replicas, caps).extinct;
        Ok(())
    })
}

/// Largest-component fraction of one sampled random multipartite graph.
///
/// # Safety
/// `out_fraction` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gel_sample_giant_fraction(
    model: *const GelModel,
    t: f64,
    n: u64,
    seed: u64,
    out_fraction: *mut f64,
) -> GelStatus {
    guard(|| {
        let p = params_of(model)?;
        let slot = out(out_fraction, "out_fraction")?;
        *slot = sample_graph(p, t, n, seed)?.giant_fraction();
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn gel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn gel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
