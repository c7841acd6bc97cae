//! C interface to `wbary`.
//!
//! Objects cross the boundary as opaque pointers that the caller releases
//! with the matching `*_free` function. Fallible calls return a
//! [`WbStatus`]; the message of the most recent failure on the calling
//! thread is available from [`wb_last_error`]. Panics are caught and
//! reported as `WB_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::Array2;
use wbary::{DimensionPolicy, DiscreteDistribution, Error, MapKind, ProjectionMap, SolverOptions};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InputError = 3,
    NumericalFailure = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

pub const WB_MAP_GAUSSIAN: u32 = 0;
pub const WB_MAP_SRHT: u32 = 1;

pub const WB_POLICY_P2: u32 = 0;
pub const WB_POLICY_KIRSZBRAUN: u32 = 1;
pub const WB_POLICY_OPTIMAL: u32 = 2;

/// A list of distributions sharing one dimension.
pub struct WbDistributionSet {
    dim: usize,
    items: Vec<DiscreteDistribution>,
}

/// A solved barycenter.
pub struct WbBarycenter {
    nu: DiscreteDistribution,
    cost: f64,
    /// Cost of the solution among the projected points; NaN when no projection was used.
    cost_low: f64,
}

/// Solver settings. Obtain defaults from [`wb_solver_params_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct WbSolverParams {
    pub support_size: usize,
    pub p: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub restarts: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> WbStatus {
    match e {
        Error::NumericalFailure(_) | Error::InvalidSolution(_) | Error::ZeroWeight | Error::ZeroAtomWeight(_) => WbStatus::NumericalFailure,
        Error::Io(_)
        | Error::ParseError { .. }
        | Error::RaggedRows { .. }
        | Error::BadMagic { .. }
        | Error::TruncatedFile { .. }
        | Error::CountMismatch(..)
        | Error::BadWeights(_) => WbStatus::InputError,
        _ => WbStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and turning panics into `WbStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), (WbStatus, String)>) -> WbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            WbStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (WbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (WbStatus, String) {
    (WbStatus::NullPointer, format!("{what} is null"))
}

/// Reads `len` rows of `dim` atoms and `len` weights from caller memory.
///
/// # Safety
/// `atoms` must hold `len * dim` doubles and `weights` `len` doubles.
unsafe fn read_distribution(atoms: *const f64, weights: *const f64, len: usize, dim: usize) -> Result<DiscreteDistribution, (WbStatus, String)> {
    if atoms.is_null() {
        return Err(null("atoms"));
    }
    if weights.is_null() {
        return Err(null("weights"));
    }
    if len == 0 || dim == 0 {
        return Err((WbStatus::InvalidArgument, "length and dimension must be positive".into()));
    }
    let cells = len.checked_mul(dim).ok_or((WbStatus::InvalidArgument, "size overflow".into()))?;
    let a = std::slice::from_raw_parts(atoms, cells).to_vec();
    let w = std::slice::from_raw_parts(weights, len).to_vec();
    let atoms = Array2::from_shape_vec((len, dim), a).map_err(|e| (WbStatus::InvalidArgument, e.to_string()))?;
    DiscreteDistribution::from_arrays(atoms, w.into()).map_err(lib_err)
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// An empty set for distributions in `R^dim`; null when `dim` is zero.
#[no_mangle]
pub extern "C" fn wb_distribution_set_new(dim: usize) -> *mut WbDistributionSet {
    if dim == 0 {
        set_error("dimension must be positive");
        return ptr::null_mut();
    }
    Box::into_raw(Box::new(WbDistributionSet { dim, items: Vec::new() }))
}

/// Appends a distribution with `len` atoms stored row-major in `atoms`.
/// Weights are normalized if they sum to 1 within a small tolerance.
///
/// # Safety
/// `set` must come from this library; `atoms` must hold `len * dim`
/// doubles and `weights` `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wb_distribution_set_push(set: *mut WbDistributionSet, atoms: *const f64, weights: *const f64, len: usize) -> WbStatus {
    guard(|| {
        let set = set.as_mut().ok_or_else(|| null("set"))?;
        let mu = read_distribution(atoms, weights, len, set.dim)?;
        set.items.push(mu);
        Ok(())
    })
}

/// Number of distributions, or 0 for a null set.
///
/// # Safety
/// `set` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn wb_distribution_set_len(set: *const WbDistributionSet) -> usize {
    set.as_ref().map_or(0, |s| s.items.len())
}

/// # Safety
/// `set` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wb_distribution_set_free(set: *mut WbDistributionSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Reads `dist_id,weight,x_1,...,x_d` rows from a CSV file into a new set.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wb_distribution_set_load_csv(path: *const c_char, out: *mut *mut WbDistributionSet) -> WbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| (WbStatus::InvalidArgument, e.to_string()))?;
        let items = wbary::instances::load_csv_distributions(path).map_err(|e| (status_of(&e), format!("{path}: {e}")))?;
        let dim = wbary::distribution::common_dim(&items).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(WbDistributionSet { dim, items }));
        Ok(())
    })
}

/// `W_p` between two distributions in `R^dim`.
///
/// # Safety
/// Atom arrays must hold `len * dim` doubles, weight arrays `len` doubles,
/// and `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wb_wasserstein(
    a_atoms: *const f64,
    a_weights: *const f64,
    a_len: usize,
    b_atoms: *const f64,
    b_weights: *const f64,
    b_len: usize,
    dim: usize,
    p: f64,
    out: *mut f64,
) -> WbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = read_distribution(a_atoms, a_weights, a_len, dim)?;
        let b = read_distribution(b_atoms, b_weights, b_len, dim)?;
        *out = wbary::transport::wasserstein_p(&a, &b, p).map_err(lib_err)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn wb_solver_params_default(support_size: usize, p: f64) -> WbSolverParams {
    let o = SolverOptions::new(support_size, p);
    WbSolverParams {
        support_size: o.support_size,
        p: o.p,
        max_iters: o.max_outer_iters,
        rel_tol: o.rel_tol,
        seed: o.seed,
        restarts: o.restarts,
    }
}

fn options(params: &WbSolverParams) -> SolverOptions {
    let mut o = SolverOptions::new(params.support_size, params.p).with_seed(params.seed).with_restarts(params.restarts);
    o.max_outer_iters = params.max_iters;
    o.rel_tol = params.rel_tol;
    o
}

unsafe fn inputs<'a>(set: *const WbDistributionSet, params: *const WbSolverParams) -> Result<(&'a WbDistributionSet, SolverOptions), (WbStatus, String)> {
    let set = set.as_ref().ok_or_else(|| null("set"))?;
    let params = params.as_ref().ok_or_else(|| null("params"))?;
    if set.items.is_empty() {
        return Err((WbStatus::InvalidArgument, "distribution set is empty".into()));
    }
    Ok((set, options(params)))
}

/// Solves for a barycenter in the original dimension.
///
/// # Safety
/// `set` and `params` must be valid; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wb_solve_barycenter(set: *const WbDistributionSet, params: *const WbSolverParams, out: *mut *mut WbBarycenter) -> WbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let (set, opts) = inputs(set, params)?;
        let res = wbary::solve_barycenter(&set.items, &opts).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(WbBarycenter {
            nu: res.nu,
            cost: res.report.total_cost,
            cost_low: f64::NAN,
        }));
        Ok(())
    })
}

/// Projects to `m` dimensions with a `WB_MAP_*` map, solves there, and
/// rebuilds the support in the original dimension.
///
/// # Safety
/// `set` and `params` must be valid; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wb_reduce_solve(
    set: *const WbDistributionSet,
    params: *const WbSolverParams,
    map_kind: u32,
    m: usize,
    map_seed: u64,
    out: *mut *mut WbBarycenter,
) -> WbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let (set, opts) = inputs(set, params)?;
        let kind = match map_kind {
            WB_MAP_GAUSSIAN => MapKind::Gaussian,
            WB_MAP_SRHT => MapKind::Srht,
            other => return Err((WbStatus::InvalidArgument, format!("unknown map kind {other}"))),
        };
        let map = ProjectionMap::new(kind, set.dim, m, map_seed).map_err(lib_err)?;
        let res = wbary::reduce_solve_reconstruct(&set.items, &map, &opts).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(WbBarycenter {
            nu: res.nu_high,
            cost: res.cost_high.total_cost,
            cost_low: res.cost_low.total_cost,
        }));
        Ok(())
    })
}

/// Cost in the original dimension; NaN for a null handle.
///
/// # Safety
/// `b` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn wb_barycenter_cost(b: *const WbBarycenter) -> f64 {
    b.as_ref().map_or(f64::NAN, |b| b.cost)
}

/// Cost among the projected points; NaN if the barycenter was not computed by projection.
///
/// # Safety
/// `b` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn wb_barycenter_cost_low(b: *const WbBarycenter) -> f64 {
    b.as_ref().map_or(f64::NAN, |b| b.cost_low)
}

/// # Safety
/// `b` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn wb_barycenter_support_size(b: *const WbBarycenter) -> usize {
    b.as_ref().map_or(0, |b| b.nu.len())
}

/// # Safety
/// `b` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn wb_barycenter_dim(b: *const WbBarycenter) -> usize {
    b.as_ref().map_or(0, |b| b.nu.dim())
}

/// Copies the support row-major into `out`, which holds `cap` doubles.
///
/// # Safety
/// `b` must come from this library and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn wb_barycenter_copy_support(b: *const WbBarycenter, out: *mut f64, cap: usize) -> WbStatus {
    guard(|| {
        let b = b.as_ref().ok_or_else(|| null("barycenter"))?;
        copy_into(b.nu.atoms().iter().copied(), b.nu.len() * b.nu.dim(), out, cap)
    })
}

/// Copies the atom weights into `out`, which holds `cap` doubles.
///
/// # Safety
/// `b` must come from this library and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn wb_barycenter_copy_weights(b: *const WbBarycenter, out: *mut f64, cap: usize) -> WbStatus {
    guard(|| {
        let b = b.as_ref().ok_or_else(|| null("barycenter"))?;
        copy_into(b.nu.weights().iter().copied(), b.nu.len(), out, cap)
    })
}

unsafe fn copy_into(values: impl Iterator<Item = f64>, needed: usize, out: *mut f64, cap: usize) -> Result<(), (WbStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    if cap < needed {
        return Err((WbStatus::BufferTooSmall, format!("buffer holds {cap} values, {needed} needed")));
    }
    let dst = std::slice::from_raw_parts_mut(out, needed);
    for (d, v) in dst.iter_mut().zip(values) {
        *d = v;
    }
    Ok(())
}

/// # Safety
/// `b` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wb_barycenter_free(b: *mut WbBarycenter) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Target dimension for a `WB_POLICY_*` formula. Pass `k = 0` when the
/// number of distributions is unknown (only the optimal policy accepts that).
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wb_jl_dimension(n: usize, eps: f64, delta: f64, p: f64, policy: u32, k: usize, c_jl: f64, out: *mut usize) -> WbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let policy = match policy {
            WB_POLICY_P2 => DimensionPolicy::P2,
            WB_POLICY_KIRSZBRAUN => DimensionPolicy::Kirszbraun,
            WB_POLICY_OPTIMAL => DimensionPolicy::Optimal,
            other => return Err((WbStatus::InvalidArgument, format!("unknown policy {other}"))),
        };
        *out = wbary::jl_dimension(n, eps, delta, p, policy, (k > 0).then_some(k), c_jl).map_err(lib_err)?;
        Ok(())
    })
}
