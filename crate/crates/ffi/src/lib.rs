//! C ABI over the persistence, landscape and allocation routines.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns a
//! [`TdaStatus`]; on failure [`tda_last_error`] describes the cause for the
//! calling thread. Panics are caught and reported as `TDA_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use chrono::NaiveDate;
use tda_portfolio::embedding::{EmbeddingParams, Transform};
use tda_portfolio::landscape::{landscape_from_diagram, lp_norm, norm_series, LandscapeConfig};
use tda_portfolio::persistence::cloud_diagram;
use tda_portfolio::scoring::{allocate, AllocationMode};
use tda_portfolio::{
    Error, PersistenceDiagram, PersistenceLandscape, PointCloud, PriceSeries, ThresholdPolicy,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    OutOfRange = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdaTransform {
    LogPrice = 0,
    RawPrice = 1,
    LogReturn = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdaAllocationMode {
    Normalized = 0,
    PaperLiteral = 1,
}

/// One persistence interval; `death` is `INFINITY` for essential classes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdaPair {
    pub dimension: u32,
    pub birth: f64,
    pub death: f64,
}

/// Opaque persistence diagram.
pub struct TdaDiagram(PersistenceDiagram);

/// Opaque persistence landscape.
pub struct TdaLandscape(PersistenceLandscape);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(TdaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InsufficientData { .. } => TdaStatus::InsufficientData,
            _ => TdaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TdaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TdaStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {message}"));
            TdaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TdaStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: String) -> Failure {
    Failure(TdaStatus::InvalidArgument, message)
}

/// # Safety
/// `ptr` must be valid for `len` reads unless `len` is 0.
unsafe fn input<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

/// # Safety
/// `ptr` must be null or point to a live value of type `T`.
unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `ptr` must be null or valid for one write.
unsafe fn write_out<T>(ptr: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    ptr.write(value);
    Ok(())
}

/// # Safety
/// `out` must be null or valid for one write.
unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tda_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn tda_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Rips persistence (H0 and H1) of `n_points` points in `dim` dimensions,
/// stored row-major in `coords`. A negative `threshold` uses the largest
/// pairwise distance.
///
/// # Safety
/// `coords` must hold `n_points * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tda_diagram_from_points(
    coords: *const f64,
    n_points: usize,
    dim: usize,
    threshold: f64,
    out: *mut *mut TdaDiagram,
) -> TdaStatus {
    guard(|| {
        let len = n_points
            .checked_mul(dim)
            .ok_or_else(|| invalid("n_points * dim overflows".into()))?;
        let coords = input(coords, len, "coords")?;
        let cloud = PointCloud::from_flat(coords.to_vec(), dim, epoch())?;
        let policy = if threshold < 0.0 {
            ThresholdPolicy::Enclosing
        } else {
            ThresholdPolicy::Fixed(threshold)
        };
        let diagram = cloud_diagram(&cloud, policy)?;
        write_handle(out, TdaDiagram(diagram))
    })
}

/// # Safety
/// `diagram` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tda_diagram_free(diagram: *mut TdaDiagram) {
    if !diagram.is_null() {
        drop(Box::from_raw(diagram));
    }
}

/// Number of pairs in `diagram`, 0 for a null handle.
///
/// # Safety
/// `diagram` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tda_diagram_len(diagram: *const TdaDiagram) -> usize {
    diagram.as_ref().map_or(0, |d| d.0.pairs().len())
}

/// # Safety
/// `diagram` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tda_diagram_pair(
    diagram: *const TdaDiagram,
    index: usize,
    out: *mut TdaPair,
) -> TdaStatus {
    guard(|| {
        let d = handle(diagram, "diagram")?;
        let p = d.0.pairs().get(index).ok_or_else(|| {
            Failure(
                TdaStatus::OutOfRange,
                format!("pair {index} of {}", d.0.pairs().len()),
            )
        })?;
        let pair = TdaPair {
            dimension: p.dimension as u32,
            birth: p.birth,
            death: p.death,
        };
        write_out(out, pair, "out")
    })
}

/// Landscape of the finite intervals of one homology dimension.
///
/// # Safety
/// `diagram` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tda_diagram_landscape(
    diagram: *const TdaDiagram,
    dimension: u32,
    out: *mut *mut TdaLandscape,
) -> TdaStatus {
    guard(|| {
        let d = handle(diagram, "diagram")?;
        let l = landscape_from_diagram(&d.0, dimension as usize);
        write_handle(out, TdaLandscape(l))
    })
}

/// Landscape of `n` finite intervals `(births[i], deaths[i])`.
///
/// # Safety
/// `births` and `deaths` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tda_landscape_from_intervals(
    births: *const f64,
    deaths: *const f64,
    n: usize,
    out: *mut *mut TdaLandscape,
) -> TdaStatus {
    guard(|| {
        let b = input(births, n, "births")?;
        let d = input(deaths, n, "deaths")?;
        let mut intervals = Vec::with_capacity(n);
        for (i, (&b, &d)) in b.iter().zip(d).enumerate() {
            if !(b.is_finite() && d.is_finite() && b <= d) {
                return Err(invalid(format!("interval {i} ({b}, {d}) is not finite with birth <= death")));
            }
            intervals.push((b, d));
        }
        let l = PersistenceLandscape::from_intervals(&intervals);
        write_handle(out, TdaLandscape(l))
    })
}

/// # Safety
/// `landscape` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tda_landscape_free(landscape: *mut TdaLandscape) {
    if !landscape.is_null() {
        drop(Box::from_raw(landscape));
    }
}

/// Number of nonzero levels, 0 for a null handle.
///
/// # Safety
/// `landscape` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tda_landscape_depth(landscape: *const TdaLandscape) -> usize {
    landscape.as_ref().map_or(0, |l| l.0.depth())
}

/// `λ_k(x)` with `k` counted from 1.
///
/// # Safety
/// `landscape` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tda_landscape_eval(
    landscape: *const TdaLandscape,
    k: usize,
    x: f64,
    out: *mut f64,
) -> TdaStatus {
    guard(|| {
        let l = handle(landscape, "landscape")?;
        if k == 0 {
            return Err(Failure(TdaStatus::OutOfRange, "levels are numbered from 1".into()));
        }
        write_out(out, l.0.eval(k, x), "out")
    })
}

/// Exact `Lp` norm, `p >= 1`.
///
/// # Safety
/// `landscape` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tda_landscape_norm(
    landscape: *const TdaLandscape,
    p: f64,
    out: *mut f64,
) -> TdaStatus {
    guard(|| {
        let l = handle(landscape, "landscape")?;
        write_out(out, lp_norm(&l.0, p)?, "out")
    })
}

/// H1 landscape norms of every embedding window of a daily close series.
/// `transform` is one of the `TdaTransform` values.
///
/// Writes one value per window into `out`. If `capacity` is too small
/// nothing is written, `*written` holds the required length and the call
/// returns `TDA_STATUS_BUFFER_TOO_SMALL`.
///
/// # Safety
/// `closes` must hold `n` doubles, `out` must have room for `capacity`
/// doubles and `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tda_norm_series(
    closes: *const f64,
    n: usize,
    dimension: usize,
    window: usize,
    transform: u32,
    p: f64,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> TdaStatus {
    guard(|| {
        let closes = input(closes, n, "closes")?;
        let transform = match transform {
            t if t == TdaTransform::LogPrice as u32 => Transform::LogPrice,
            t if t == TdaTransform::RawPrice as u32 => Transform::RawPrice,
            t if t == TdaTransform::LogReturn as u32 => Transform::LogReturn,
            t => return Err(invalid(format!("unknown transform {t}"))),
        };
        let params = EmbeddingParams::new(dimension, window, transform)?;
        let series = PriceSeries::daily("series", epoch(), closes)?;
        let config = LandscapeConfig {
            p,
            ..LandscapeConfig::default()
        };
        let norms = norm_series(&series, &params, ThresholdPolicy::Enclosing, &config)?;
        let values: Vec<f64> = norms.observations.iter().map(|&(_, v)| v).collect();
        write_out(written, values.len(), "written")?;
        if values.len() > capacity {
            return Err(Failure(
                TdaStatus::BufferTooSmall,
                format!("{} norms, buffer holds {capacity}", values.len()),
            ));
        }
        if !values.is_empty() {
            if out.is_null() {
                return Err(null("out"));
            }
            std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        }
        Ok(())
    })
}

/// Portfolio weights for `n` composite scores; negative scores get weight 0.
/// `mode` is one of the `TdaAllocationMode` values.
///
/// # Safety
/// `scores` must hold `n` doubles and `weights` must have room for `n`.
#[no_mangle]
pub unsafe extern "C" fn tda_allocate(
    scores: *const f64,
    n: usize,
    mode: u32,
    weights: *mut f64,
) -> TdaStatus {
    guard(|| {
        let s = input(scores, n, "scores")?;
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("score {i} is not finite")));
        }
        let mode = match mode {
            m if m == TdaAllocationMode::Normalized as u32 => AllocationMode::Normalized,
            m if m == TdaAllocationMode::PaperLiteral as u32 => AllocationMode::PaperLiteral,
            m => return Err(invalid(format!("unknown allocation mode {m}"))),
        };
        let named: Vec<(String, f64)> = s.iter().enumerate().map(|(i, &v)| (i.to_string(), v)).collect();
        let alloc = allocate(&named, mode, epoch());
        if n > 0 && weights.is_null() {
            return Err(null("weights"));
        }
        for (i, (_, w)) in alloc.weights.iter().enumerate() {
            weights.add(i).write(*w);
        }
        Ok(())
    })
}
