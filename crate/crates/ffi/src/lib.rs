//! C interface to `vorpoly`.
//!
//! Every function returns a [`VpStatus`]; results go through out-pointers.
//! After a non-`Ok` status, [`vp_last_error`] describes the failure on the
//! calling thread. Tessellations are opaque handles released with
//! [`vp_tessellation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vorpoly::lattice::count_animals_by_size;
use vorpoly::polyomino::{boxes_of, max_boxes_at_size, max_segment_path, min_boxes_at_size, SearchOptions, VoronoiPolyomino};
use vorpoly::ppp::sample;
use vorpoly::{Error, IntensityModel, PointSet, Tessellation, Window};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Degenerate input, e.g. all points collinear.
    Degenerate = 3,
    /// The answer depends on tiles cut by the window; enlarge it.
    Censored = 4,
    /// Request above an enumeration guard.
    Capacity = 5,
    Internal = 99,
}

/// Opaque tessellation handle.
pub struct VpTessellation {
    inner: Tessellation,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> VpStatus {
    match e {
        Error::Censored(_) | Error::TruncatedCluster => VpStatus::Censored,
        Error::Degenerate(_) | Error::EmptyPointSet => VpStatus::Degenerate,
        Error::Capacity(_) => VpStatus::Capacity,
        Error::InvalidWindow(_)
        | Error::InvalidModel(_)
        | Error::DensityOutOfBounds { .. }
        | Error::InvalidArgument(_)
        | Error::MisalignedWindow(_)
        | Error::Parse(_)
        | Error::BlockOutsideWindow(_)
        | Error::HypothesisViolated(_)
        | Error::BelowResolution(_) => VpStatus::InvalidArgument,
        Error::Io(_) | Error::Json(_) => VpStatus::Internal,
    }
}

/// Runs `f`, recording errors and turning panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> VpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            VpStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            VpStatus::Internal
        }
    }
}

fn null(what: &str) -> VpStatus {
    set_error(&format!("{what} is null"));
    VpStatus::NullPointer
}

/// Message for the last failing call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn vp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples a homogeneous Poisson process of intensity `lambda` on
/// `[-half, half]^2` and builds its tessellation.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vp_tessellation_sample(
    lambda: f64,
    half: f64,
    seed: u64,
    replicate: u64,
    out: *mut *mut VpTessellation,
) -> VpStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let w = Window::centered_square(half)?;
        let points = sample(&w, &IntensityModel::homogeneous(lambda), seed, replicate)?;
        let t = Box::new(VpTessellation { inner: Tessellation::new(points)? });
        *out = Box::into_raw(t);
        Ok(())
    })
}

/// Builds a tessellation from `n` points `(xs[i], ys[i])` inside the window
/// `[x0, x1) x [y0, y1)`.
///
/// # Safety
/// `xs` and `ys` must point to `n` readable values; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn vp_tessellation_from_points(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    out: *mut *mut VpTessellation,
) -> VpStatus {
    if xs.is_null() || ys.is_null() {
        return null("coordinates");
    }
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let xs = std::slice::from_raw_parts(xs, n);
        let ys = std::slice::from_raw_parts(ys, n);
        let pts: Vec<[f64; 2]> = xs.iter().zip(ys).map(|(&x, &y)| [x, y]).collect();
        let ps = PointSet::from_xy(Window::rect(x0, y0, x1, y1)?, &pts)?;
        *out = Box::into_raw(Box::new(VpTessellation { inner: Tessellation::new(ps)? }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `t` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vp_tessellation_free(t: *mut VpTessellation) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of generators.
///
/// # Safety
/// `t` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vp_tessellation_len(t: *const VpTessellation, out: *mut usize) -> VpStatus {
    if t.is_null() || out.is_null() {
        return null("argument");
    }
    *out = (*t).inner.len();
    set_error("");
    VpStatus::Ok
}

/// Coordinates of generator `v`.
///
/// # Safety
/// `t` must be a live handle and `out_xy` valid for two writes.
#[no_mangle]
pub unsafe extern "C" fn vp_tessellation_point(t: *const VpTessellation, v: usize, out_xy: *mut f64) -> VpStatus {
    if t.is_null() || out_xy.is_null() {
        return null("argument");
    }
    let t = &(*t).inner;
    if v >= t.len() {
        set_error(&format!("generator {v} out of range (have {})", t.len()));
        return VpStatus::InvalidArgument;
    }
    let p = t.point(v);
    *out_xy = p[0];
    *out_xy.add(1) = p[1];
    set_error("");
    VpStatus::Ok
}

/// Generator whose tile contains `(x, y)`.
///
/// # Safety
/// `t` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vp_tessellation_nearest(t: *const VpTessellation, x: f64, y: f64, out: *mut usize) -> VpStatus {
    if t.is_null() || out.is_null() {
        return null("argument");
    }
    guard(|| {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::InvalidArgument("query point must be finite".into()));
        }
        *out = (*t).inner.nearest([x, y]);
        Ok(())
    })
}

/// Number of unit boxes met by the polyomino made of the `n` listed tiles.
///
/// # Safety
/// `t` must be a live handle, `generators` must point to `n` values and
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vp_polyomino_box_count(
    t: *const VpTessellation,
    generators: *const usize,
    n: usize,
    out: *mut usize,
) -> VpStatus {
    if t.is_null() || generators.is_null() || out.is_null() {
        return null("argument");
    }
    guard(|| {
        let t = &(*t).inner;
        let gens = std::slice::from_raw_parts(generators, n);
        if let Some(&v) = gens.iter().find(|&&v| v >= t.len()) {
            return Err(Error::InvalidArgument(format!("generator {v} out of range")));
        }
        let p = VoronoiPolyomino::new(t, gens)?;
        *out = boxes_of(t, &p)?.len();
        Ok(())
    })
}

/// Fewest (`maximize == 0`) or most unit boxes met by a polyomino of `r`
/// tiles containing the tile of the origin. `heuristic` is set to 1 when
/// the value comes from the beam search above the exact guard.
///
/// # Safety
/// `t` must be a live handle; `value` and `heuristic` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vp_extremal_box_count(
    t: *const VpTessellation,
    r: usize,
    maximize: i32,
    value: *mut u64,
    heuristic: *mut i32,
) -> VpStatus {
    if t.is_null() || value.is_null() || heuristic.is_null() {
        return null("argument");
    }
    guard(|| {
        let t = &(*t).inner;
        let opts = SearchOptions::default();
        let e = if maximize != 0 { max_boxes_at_size(t, r, &opts)? } else { min_boxes_at_size(t, r, &opts)? };
        *value = e.value;
        *heuristic = i32::from(e.heuristic);
        Ok(())
    })
}

/// Largest number of tiles met by a segment from the origin to a point of
/// norm at most `s`.
///
/// # Safety
/// `t` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vp_max_segment_tiles(t: *const VpTessellation, s: f64, out: *mut usize) -> VpStatus {
    if t.is_null() || out.is_null() {
        return null("argument");
    }
    guard(|| {
        *out = max_segment_path(&(*t).inner, s)?.0;
        Ok(())
    })
}

/// Counts of planar lattice animals containing the origin of sizes
/// `1..=s_max`, written to `out[0..s_max]`.
///
/// # Safety
/// `out` must be valid for `s_max` writes.
#[no_mangle]
pub unsafe extern "C" fn vp_count_animals(s_max: usize, out: *mut u64) -> VpStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let counts = count_animals_by_size(s_max, 2)?;
        ptr::copy_nonoverlapping(counts.as_ptr(), out, counts.len());
        Ok(())
    })
}
