//! C ABI over the visrecon library.
//!
//! Objects cross the boundary as opaque handles created by `vr_*_new` style
//! functions and released with the matching `vr_*_free`. Every fallible call
//! returns a [`VrStatus`]; on failure [`vr_last_error`] describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use visrecon::baselines::compare_isovalue_selectors;
use visrecon::color::{ciede2000, discriminative_power, Colormap, LabColor};
use visrecon::colormap_eval::evaluate_colormap_2d;
use visrecon::contour::ReconstructionConfig;
use visrecon::field::{Grid2D, Grid3D};
use visrecon::scenes::plume_field;
use visrecon::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Internal = 3,
    Panic = 4,
}

/// Opaque 2D scalar grid.
pub struct VrGrid2D(Grid2D);

/// Opaque 3D scalar grid.
pub struct VrGrid3D(Grid3D);

/// Opaque colormap.
pub struct VrColormap(Colormap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(e: Error) -> VrStatus {
    let status = if e.is_input_error() {
        VrStatus::InvalidInput
    } else {
        VrStatus::Internal
    };
    set_error(e.to_string());
    status
}

fn null(what: &str) -> VrStatus {
    set_error(format!("{what} is null"));
    VrStatus::NullPointer
}

/// Runs `f`, turning panics into [`VrStatus::Panic`].
fn guard(f: impl FnOnce() -> VrStatus) -> VrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        VrStatus::Panic
    })
}

fn boxed<T>(value: T, out: *mut *mut T) -> VrStatus {
    // SAFETY: callers check `out` for null before calling.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    VrStatus::Ok
}

/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, VrStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        VrStatus::InvalidInput
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn vr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// CIEDE2000 difference between two CIELAB colors given as `[L, a, b]`.
///
/// # Safety
/// `lab1` and `lab2` must each point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn vr_ciede2000(lab1: *const f64, lab2: *const f64, out: *mut f64) -> VrStatus {
    guard(|| {
        if lab1.is_null() || lab2.is_null() || out.is_null() {
            return null("argument");
        }
        let (a, b) = (std::slice::from_raw_parts(lab1, 3), std::slice::from_raw_parts(lab2, 3));
        *out = ciede2000(LabColor::new(a[0], a[1], a[2]), LabColor::new(b[0], b[1], b[2]));
        VrStatus::Ok
    })
}

/// Grid with `nx * ny` values in x-fastest order over `[0, 1]²`.
///
/// # Safety
/// `values` must point to `nx * ny` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_grid2d_new(nx: usize, ny: usize, values: *const f64, out: *mut *mut VrGrid2D) -> VrStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            return null("argument");
        }
        let Some(n) = nx.checked_mul(ny) else {
            set_error("grid size overflows");
            return VrStatus::InvalidInput;
        };
        let v = std::slice::from_raw_parts(values, n).to_vec();
        let spacing = |d: usize| if d > 1 { 1.0 / (d - 1) as f64 } else { 1.0 };
        match Grid2D::new([nx, ny], [0.0; 2], [spacing(nx), spacing(ny)], v) {
            Ok(g) => boxed(VrGrid2D(g), out),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `g` must be null or a handle from [`vr_grid2d_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vr_grid2d_free(g: *mut VrGrid2D) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// The synthetic plume on an `n³` grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_grid3d_plume(n: usize, out: *mut *mut VrGrid3D) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match plume_field(n) {
            Ok(g) => boxed(VrGrid3D(g), out),
            Err(e) => fail(e),
        }
    })
}

/// Writes the value range of a 3D grid.
///
/// # Safety
/// `g` must be a live handle; `min` and `max` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_grid3d_range(g: *const VrGrid3D, min: *mut f64, max: *mut f64) -> VrStatus {
    guard(|| {
        if g.is_null() || min.is_null() || max.is_null() {
            return null("argument");
        }
        let s = (*g).0.stats();
        *min = s.min;
        *max = s.max;
        VrStatus::Ok
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vr_grid3d_free(g: *mut VrGrid3D) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Bundled colormap by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_colormap_bundled(name: *const c_char, out: *mut *mut VrColormap) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let name = match str_arg(name, "name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match Colormap::bundled(name) {
            Some(cm) => boxed(VrColormap(cm), out),
            None => {
                set_error(format!("unknown colormap {name}"));
                VrStatus::InvalidInput
            }
        }
    })
}

/// Colormap from `{"name": ..., "colors": [[r, g, b], ...]}` JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_colormap_from_json(json: *const c_char, out: *mut *mut VrColormap) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let text = match str_arg(json, "json") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match Colormap::from_json_str(text) {
            Ok(cm) => boxed(VrColormap(cm), out),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `cm` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vr_colormap_free(cm: *mut VrColormap) {
    if !cm.is_null() {
        drop(Box::from_raw(cm));
    }
}

/// sRGB color at legend position `t` in [0, 1], written as three doubles.
///
/// # Safety
/// `cm` must be a live handle; `rgb` must point to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vr_colormap_sample(cm: *const VrColormap, t: f64, rgb: *mut f64) -> VrStatus {
    guard(|| {
        if cm.is_null() || rgb.is_null() {
            return null("argument");
        }
        let c = (*cm).0.sample(t);
        std::slice::from_raw_parts_mut(rgb, 3).copy_from_slice(&[c.r, c.g, c.b]);
        VrStatus::Ok
    })
}

/// Number of just-noticeable steps along the colormap.
///
/// # Safety
/// `cm` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_colormap_discriminative_power(cm: *const VrColormap, out: *mut f64) -> VrStatus {
    guard(|| {
        if cm.is_null() || out.is_null() {
            return null("argument");
        }
        *out = discriminative_power(&(*cm).0);
        VrStatus::Ok
    })
}

/// L2 error of decoding the plain colormapped rendering of `g`.
///
/// # Safety
/// `g` and `cm` must be live handles; `l2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_evaluate_colormap_2d(g: *const VrGrid2D, cm: *const VrColormap, l2: *mut f64) -> VrStatus {
    guard(|| {
        if g.is_null() || cm.is_null() || l2.is_null() {
            return null("argument");
        }
        match evaluate_colormap_2d(&(*g).0, &(*cm).0) {
            Ok(e) => {
                *l2 = e.l2_error;
                VrStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Reconstruction-selected isovalue among `k` evenly spaced candidates plus
/// the three reference selectors' values, with its L2 error.
///
/// # Safety
/// `g` must be a live handle; `isovalue` and `error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_select_isovalue(
    g: *const VrGrid2D,
    k: usize,
    seed: u64,
    isovalue: *mut f64,
    error: *mut f64,
) -> VrStatus {
    guard(|| {
        if g.is_null() || isovalue.is_null() || error.is_null() {
            return null("argument");
        }
        match compare_isovalue_selectors(&(*g).0, k, &ReconstructionConfig::default(), seed) {
            Ok(c) => {
                *isovalue = c.ours.isovalue;
                *error = c.ours.error;
                VrStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
