//! C ABI over `rso_splat`: load and save Gaussian clouds, render views and
//! score images.
//!
//! Every fallible call returns an [`RsoStatus`]; on failure the message is
//! kept per thread and read with [`rso_last_error`]. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rso_splat::camera::{Intrinsics, PinholeCamera, Pose};
use rso_splat::image::ImageRGB;
use rso_splat::metrics;
use rso_splat::raster::{render, RenderedView};
use rso_splat::scene::{load_ply, save_ply, GaussianCloud};
use rso_splat::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InputError = 3,
    RuntimeError = 4,
    Panic = 5,
}

/// Pinhole camera: intrinsics in pixels, world-to-camera rotation as a
/// scalar-first unit quaternion, and translation.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RsoCamera {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

/// Opaque Gaussian cloud.
pub struct RsoCloud(GaussianCloud);

/// Opaque rendered view (RGB plus alpha).
pub struct RsoImage(RenderedView);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn from_error(e: &Error) -> RsoStatus {
    set_error(&format!("{}: {}", e.code(), e));
    if e.is_input_error() {
        RsoStatus::InputError
    } else {
        RsoStatus::RuntimeError
    }
}

fn guard(f: impl FnOnce() -> RsoStatus) -> RsoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == RsoStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => {
            set_error("internal panic");
            RsoStatus::Panic
        }
    }
}

fn null(what: &str) -> RsoStatus {
    set_error(&format!("{what} is null"));
    RsoStatus::NullPointer
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, RsoStatus> {
    if p.is_null() {
        return Err(null("path"));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(RsoStatus::InvalidArgument)
        }
    }
}

fn to_camera(c: &RsoCamera) -> Result<PinholeCamera, Error> {
    let k = Intrinsics {
        camera_id: 1,
        width: c.width as usize,
        height: c.height as usize,
        fx: c.fx,
        fy: c.fy,
        cx: c.cx,
        cy: c.cy,
    };
    PinholeCamera::new(
        k,
        Pose {
            rotation: c.rotation,
            translation: c.translation,
        },
    )
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rso_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a binary PLY. On success `*out` owns a new cloud.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rso_cloud_load_ply(path: *const c_char, out: *mut *mut RsoCloud) -> RsoStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_ply(&path) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(RsoCloud(c)));
                RsoStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `cloud` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rso_cloud_save_ply(cloud: *const RsoCloud, path: *const c_char) -> RsoStatus {
    guard(|| {
        let Some(cloud) = cloud.as_ref() else {
            return null("cloud");
        };
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match save_ply(&cloud.0, &path) {
            Ok(()) => RsoStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

/// Number of Gaussians, or 0 for a null handle.
///
/// # Safety
/// `cloud` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn rso_cloud_len(cloud: *const RsoCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `cloud` must be null or come from this library, and is invalid after.
#[no_mangle]
pub unsafe extern "C" fn rso_cloud_free(cloud: *mut RsoCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Renders `cloud` from `camera` over an RGB `background`.
///
/// # Safety
/// Pointers must be valid; `background` points to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn rso_render(
    cloud: *const RsoCloud,
    camera: *const RsoCamera,
    background: *const f64,
    out: *mut *mut RsoImage,
) -> RsoStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let Some(cloud) = cloud.as_ref() else {
            return null("cloud");
        };
        let Some(camera) = camera.as_ref() else {
            return null("camera");
        };
        if background.is_null() {
            return null("background");
        }
        let bg = [*background, *background.add(1), *background.add(2)];
        if bg.iter().any(|c| !(0.0..=1.0).contains(c)) {
            set_error("background channels must lie in [0, 1]");
            return RsoStatus::InvalidArgument;
        }
        let cam = match to_camera(camera) {
            Ok(c) => c,
            Err(e) => return from_error(&e),
        };
        *out = Box::into_raw(Box::new(RsoImage(render(&cloud.0, &cam, bg))));
        RsoStatus::Ok
    })
}

/// # Safety
/// `image` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn rso_image_width(image: *const RsoImage) -> u32 {
    image.as_ref().map_or(0, |i| i.0.image.width() as u32)
}

/// # Safety
/// `image` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn rso_image_height(image: *const RsoImage) -> u32 {
    image.as_ref().map_or(0, |i| i.0.image.height() as u32)
}

/// Copies interleaved RGB (`len == width * height * 3`) or, when `alpha`
/// is nonzero, the alpha plane (`len == width * height`) into `dst`.
///
/// # Safety
/// `dst` must hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn rso_image_copy(image: *const RsoImage, alpha: i32, dst: *mut f32, len: usize) -> RsoStatus {
    guard(|| {
        let Some(image) = image.as_ref() else {
            return null("image");
        };
        if dst.is_null() {
            return null("dst");
        }
        let src: &[f64] = if alpha != 0 { &image.0.alpha } else { image.0.image.data() };
        if src.len() != len {
            set_error(&format!("buffer holds {len} values, image has {}", src.len()));
            return RsoStatus::InvalidArgument;
        }
        let dst = std::slice::from_raw_parts_mut(dst, len);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = *s as f32;
        }
        RsoStatus::Ok
    })
}

/// # Safety
/// `image` must be null or come from this library, and is invalid after.
#[no_mangle]
pub unsafe extern "C" fn rso_image_free(image: *mut RsoImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

unsafe fn image_arg(p: *const f32, width: u32, height: u32) -> Result<ImageRGB, RsoStatus> {
    if p.is_null() {
        return Err(null("image buffer"));
    }
    let n = width as usize * height as usize * 3;
    let data = std::slice::from_raw_parts(p, n).iter().map(|v| *v as f64).collect();
    ImageRGB::new(width as usize, height as usize, data).map_err(|e| from_error(&e))
}

/// Which image metric [`rso_image_metric`] computes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsoMetric {
    Psnr = 0,
    Ssim = 1,
}

/// Compares two interleaved RGB buffers of `width * height * 3` floats in
/// `[0, 1]`.
///
/// # Safety
/// `a` and `b` must hold `width * height * 3` floats; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rso_image_metric(
    metric: RsoMetric,
    a: *const f32,
    b: *const f32,
    width: u32,
    height: u32,
    out: *mut f64,
) -> RsoStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let (a, b) = match (image_arg(a, width, height), image_arg(b, width, height)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let r = match metric {
            RsoMetric::Psnr => metrics::psnr(&a, &b),
            RsoMetric::Ssim => metrics::ssim(&a, &b),
        };
        match r {
            Ok(v) => {
                *out = v;
                RsoStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}
