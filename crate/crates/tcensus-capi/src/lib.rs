//! C ABI for the tcensus toolkit.
//!
//! Handles are opaque pointers created and destroyed here; every function
//! returns a [`TcStatus`] and writes results through out-pointers. The most
//! recent error message per thread is available via
//! [`tc_last_error_message`]. A C header is generated into
//! `include/tcensus.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tcensus::census::{ct_image, utct_images, GrayImage};
use tcensus::classifier::LinearModel;
use tcensus::detector::{detect, DetectParams, Detection, PyramidConfig};

/// Result code of every API call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or inconsistent.
    InvalidArgument = 2,
    /// A file or JSON document could not be parsed.
    ParseError = 3,
    /// The operation itself failed; see `tc_last_error_message`.
    RuntimeError = 4,
    /// A panic was caught at the boundary.
    Panic = 5,
}

/// Opaque trained-model handle.
pub struct TcModel {
    inner: LinearModel,
}

/// Opaque detection-list handle.
pub struct TcDetections {
    items: Vec<Detection>,
}

/// One detection record, in original-image pixels.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct TcDetection {
    pub left: u32,
    pub top: u32,
    pub width: u32,
    pub height: u32,
    pub score: f64,
    pub level: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn guard<F: FnOnce() -> TcStatus>(f: F) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic inside tcensus");
            TcStatus::Panic
        }
    }
}

/// Message of the most recent error on this thread. The pointer stays valid
/// until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Parses a model from a JSON document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_model_from_json(
    json: *const c_char,
    out: *mut *mut TcModel,
) -> TcStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return TcStatus::NullPointer;
        }
        let Some(text) = cstr_arg(json) else {
            set_error("json pointer is null or not UTF-8");
            return TcStatus::NullPointer;
        };
        match LinearModel::from_json(text) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(TcModel { inner: model }));
                TcStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TcStatus::ParseError
            }
        }
    })
}

/// Loads a model from a JSON file on disk.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_model_load(path: *const c_char, out: *mut *mut TcModel) -> TcStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return TcStatus::NullPointer;
        }
        let Some(path) = cstr_arg(path) else {
            set_error("path pointer is null or not UTF-8");
            return TcStatus::NullPointer;
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                set_error(&e.to_string());
                return TcStatus::RuntimeError;
            }
        };
        match LinearModel::from_json(&text) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(TcModel { inner: model }));
                TcStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TcStatus::ParseError
            }
        }
    })
}

/// Frees a model handle; a null pointer is a no-op.
///
/// # Safety
/// `model` must have been returned by a `tc_model_*` constructor and not
/// freed before.
#[no_mangle]
pub unsafe extern "C" fn tc_model_free(model: *mut TcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Detection-window width of the model's layout.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_model_window_width(model: *const TcModel) -> u32 {
    if model.is_null() {
        return 0;
    }
    (&(*model).inner).layout().window_width()
}

/// Detection-window height of the model's layout.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_model_window_height(model: *const TcModel) -> u32 {
    if model.is_null() {
        return 0;
    }
    (&(*model).inner).layout().window_height()
}

fn gray_from_raw(pixels: *const u8, width: u32, height: u32) -> Option<GrayImage> {
    if pixels.is_null() || width == 0 || height == 0 {
        return None;
    }
    let len = width as usize * height as usize;
    let data = unsafe { std::slice::from_raw_parts(pixels, len) };
    Some(GrayImage::new(width, height, data.to_vec()))
}

/// Runs multi-scale detection over a row-major 8-bit grayscale buffer.
///
/// `scale_factor` <= 1 selects the default pyramid step; `stride` 0 selects
/// the default stride.
///
/// # Safety
/// `pixels` must point to `width * height` readable bytes and `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_detect(
    model: *const TcModel,
    pixels: *const u8,
    width: u32,
    height: u32,
    scale_factor: f64,
    stride: u32,
    score_threshold: f64,
    nms_iou: f64,
    out: *mut *mut TcDetections,
) -> TcStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            set_error("model or out pointer is null");
            return TcStatus::NullPointer;
        }
        let Some(img) = gray_from_raw(pixels, width, height) else {
            set_error("pixel buffer is null or empty");
            return TcStatus::NullPointer;
        };
        if !(0.0..1.0).contains(&nms_iou) {
            set_error("nms_iou must lie in [0, 1)");
            return TcStatus::InvalidArgument;
        }
        let pyramid = if scale_factor > 1.0 {
            PyramidConfig { scale_factor }
        } else {
            PyramidConfig::default()
        };
        let params = DetectParams {
            stride: if stride == 0 { 4 } else { stride },
            score_threshold,
            nms_iou,
        };
        match detect(&img, &(*model).inner, &pyramid, &params) {
            Ok(items) => {
                *out = Box::into_raw(Box::new(TcDetections { items }));
                TcStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TcStatus::RuntimeError
            }
        }
    })
}

/// Number of detections in the list.
///
/// # Safety
/// `detections` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_detections_len(detections: *const TcDetections) -> usize {
    if detections.is_null() {
        return 0;
    }
    (&(*detections).items).len()
}

/// Copies detection `index` into `out`.
///
/// # Safety
/// `detections` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_detections_get(
    detections: *const TcDetections,
    index: usize,
    out: *mut TcDetection,
) -> TcStatus {
    guard(|| {
        if detections.is_null() || out.is_null() {
            set_error("detections or out pointer is null");
            return TcStatus::NullPointer;
        }
        let Some(det) = (&(*detections).items).get(index) else {
            set_error("detection index out of range");
            return TcStatus::InvalidArgument;
        };
        *out = TcDetection {
            left: det.rect.left,
            top: det.rect.top,
            width: det.rect.width,
            height: det.rect.height,
            score: det.score,
            level: det.level as u32,
        };
        TcStatus::Ok
    })
}

/// Frees a detection list; a null pointer is a no-op.
///
/// # Safety
/// `detections` must have been returned by [`tc_detect`] and not freed before.
#[no_mangle]
pub unsafe extern "C" fn tc_detections_free(detections: *mut TcDetections) {
    if !detections.is_null() {
        drop(Box::from_raw(detections));
    }
}

/// Writes both ternary label planes of a grayscale buffer into caller
/// buffers of `width * height` bytes (labels 0-58, border pixels 0).
///
/// # Safety
/// All buffers must cover `width * height` bytes.
#[no_mangle]
pub unsafe extern "C" fn tc_utct_transform(
    pixels: *const u8,
    width: u32,
    height: u32,
    i1_out: *mut u8,
    i2_out: *mut u8,
) -> TcStatus {
    guard(|| {
        let Some(img) = gray_from_raw(pixels, width, height) else {
            set_error("pixel buffer is null or empty");
            return TcStatus::NullPointer;
        };
        if i1_out.is_null() || i2_out.is_null() {
            set_error("output buffer is null");
            return TcStatus::NullPointer;
        }
        match utct_images(&img) {
            Ok(codes) => {
                let (p1, p2) = codes.planes();
                ptr::copy_nonoverlapping(p1.as_ptr(), i1_out, p1.len());
                ptr::copy_nonoverlapping(p2.as_ptr(), i2_out, p2.len());
                TcStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TcStatus::RuntimeError
            }
        }
    })
}

/// Writes the binary census-code raster of a grayscale buffer into a caller
/// buffer of `width * height` bytes (border pixels 0).
///
/// # Safety
/// Both buffers must cover `width * height` bytes.
#[no_mangle]
pub unsafe extern "C" fn tc_ct_transform(
    pixels: *const u8,
    width: u32,
    height: u32,
    ct_out: *mut u8,
) -> TcStatus {
    guard(|| {
        let Some(img) = gray_from_raw(pixels, width, height) else {
            set_error("pixel buffer is null or empty");
            return TcStatus::NullPointer;
        };
        if ct_out.is_null() {
            set_error("output buffer is null");
            return TcStatus::NullPointer;
        }
        match ct_image(&img) {
            Ok(ct) => {
                ptr::copy_nonoverlapping(ct.codes().as_ptr(), ct_out, ct.codes().len());
                TcStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                TcStatus::RuntimeError
            }
        }
    })
}
