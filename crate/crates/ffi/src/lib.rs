//! C ABI over the chromaprobe core.
//!
//! Objects cross the boundary as opaque handles created by `cp_*_new` /
//! `cp_*_load` style calls and released with the matching `cp_*_free`.
//! Every fallible call returns a [`CpStatus`]; on failure the message is
//! available from [`cp_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chromaprobe::cluster::{self, ClusterResult};
use chromaprobe::colorspace::{self, ColorSpaceId, PlaneImage, Space};
use chromaprobe::detect::{self, Bins, Histogram3D, QuantizedImage, Template};
use chromaprobe::{Error, LabelMap, RasterImage};

/// Result code of every fallible call. The non-zero classes match the CLI
/// exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    /// Null pointer, bad length, or a string that is not UTF-8.
    InvalidArgument = 1,
    /// Unknown space, bad bin count, invalid configuration.
    Config = 2,
    /// Unreadable or inconsistent input data.
    Input = 3,
    /// Empty template, mismatched spaces, too few pixels to cluster.
    Runtime = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// A color space configuration: index into the 21-space catalog (RGB is 0)
/// and whether pixel-wise normalization runs first.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpSpace {
    pub index: u32,
    pub primed: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CpScore {
    pub recall: f64,
    pub precision: f64,
    pub fmeasure: f64,
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

/// 8-bit RGB image.
pub struct CpRaster(RasterImage);
/// Per-pixel class labels; 255 is background.
pub struct CpLabels(LabelMap);
/// An image converted into one color space.
pub struct CpPlane(PlaneImage);
/// Template histogram in one space at one bin count.
pub struct CpHistogram(Histogram3D);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CpStatus, msg: impl Into<String>) -> CpStatus {
    set_error(msg.into());
    status
}

impl From<&Error> for CpStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => CpStatus::Config,
            3 => CpStatus::Input,
            _ => CpStatus::Runtime,
        }
    }
}

/// Runs `f`, converting errors and panics into a status plus a message.
fn guard(f: impl FnOnce() -> Result<(), CpStatus>) -> CpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CpStatus::Panic, msg)
        }
    }
}

fn lift<T>(r: chromaprobe::Result<T>) -> Result<T, CpStatus> {
    r.map_err(|e| fail(CpStatus::from(&e), e.to_string()))
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, CpStatus> {
    // SAFETY: callers pass handles obtained from this library or valid
    // pointers to caller-owned data, as documented on each function.
    unsafe { p.as_ref() }.ok_or_else(|| fail(CpStatus::InvalidArgument, format!("{what} is null")))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CpStatus> {
    if p.is_null() {
        return Err(fail(CpStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], CpStatus> {
    if p.is_null() {
        return Err(fail(CpStatus::InvalidArgument, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), CpStatus> {
    if out.is_null() {
        return Err(fail(CpStatus::InvalidArgument, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

fn space_id(s: CpSpace) -> Result<ColorSpaceId, CpStatus> {
    Space::ALL
        .get(s.index as usize)
        .map(|&space| ColorSpaceId::new(space, s.primed))
        .ok_or_else(|| {
            fail(
                CpStatus::Config,
                format!("space index {} out of range", s.index),
            )
        })
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next `cp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of entries in the space catalog.
#[no_mangle]
pub extern "C" fn cp_space_count() -> u32 {
    Space::ALL.len() as u32
}

/// Parses a space name such as `"HSV"` or `"C1C2C3'"` (trailing quote means
/// normalized).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_space_from_name(name: *const c_char, out: *mut CpSpace) -> CpStatus {
    guard(|| {
        let id: ColorSpaceId = lift(str_arg(name, "name")?.parse())?;
        let index = Space::ALL
            .iter()
            .position(|&s| s == id.space)
            .expect("catalog member") as u32;
        write_out(
            out,
            CpSpace {
                index,
                primed: id.primed,
            },
        )
    })
}

/// Writes the NUL-terminated name of `space` into `buf` (at most `len` bytes).
///
/// # Safety
/// `buf` must be writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cp_space_name(space: CpSpace, buf: *mut c_char, len: usize) -> CpStatus {
    guard(|| {
        let name = space_id(space)?.to_string();
        if buf.is_null() || len <= name.len() {
            return Err(fail(
                CpStatus::InvalidArgument,
                format!("buffer too small for `{name}`"),
            ));
        }
        ptr::copy_nonoverlapping(name.as_ptr().cast::<c_char>(), buf, name.len());
        *buf.add(name.len()) = 0;
        Ok(())
    })
}

/// Creates an image from `width * height` interleaved RGB triples.
///
/// # Safety
/// `rgb` must point to `3 * width * height` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_raster_new(
    width: usize,
    height: usize,
    rgb: *const u8,
    out: *mut *mut CpRaster,
) -> CpStatus {
    guard(|| {
        let len = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| fail(CpStatus::InvalidArgument, "image size overflows"))?;
        let data = slice_arg(rgb, len, "rgb")?.to_vec();
        let img = lift(RasterImage::new(width, height, data))?;
        write_out(out, boxed(CpRaster(img)))
    })
}

/// Loads an 8-bit RGB PNG.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_raster_load_png(
    path: *const c_char,
    out: *mut *mut CpRaster,
) -> CpStatus {
    guard(|| {
        let img = lift(RasterImage::load_png(Path::new(str_arg(path, "path")?)))?;
        write_out(out, boxed(CpRaster(img)))
    })
}

/// # Safety
/// `raster` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_raster_free(raster: *mut CpRaster) {
    free(raster)
}

/// Creates a label map from `width * height` class bytes.
///
/// # Safety
/// `labels` must point to `width * height` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_labels_new(
    width: usize,
    height: usize,
    labels: *const u8,
    out: *mut *mut CpLabels,
) -> CpStatus {
    guard(|| {
        let len = width
            .checked_mul(height)
            .ok_or_else(|| fail(CpStatus::InvalidArgument, "label map size overflows"))?;
        let data = slice_arg(labels, len, "labels")?.to_vec();
        let map = lift(LabelMap::new(width, height, data))?;
        write_out(out, boxed(CpLabels(map)))
    })
}

/// # Safety
/// `labels` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_labels_free(labels: *mut CpLabels) {
    free(labels)
}

/// Converts `raster` into `space`.
///
/// # Safety
/// `raster` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_convert(
    raster: *const CpRaster,
    space: CpSpace,
    out: *mut *mut CpPlane,
) -> CpStatus {
    guard(|| {
        let img = &non_null(raster, "raster")?.0;
        let plane = colorspace::to_space(img, space_id(space)?);
        write_out(out, boxed(CpPlane(plane)))
    })
}

/// Converts one 8-bit RGB pixel into `space`, writing three channels.
///
/// # Safety
/// `rgb` must point to 3 readable bytes and `out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_convert_pixel(
    space: CpSpace,
    rgb: *const u8,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        let p = slice_arg(rgb, 3, "rgb")?;
        let v = colorspace::convert_rgb8(space_id(space)?, [p[0], p[1], p[2]]);
        if out.is_null() {
            return Err(fail(CpStatus::InvalidArgument, "output pointer is null"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, 3);
        Ok(())
    })
}

/// Pixel count of a converted image.
///
/// # Safety
/// `plane` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_plane_len(plane: *const CpPlane) -> usize {
    plane.as_ref().map_or(0, |p| p.0.len())
}

/// Copies channel `channel` (0..3) into `dst`, which holds `len` doubles.
///
/// # Safety
/// `plane` must be a live handle and `dst` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_plane_copy_channel(
    plane: *const CpPlane,
    channel: u32,
    dst: *mut f64,
    len: usize,
) -> CpStatus {
    guard(|| {
        let p = &non_null(plane, "plane")?.0;
        let src = p.channels.get(channel as usize).ok_or_else(|| {
            fail(
                CpStatus::InvalidArgument,
                format!("channel {channel} out of range"),
            )
        })?;
        if dst.is_null() || len != src.len() {
            return Err(fail(
                CpStatus::InvalidArgument,
                format!("destination must hold {} values", src.len()),
            ));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
        Ok(())
    })
}

/// # Safety
/// `plane` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_plane_free(plane: *mut CpPlane) {
    free(plane)
}

/// Builds the ratio histogram of a template image in `space` with `bins`
/// bins per channel (16, 32, 64 or 128).
///
/// # Safety
/// `template` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_histogram_build(
    template: *const CpRaster,
    class: u8,
    space: CpSpace,
    bins: u32,
    out: *mut *mut CpHistogram,
) -> CpStatus {
    guard(|| {
        let tpl = Template::new(non_null(template, "template")?.0.clone(), class);
        let bins = lift(Bins::new(bins as usize))?;
        let hist = lift(detect::build_histogram(&tpl, space_id(space)?, bins))?;
        write_out(out, boxed(CpHistogram(hist)))
    })
}

/// # Safety
/// `hist` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_histogram_free(hist: *mut CpHistogram) {
    free(hist)
}

/// Backprojects `hist` onto `plane`, writing one likelihood in `[0, 1]` per
/// pixel into `dst`.
///
/// # Safety
/// Handles must be live; `dst` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_backproject(
    plane: *const CpPlane,
    hist: *const CpHistogram,
    dst: *mut f64,
    len: usize,
) -> CpStatus {
    guard(|| {
        let p = &non_null(plane, "plane")?.0;
        let map = lift(detect::backproject(p, &non_null(hist, "hist")?.0))?;
        if dst.is_null() || len != map.values.len() {
            return Err(fail(
                CpStatus::InvalidArgument,
                format!("destination must hold {} values", map.values.len()),
            ));
        }
        ptr::copy_nonoverlapping(map.values.as_ptr(), dst, len);
        Ok(())
    })
}

/// Thresholds the backprojection at `tau` and scores it against the pixels
/// labeled with the histogram's class.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_detect_score(
    plane: *const CpPlane,
    hist: *const CpHistogram,
    labels: *const CpLabels,
    class: u8,
    tau: f64,
    out: *mut CpScore,
) -> CpStatus {
    guard(|| {
        let p = &non_null(plane, "plane")?.0;
        let h = &non_null(hist, "hist")?.0;
        if p.id != h.space() {
            return Err(fail(
                CpStatus::Runtime,
                "plane and histogram are in different spaces",
            ));
        }
        let q = QuantizedImage::new(p, h.bins());
        let s = lift(q.score_class(h, &non_null(labels, "labels")?.0, class, tau))?;
        write_out(
            out,
            CpScore {
                recall: s.recall,
                precision: s.precision,
                fmeasure: s.fmeasure,
                true_pos: s.true_pos,
                false_pos: s.false_pos,
                false_neg: s.false_neg,
            },
        )
    })
}

/// Clusters the labeled pixels of `plane` with k = number of classes and
/// writes the mean silhouette.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_discriminability(
    plane: *const CpPlane,
    labels: *const CpLabels,
    seed: u64,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        let report = lift(cluster::discriminability(
            &non_null(plane, "plane")?.0,
            &non_null(labels, "labels")?.0,
            seed,
        ))?;
        write_out(out, report.mean)
    })
}

/// Mean silhouette of `n` 3-D points (`points` holds `3 * n` doubles) under
/// the given cluster assignments in `0..k`.
///
/// # Safety
/// `points` must hold `3 * n` doubles, `assignments` `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_silhouette(
    points: *const f64,
    assignments: *const u32,
    n: usize,
    k: u32,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        let len = n
            .checked_mul(3)
            .ok_or_else(|| fail(CpStatus::InvalidArgument, "point count overflows"))?;
        let flat = slice_arg(points, len, "points")?;
        let pts: Vec<[f64; 3]> = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let assignments: Vec<usize> = slice_arg(assignments, n, "assignments")?
            .iter()
            .map(|&a| a as usize)
            .collect();
        let result = ClusterResult {
            k: k as usize,
            assignments,
            centers: vec![[0.0; 3]; k as usize],
            sampled_indices: (0..n).collect(),
            wcss: 0.0,
        };
        let report = lift(cluster::silhouette(&result, &pts))?;
        write_out(out, report.mean)
    })
}
