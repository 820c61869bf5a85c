//! Grayscale image decoding and encoding.
//!
//! Inputs are binary PGM (P5, 8-bit) or PNG; colour PNGs collapse to
//! luminance with the integer rule `round(0.299 R + 0.587 G + 0.114 B)`.
//! All writes go through a temp file and an atomic rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::census::GrayImage;
use crate::detector::Detection;
use crate::error::{Error, Result};

const PNG_MAGIC: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Decodes a PGM (P5) or PNG file into a grayscale raster.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::DecodeError {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes, path)
    } else if bytes.starts_with(&PNG_MAGIC) {
        decode_png(&bytes, path)
    } else {
        Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "expected a P5 PGM or PNG signature".into(),
        })
    }
}

fn decode_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let fail = |reason: &str| Error::DecodeError {
        path: path.to_path_buf(),
        reason: reason.into(),
    };

    // Header tokens may be separated by whitespace and '#' comments.
    let mut pos = 2usize;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(fail("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(fail("malformed header field"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text.parse().map_err(|_| fail("header field overflow"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("16-bit PGM (maxval {maxval}) is not supported"),
        });
    }
    if width == 0 || height == 0 {
        return Err(fail("zero image dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(fail("missing raster separator")),
    }
    let len = width as usize * height as usize;
    let data = bytes
        .get(pos..pos + len)
        .ok_or_else(|| fail("truncated raster"))?;
    Ok(GrayImage::new(width, height, data.to_vec()))
}

#[inline]
fn luma(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)).round() as u8
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(
        |e| Error::DecodeError {
            path: path.to_path_buf(),
            reason: e.to_string(),
        },
    )?;
    match decoded {
        image::DynamicImage::ImageLuma8(img) => {
            Ok(GrayImage::new(img.width(), img.height(), img.into_raw()))
        }
        image::DynamicImage::ImageLumaA8(img) => {
            let (w, h) = img.dimensions();
            let data = img.pixels().map(|p| p.0[0]).collect();
            Ok(GrayImage::new(w, h, data))
        }
        image::DynamicImage::ImageRgb8(img) => {
            let (w, h) = img.dimensions();
            let data = img.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect();
            Ok(GrayImage::new(w, h, data))
        }
        image::DynamicImage::ImageRgba8(img) => {
            let (w, h) = img.dimensions();
            let data = img.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect();
            Ok(GrayImage::new(w, h, data))
        }
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("{:?} pixels are not supported, use 8-bit images", other.color()),
        }),
    }
}

/// Writes bytes to `path` via a sibling temp file and an atomic rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    let tmp_path = path.with_file_name(name);
    {
        let mut tmp = fs::File::create(&tmp_path)?;
        tmp.write_all(bytes)?;
        tmp.sync_all()?;
    }
    fs::rename(&tmp_path, path)?;
    Ok(())
}

/// Serializes a raster as binary PGM (P5).
pub fn save_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    bytes.extend_from_slice(img.data());
    atomic_write(path, &bytes)
}

/// Serializes a raster as 8-bit grayscale PNG.
pub fn save_png(path: &Path, img: &GrayImage) -> Result<()> {
    let buffer = image::GrayImage::from_raw(img.width(), img.height(), img.data().to_vec())
        .expect("raster length matches dimensions");
    let mut bytes = Vec::new();
    buffer
        .write_to(
            &mut std::io::Cursor::new(&mut bytes),
            image::ImageFormat::Png,
        )
        .map_err(|e| Error::DecodeError {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    atomic_write(path, &bytes)
}

/// Copy of `img` with each detection box burned in as a white 1-pixel outline.
pub fn annotate(img: &GrayImage, detections: &[Detection]) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let mut data = img.data().to_vec();
    let mut put = |x: u32, y: u32| {
        if x < w && y < h {
            data[y as usize * w as usize + x as usize] = 255;
        }
    };
    for det in detections {
        let r = det.rect;
        for x in r.left..r.left.saturating_add(r.width) {
            put(x, r.top);
            put(x, r.top + r.height.saturating_sub(1));
        }
        for y in r.top..r.top.saturating_add(r.height) {
            put(r.left, y);
            put(r.left + r.width.saturating_sub(1), y);
        }
    }
    GrayImage::new(w, h, data)
}
