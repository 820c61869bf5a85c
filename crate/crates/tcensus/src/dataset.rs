//! Dataset manifests and window sampling.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::census::GrayImage;
use crate::detector::resize_bilinear;
use crate::error::{Error, Result};
use crate::image_io::load_image;

/// Locations of the training and (optional) test images. Relative paths
/// resolve against `root`, which itself defaults to the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default)]
    pub root: Option<PathBuf>,
    /// Directory of positive window crops.
    pub positives: PathBuf,
    /// Directory of full negative images.
    pub negatives: PathBuf,
    #[serde(default)]
    pub test_positives: Option<PathBuf>,
    #[serde(default)]
    pub test_negatives: Option<PathBuf>,
    /// When set, that many windows are sampled from the test negatives
    /// instead of one centre-fit window per file.
    #[serde(default)]
    pub test_negative_samples: Option<usize>,
    /// Sampling seed.
    #[serde(default)]
    pub seed: u64,
}

impl DatasetManifest {
    /// Parses the manifest and resolves every directory to an absolute path.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)?;
        let parent = path.parent().unwrap_or(Path::new("."));
        let base = match &manifest.root {
            Some(root) if root.is_absolute() => root.clone(),
            Some(root) => parent.join(root),
            None => parent.to_path_buf(),
        };
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        manifest.positives = resolve(&manifest.positives);
        manifest.negatives = resolve(&manifest.negatives);
        manifest.test_positives = manifest.test_positives.as_ref().map(&resolve);
        manifest.test_negatives = manifest.test_negatives.as_ref().map(&resolve);
        manifest.root = Some(base);
        Ok(manifest)
    }
}

/// Image files of a directory (`.pgm`/`.png`), sorted by file name so every
/// run sees the same order.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("pgm") | Some("png")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Resizes isotropically until `width`x`height` is covered, then centre-crops.
pub fn fit_to_window(img: &GrayImage, width: u32, height: u32) -> GrayImage {
    if img.width() == width && img.height() == height {
        return img.clone();
    }
    let scale = f64::from(width) / f64::from(img.width());
    let scale = scale.max(f64::from(height) / f64::from(img.height()));
    let rw = ((f64::from(img.width()) * scale).ceil() as u32).max(width);
    let rh = ((f64::from(img.height()) * scale).ceil() as u32).max(height);
    let resized = resize_bilinear(img, rw, rh);
    resized.crop((rw - width) / 2, (rh - height) / 2, width, height)
}

/// Loads every image of `dir` as one window, optionally followed by its
/// horizontal mirror.
pub fn load_window_images(
    dir: &Path,
    width: u32,
    height: u32,
    mirror: bool,
) -> Result<Vec<GrayImage>> {
    let mut windows = Vec::new();
    for path in list_images(dir)? {
        let fitted = fit_to_window(&load_image(&path)?, width, height);
        if mirror {
            let flipped = fitted.mirror_horizontal();
            windows.push(fitted);
            windows.push(flipped);
        } else {
            windows.push(fitted);
        }
    }
    Ok(windows)
}

/// Draws `count` seeded uniform windows, round-robin across the images.
/// Too-small images are skipped with a warning; it is an error only when
/// every image is too small.
pub fn sample_negative_windows(
    images: &[GrayImage],
    count: usize,
    width: u32,
    height: u32,
    seed: u64,
) -> Result<Vec<GrayImage>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut usable = Vec::new();
    let mut skipped: Option<(u32, u32)> = None;
    for img in images {
        if img.width() >= width && img.height() >= height {
            usable.push(img);
        } else {
            eprintln!(
                "warning: skipping {}x{} negative, window is {}x{}",
                img.width(),
                img.height(),
                width,
                height
            );
            skipped.get_or_insert((img.width(), img.height()));
        }
    }
    if usable.is_empty() {
        return match skipped {
            Some((w, h)) => Err(Error::ImageTooSmall {
                width: w,
                height: h,
            }),
            None => Err(Error::NoNegatives),
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut windows = Vec::with_capacity(count);
    for k in 0..count {
        let img = usable[k % usable.len()];
        let x = rng.gen_range(0..=img.width() - width);
        let y = rng.gen_range(0..=img.height() - height);
        windows.push(img.crop(x, y, width, height));
    }
    Ok(windows)
}
