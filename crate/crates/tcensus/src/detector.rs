//! Multi-scale sliding-window detection.
//!
//! The input image is rescaled into a pyramid, every level is scanned on a
//! stride lattice with the integral-image scorer, hits are mapped back to
//! original-image coordinates and merged through greedy non-maximum
//! suppression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census::{utct_images, GrayImage};
use crate::classifier::{scan_scores, scan_scores_naive, LinearModel};
use crate::error::Result;
use crate::features::Rect;

fn default_scale_factor() -> f64 {
    2f64.powf(0.125)
}

/// Image-pyramid parameters. Level `k` measures
/// `floor(original / scale_factor^k)`; levels where the detection window no
/// longer fits are excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PyramidConfig {
    #[serde(default = "default_scale_factor")]
    pub scale_factor: f64,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self {
            scale_factor: default_scale_factor(),
        }
    }
}

/// One rescaled pyramid level.
#[derive(Debug, Clone)]
pub struct PyramidLevel {
    pub index: usize,
    /// Nominal scale `scale_factor^index` mapping level coordinates back to
    /// the original image.
    pub scale: f64,
    pub image: GrayImage,
}

/// Builds every pyramid level on which a `window_width` x `window_height`
/// window fits. Level 0 is the original image.
pub fn pyramid_levels(
    img: &GrayImage,
    cfg: &PyramidConfig,
    window_width: u32,
    window_height: u32,
) -> Vec<PyramidLevel> {
    assert!(cfg.scale_factor > 1.0, "pyramid factor must exceed 1");
    let mut levels = Vec::new();
    let mut k = 0usize;
    loop {
        let scale = cfg.scale_factor.powi(k as i32);
        let w = (f64::from(img.width()) / scale).floor() as u32;
        let h = (f64::from(img.height()) / scale).floor() as u32;
        if w < window_width || h < window_height {
            break;
        }
        let image = if k == 0 {
            img.clone()
        } else {
            resize_bilinear(img, w, h)
        };
        levels.push(PyramidLevel {
            index: k,
            scale,
            image,
        });
        k += 1;
    }
    levels
}

/// Bilinear resampling with centre-aligned coordinates.
pub fn resize_bilinear(img: &GrayImage, new_width: u32, new_height: u32) -> GrayImage {
    assert!(new_width >= 1 && new_height >= 1);
    let (sw, sh) = (img.width() as f64, img.height() as f64);
    let x_ratio = sw / f64::from(new_width);
    let y_ratio = sh / f64::from(new_height);
    GrayImage::from_fn(new_width, new_height, |x, y| {
        let sx = ((f64::from(x) + 0.5) * x_ratio - 0.5).clamp(0.0, sw - 1.0);
        let sy = ((f64::from(y) + 0.5) * y_ratio - 0.5).clamp(0.0, sh - 1.0);
        let x0 = sx.floor() as u32;
        let y0 = sy.floor() as u32;
        let x1 = (x0 + 1).min(img.width() - 1);
        let y1 = (y0 + 1).min(img.height() - 1);
        let (tx, ty) = (sx - f64::from(x0), sy - f64::from(y0));
        let top = f64::from(img.get(x0, y0)) * (1.0 - tx) + f64::from(img.get(x1, y0)) * tx;
        let bottom = f64::from(img.get(x0, y1)) * (1.0 - tx) + f64::from(img.get(x1, y1)) * tx;
        (top * (1.0 - ty) + bottom * ty).round() as u8
    })
}

/// Scored bounding box in original-image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub rect: Rect,
    pub score: f64,
    pub level: usize,
}

/// Which scoring route the scanner takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    /// Integral-image auxiliary scoring.
    Fast,
    /// Feature extraction followed by a dot product.
    Naive,
}

/// Nearest integer with halves rounded toward negative infinity.
#[inline]
fn round_half_down(v: f64) -> u32 {
    (v - 0.5).ceil().max(0.0) as u32
}

/// Scores every stride-lattice origin of one pyramid level; origins scoring
/// strictly above `threshold` become detections in original coordinates.
pub fn scan_scale(
    level: &PyramidLevel,
    model: &LinearModel,
    stride: u32,
    threshold: f64,
    mode: ScoreMode,
) -> Result<Vec<Detection>> {
    let layout = model.layout();
    let codes = utct_images(&level.image)?;
    let scored = match mode {
        ScoreMode::Fast if !model.meta().normalized => scan_scores(model, &codes, stride)?,
        _ => scan_scores_naive(model, &codes, stride)?,
    };
    let s = level.scale;
    let width = round_half_down(f64::from(layout.window_width()) * s);
    let height = round_half_down(f64::from(layout.window_height()) * s);
    Ok(scored
        .into_iter()
        .filter(|&(_, _, score)| score > threshold)
        .map(|(ox, oy, score)| Detection {
            rect: Rect::new(
                round_half_down(f64::from(oy) * s),
                round_half_down(f64::from(ox) * s),
                height,
                width,
            ),
            score,
            level: level.index,
        })
        .collect())
}

/// Intersection over union of two pixel rectangles.
pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let ix = overlap(a.left, a.width, b.left, b.width);
    let iy = overlap(a.top, a.height, b.top, b.height);
    let inter = ix * iy;
    if inter == 0.0 {
        return 0.0;
    }
    let union = f64::from(a.width) * f64::from(a.height)
        + f64::from(b.width) * f64::from(b.height)
        - inter;
    inter / union
}

fn overlap(a0: u32, alen: u32, b0: u32, blen: u32) -> f64 {
    let lo = a0.max(b0);
    let hi = (a0 + alen).min(b0 + blen);
    if hi > lo {
        f64::from(hi - lo)
    } else {
        0.0
    }
}

/// Greedy non-maximum suppression: keep the best-scoring box, drop everything
/// overlapping it above `iou_threshold`, repeat. Score ties break by
/// `(level, top, left)` so the output order is stable.
pub fn nms(mut detections: Vec<Detection>, iou_threshold: f64) -> Vec<Detection> {
    assert!((0.0..1.0).contains(&iou_threshold));
    detections.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("detection scores are finite")
            .then_with(|| {
                (a.level, a.rect.top, a.rect.left).cmp(&(b.level, b.rect.top, b.rect.left))
            })
    });
    let mut kept: Vec<Detection> = Vec::new();
    for det in detections {
        if kept.iter().all(|k| iou(&k.rect, &det.rect) <= iou_threshold) {
            kept.push(det);
        }
    }
    kept
}

/// Detection thresholds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectParams {
    pub stride: u32,
    pub score_threshold: f64,
    pub nms_iou: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            stride: 4,
            score_threshold: 0.0,
            nms_iou: 0.5,
        }
    }
}

/// Full multi-scale detection: pyramid, per-level scan, merge, NMS.
pub fn detect(
    img: &GrayImage,
    model: &LinearModel,
    pyramid: &PyramidConfig,
    params: &DetectParams,
) -> Result<Vec<Detection>> {
    detect_with_mode(img, model, pyramid, params, ScoreMode::Fast)
}

/// [`detect`] with an explicit scoring route; the naive route exists as the
/// independent slow half of the fast/naive equivalence check.
pub fn detect_with_mode(
    img: &GrayImage,
    model: &LinearModel,
    pyramid: &PyramidConfig,
    params: &DetectParams,
    mode: ScoreMode,
) -> Result<Vec<Detection>> {
    let layout = model.layout();
    let levels = pyramid_levels(img, pyramid, layout.window_width(), layout.window_height());
    let per_level: Vec<Vec<Detection>> = levels
        .par_iter()
        .map(|level| scan_scale(level, model, params.stride, params.score_threshold, mode))
        .collect::<Result<_>>()?;
    Ok(nms(
        per_level.into_iter().flatten().collect(),
        params.nms_iou,
    ))
}
