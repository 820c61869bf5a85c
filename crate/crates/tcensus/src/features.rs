//! Block layouts and histogram features over census-code images.
//!
//! A detection window is tiled by blocks; each block contributes one
//! histogram per code plane (59 bins per ternary sub-pattern, 256 bins for
//! the binary baseline) and the concatenation of all block histograms is the
//! window's feature vector. Blocks may be plain rectangles or extension
//! structures that append a half-size rectangle on one side; every structure
//! materializes as at most four disjoint rectangles, and only the 1-pixel
//! inset interior of each rectangle is counted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census::{utct_images, CodeImagePair, CtImage, GrayImage, LABEL_COUNT};
use crate::error::{Error, Result};
use crate::svm::{solve, SvmConfig};

/// Axis-aligned rectangle in window-relative pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub top: u32,
    pub left: u32,
    pub height: u32,
    pub width: u32,
}

impl Rect {
    pub fn new(top: u32, left: u32, height: u32, width: u32) -> Self {
        Self {
            top,
            left,
            height,
            width,
        }
    }

    /// Interior obtained by dropping the 1-pixel border; the only pixels a
    /// rectangle contributes to histograms and scores.
    #[inline]
    pub fn inset(&self) -> Rect {
        debug_assert!(self.width >= 3 && self.height >= 3);
        Rect {
            top: self.top + 1,
            left: self.left + 1,
            height: self.height - 2,
            width: self.width - 2,
        }
    }

    #[inline]
    pub fn interior_area(&self) -> u64 {
        u64::from(self.height - 2) * u64::from(self.width - 2)
    }

    fn intersects(&self, other: &Rect) -> bool {
        self.left < other.left + other.width
            && other.left < self.left + self.width
            && self.top < other.top + other.height
            && other.top < self.top + self.height
    }

    fn fits_in(&self, width: u32, height: u32) -> bool {
        self.width >= 3
            && self.height >= 3
            && u64::from(self.left) + u64::from(self.width) <= u64::from(width)
            && u64::from(self.top) + u64::from(self.height) <= u64::from(height)
    }
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[top={} left={} h={} w={}]",
            self.top, self.left, self.height, self.width
        )
    }
}

/// The five block shapes. Order is the tie-break order used by block
/// selection: `Base` wins ties, then earlier extensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockVariant {
    Base,
    ExtendUp,
    ExtendDown,
    ExtendLeft,
    ExtendRight,
}

impl BlockVariant {
    pub const ALL: [BlockVariant; 5] = [
        BlockVariant::Base,
        BlockVariant::ExtendUp,
        BlockVariant::ExtendDown,
        BlockVariant::ExtendLeft,
        BlockVariant::ExtendRight,
    ];
}

/// A block: a base rectangle plus an optional half-size extension on one
/// side, materialized as 1-2 disjoint rectangles in reading order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionBlockStructure {
    pub variant: BlockVariant,
    pub base: Rect,
}

impl ExtensionBlockStructure {
    pub fn new(variant: BlockVariant, base: Rect) -> Self {
        Self { variant, base }
    }

    pub fn base_only(base: Rect) -> Self {
        Self::new(BlockVariant::Base, base)
    }

    /// Materialized rectangles. Callers must have checked [`fits`](Self::fits)
    /// first; an extension that leaves the window panics here.
    pub fn rects(&self) -> Vec<Rect> {
        let b = self.base;
        let half_h = b.height / 2;
        let half_w = b.width / 2;
        match self.variant {
            BlockVariant::Base => vec![b],
            BlockVariant::ExtendUp => vec![
                Rect::new(b.top - half_h, b.left, half_h, b.width),
                b,
            ],
            BlockVariant::ExtendDown => vec![
                b,
                Rect::new(b.top + b.height, b.left, half_h, b.width),
            ],
            BlockVariant::ExtendLeft => vec![
                Rect::new(b.top, b.left - half_w, b.height, half_w),
                b,
            ],
            BlockVariant::ExtendRight => vec![
                b,
                Rect::new(b.top, b.left + b.width, b.height, half_w),
            ],
        }
    }

    /// Whether every materialized rectangle lies inside a `width`x`height`
    /// window with at least a 3x3 extent.
    pub fn fits(&self, width: u32, height: u32) -> bool {
        let b = self.base;
        if !b.fits_in(width, height) {
            return false;
        }
        let half_h = b.height / 2;
        let half_w = b.width / 2;
        let ext = match self.variant {
            BlockVariant::Base => return true,
            BlockVariant::ExtendUp => {
                if b.top < half_h {
                    return false;
                }
                Rect::new(b.top - half_h, b.left, half_h, b.width)
            }
            BlockVariant::ExtendDown => Rect::new(b.top + b.height, b.left, half_h, b.width),
            BlockVariant::ExtendLeft => {
                if b.left < half_w {
                    return false;
                }
                Rect::new(b.top, b.left - half_w, b.height, half_w)
            }
            BlockVariant::ExtendRight => Rect::new(b.top, b.left + b.width, b.height, half_w),
        };
        ext.fits_in(width, height)
    }

    /// Sum of interior areas over the materialized rectangles.
    pub fn counted_pixels(&self) -> u64 {
        self.rects().iter().map(Rect::interior_area).sum()
    }

    /// True when the counted interiors of the two structures share a pixel.
    pub fn counted_regions_intersect(&self, other: &ExtensionBlockStructure) -> bool {
        self.rects().iter().any(|a| {
            other
                .rects()
                .iter()
                .any(|b| a.inset().intersects(&b.inset()))
        })
    }
}

/// Histogram width per block and code plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    /// 59 bins per ternary sub-pattern, two planes per block.
    Utct59,
    /// 256 bins for the binary census baseline, one plane per block.
    Ct256,
}

impl BinScheme {
    pub fn bins(&self) -> usize {
        match self {
            BinScheme::Utct59 => LABEL_COUNT,
            BinScheme::Ct256 => 256,
        }
    }

    pub fn planes(&self) -> usize {
        match self {
            BinScheme::Utct59 => 2,
            BinScheme::Ct256 => 1,
        }
    }

    /// Feature dimension contributed by one block.
    pub fn block_dim(&self) -> usize {
        self.bins() * self.planes()
    }
}

/// Ordered set of blocks tiling one detection window. Block order defines
/// feature-vector coordinate order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutFile", into = "LayoutFile")]
pub struct BlockLayout {
    window_width: u32,
    window_height: u32,
    bins: BinScheme,
    blocks: Vec<ExtensionBlockStructure>,
}

const LAYOUT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayoutFile {
    version: u32,
    window: [u32; 2],
    bins: BinScheme,
    blocks: Vec<ExtensionBlockStructure>,
}

impl From<BlockLayout> for LayoutFile {
    fn from(layout: BlockLayout) -> Self {
        LayoutFile {
            version: LAYOUT_FORMAT_VERSION,
            window: [layout.window_width, layout.window_height],
            bins: layout.bins,
            blocks: layout.blocks,
        }
    }
}

impl TryFrom<LayoutFile> for BlockLayout {
    type Error = Error;

    fn try_from(file: LayoutFile) -> Result<Self> {
        if file.version != LAYOUT_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported layout version {}",
                file.version
            )));
        }
        BlockLayout::new(file.window[0], file.window[1], file.bins, file.blocks)
    }
}

impl BlockLayout {
    pub fn new(
        window_width: u32,
        window_height: u32,
        bins: BinScheme,
        blocks: Vec<ExtensionBlockStructure>,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidConfig("layout needs at least one block".into()));
        }
        for s in &blocks {
            if !s.fits(window_width, window_height) {
                return Err(Error::OutOfBounds {
                    rect: s.base.to_string(),
                    width: window_width,
                    height: window_height,
                });
            }
        }
        Ok(Self {
            window_width,
            window_height,
            bins,
            blocks,
        })
    }

    /// Regular grid of `Base` blocks in row-major order (y outer, x inner).
    pub fn base_grid(
        window_width: u32,
        window_height: u32,
        block_width: u32,
        block_height: u32,
        stride: u32,
        bins: BinScheme,
    ) -> Result<Self> {
        let grid = grid_positions(window_width, window_height, block_width, block_height, stride)?;
        let blocks = grid
            .into_iter()
            .map(ExtensionBlockStructure::base_only)
            .collect();
        Self::new(window_width, window_height, bins, blocks)
    }

    pub fn window_width(&self) -> u32 {
        self.window_width
    }

    pub fn window_height(&self) -> u32 {
        self.window_height
    }

    pub fn bins(&self) -> BinScheme {
        self.bins
    }

    pub fn blocks(&self) -> &[ExtensionBlockStructure] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.len() * self.bins.block_dim()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Base-rectangle positions of a sliding block grid.
pub fn grid_positions(
    window_width: u32,
    window_height: u32,
    block_width: u32,
    block_height: u32,
    stride: u32,
) -> Result<Vec<Rect>> {
    if stride == 0 || block_width < 3 || block_height < 3 {
        return Err(Error::InvalidConfig(
            "block dimensions must be at least 3 and stride positive".into(),
        ));
    }
    if block_width > window_width || block_height > window_height {
        return Err(Error::InvalidConfig(
            "block does not fit inside the window".into(),
        ));
    }
    let mut grid = Vec::new();
    let mut top = 0;
    while top + block_height <= window_height {
        let mut left = 0;
        while left + block_width <= window_width {
            grid.push(Rect::new(top, left, block_height, block_width));
            left += stride;
        }
        top += stride;
    }
    Ok(grid)
}

/// Dense feature vector, coordinate-bound to the layout it was extracted with.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Optional L1 normalization, applied independently to each block's
    /// segment of the vector. Off for every default pipeline.
    pub fn l1_normalize_blocks(&mut self, layout: &BlockLayout) {
        let chunk = layout.bins().block_dim();
        for seg in self.values.chunks_mut(chunk) {
            let sum: f64 = seg.iter().sum();
            if sum > 0.0 {
                for v in seg {
                    *v /= sum;
                }
            }
        }
    }
}

fn check_rects_in_image(
    structure: &ExtensionBlockStructure,
    origin: (u32, u32),
    width: u32,
    height: u32,
) -> Result<Vec<Rect>> {
    if !structure.fits(u32::MAX, u32::MAX) {
        return Err(Error::OutOfBounds {
            rect: structure.base.to_string(),
            width,
            height,
        });
    }
    let rects = structure.rects();
    for r in &rects {
        let shifted = Rect::new(r.top + origin.1, r.left + origin.0, r.height, r.width);
        if !shifted.fits_in(width, height) {
            return Err(Error::OutOfBounds {
                rect: shifted.to_string(),
                width,
                height,
            });
        }
    }
    Ok(rects)
}

fn accumulate<F: FnMut(u32, u32)>(rects: &[Rect], origin: (u32, u32), mut visit: F) {
    for r in rects {
        let inner = r.inset();
        for y in inner.top..inner.top + inner.height {
            for x in inner.left..inner.left + inner.width {
                visit(x + origin.0, y + origin.1);
            }
        }
    }
}

/// Per-block ternary histograms: one 59-bin histogram per sub-pattern plane,
/// counting the inset interior of every rectangle of the structure.
pub fn block_histogram_utct(
    codes: &CodeImagePair,
    structure: &ExtensionBlockStructure,
    origin: (u32, u32),
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rects = check_rects_in_image(structure, origin, codes.width(), codes.height())?;
    let mut h1 = vec![0.0; LABEL_COUNT];
    let mut h2 = vec![0.0; LABEL_COUNT];
    accumulate(&rects, origin, |x, y| {
        h1[codes.label1(x, y) as usize] += 1.0;
        h2[codes.label2(x, y) as usize] += 1.0;
    });
    Ok((h1, h2))
}

/// Per-block binary-census histogram (256 bins).
pub fn block_histogram_ct(
    ct: &CtImage,
    structure: &ExtensionBlockStructure,
    origin: (u32, u32),
) -> Result<Vec<f64>> {
    let rects = check_rects_in_image(structure, origin, ct.width(), ct.height())?;
    let mut hist = vec![0.0; 256];
    accumulate(&rects, origin, |x, y| {
        hist[ct.code(x, y) as usize] += 1.0;
    });
    Ok(hist)
}

/// Concatenated per-block ternary feature: for each block, the sub-pattern-1
/// histogram immediately followed by the sub-pattern-2 histogram.
pub fn extract_tcentrist(
    codes: &CodeImagePair,
    layout: &BlockLayout,
    origin: (u32, u32),
) -> Result<FeatureVector> {
    if layout.bins() != BinScheme::Utct59 {
        return Err(Error::LayoutMismatch {
            expected: LABEL_COUNT,
            actual: layout.bins().bins(),
        });
    }
    let mut values = Vec::with_capacity(layout.total_dim());
    for block in layout.blocks() {
        let (h1, h2) = block_histogram_utct(codes, block, origin)?;
        values.extend_from_slice(&h1);
        values.extend_from_slice(&h2);
    }
    Ok(FeatureVector { values })
}

/// Concatenated per-block binary-census feature (256 bins per block).
pub fn extract_centrist(
    ct: &CtImage,
    layout: &BlockLayout,
    origin: (u32, u32),
) -> Result<FeatureVector> {
    if layout.bins() != BinScheme::Ct256 {
        return Err(Error::LayoutMismatch {
            expected: 256,
            actual: layout.bins().bins(),
        });
    }
    let mut values = Vec::with_capacity(layout.total_dim());
    for block in layout.blocks() {
        values.extend_from_slice(&block_histogram_ct(ct, block, origin)?);
    }
    Ok(FeatureVector { values })
}

/// Settings for per-position structure selection.
#[derive(Debug, Clone)]
pub struct SelectionConfig {
    pub svm: SvmConfig,
    /// Seed of the stratified 80/20 train/holdout shuffle.
    pub split_seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            svm: SvmConfig::default(),
            split_seed: 17,
        }
    }
}

/// Picks, independently per grid position, the candidate structure whose
/// block-local linear classifier scores best on a held-out split.
///
/// Ties break toward `Base`, then toward the earlier variant in
/// [`BlockVariant::ALL`]; candidates that leave the window are skipped for
/// that position (falling back to `Base` when none fit).
pub fn select_local_optimal_blocks(
    windows: &[GrayImage],
    labels: &[i8],
    window_width: u32,
    window_height: u32,
    grid: &[Rect],
    candidates: &[BlockVariant],
    cfg: &SelectionConfig,
) -> Result<BlockLayout> {
    assert_eq!(windows.len(), labels.len());
    for class in [1i8, -1] {
        let count = labels.iter().filter(|&&l| l == class).count();
        if count < 2 {
            return Err(Error::InsufficientData {
                class: i32::from(class),
                count,
            });
        }
    }
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty block grid".into()));
    }

    let codes: Vec<CodeImagePair> = windows
        .par_iter()
        .map(|w| utct_images(w))
        .collect::<Result<_>>()?;

    let (train_idx, holdout_idx) = stratified_split(labels, cfg.split_seed);

    let chosen: Vec<ExtensionBlockStructure> = grid
        .par_iter()
        .map(|&base| {
            let mut best: Option<(f64, ExtensionBlockStructure)> = None;
            for &variant in candidates {
                let structure = ExtensionBlockStructure::new(variant, base);
                if !structure.fits(window_width, window_height) {
                    continue;
                }
                let acc = candidate_accuracy(
                    &codes,
                    labels,
                    &structure,
                    &train_idx,
                    &holdout_idx,
                    &cfg.svm,
                )?;
                let better = match &best {
                    None => true,
                    Some((best_acc, _)) => acc > *best_acc,
                };
                if better {
                    best = Some((acc, structure));
                }
            }
            Ok(best
                .map(|(_, s)| s)
                .unwrap_or_else(|| ExtensionBlockStructure::base_only(base)))
        })
        .collect::<Result<_>>()?;

    BlockLayout::new(window_width, window_height, BinScheme::Utct59, chosen)
}

fn candidate_accuracy(
    codes: &[CodeImagePair],
    labels: &[i8],
    structure: &ExtensionBlockStructure,
    train_idx: &[usize],
    holdout_idx: &[usize],
    svm: &SvmConfig,
) -> Result<f64> {
    let feature = |i: usize| -> Result<Vec<f64>> {
        let (mut h1, h2) = block_histogram_utct(&codes[i], structure, (0, 0))?;
        h1.extend_from_slice(&h2);
        Ok(h1)
    };

    let mut rows = Vec::with_capacity(train_idx.len());
    let mut row_labels = Vec::with_capacity(train_idx.len());
    for &i in train_idx {
        rows.push(feature(i)?);
        row_labels.push(labels[i]);
    }
    let row_refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let model = solve(&row_refs, &row_labels, svm)?;

    let mut correct = 0usize;
    for &i in holdout_idx {
        let x = feature(i)?;
        let predicted = if model.score(&x) > 0.0 { 1i8 } else { -1 };
        if predicted == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / holdout_idx.len() as f64)
}

/// Stratified 80/20 split; per-class order comes from one seeded shuffle, so
/// the split is a pure function of `(labels, seed)`.
fn stratified_split(labels: &[i8], seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(&mut rng);
        let n_train = ((idx.len() * 4) / 5).max(1).min(idx.len().saturating_sub(1));
        train.extend_from_slice(&idx[..n_train]);
        holdout.extend_from_slice(&idx[n_train..]);
    }
    (train, holdout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_codes(w: u32, h: u32) -> CodeImagePair {
        utct_images(&GrayImage::new(w, h, vec![9; (w * h) as usize])).unwrap()
    }

    #[test]
    fn default_grid_has_55_blocks() {
        let layout =
            BlockLayout::base_grid(36, 72, 12, 12, 6, BinScheme::Utct59).unwrap();
        assert_eq!(layout.block_count(), 55);
        assert_eq!(layout.total_dim(), 6490);
        let ct_layout = BlockLayout::base_grid(36, 72, 12, 12, 6, BinScheme::Ct256).unwrap();
        assert_eq!(ct_layout.total_dim(), 14080);
    }

    #[test]
    fn extension_rects_are_disjoint_and_half_sized() {
        let base = Rect::new(12, 12, 12, 12);
        for variant in BlockVariant::ALL {
            let s = ExtensionBlockStructure::new(variant, base);
            let rects = s.rects();
            assert!(rects.len() <= 4 && !rects.is_empty());
            for (i, a) in rects.iter().enumerate() {
                for b in &rects[i + 1..] {
                    assert!(!a.intersects(b), "{variant:?}: {a} intersects {b}");
                }
            }
            let expected = match variant {
                BlockVariant::Base => 100,
                _ => 100 + 40, // 12x12 inset + 6x12 (or 12x6) inset
            };
            assert_eq!(s.counted_pixels(), expected);
        }
    }

    #[test]
    fn extension_fit_checks_window_bounds() {
        let top_row = ExtensionBlockStructure::new(BlockVariant::ExtendUp, Rect::new(0, 0, 12, 12));
        assert!(!top_row.fits(36, 72));
        let interior =
            ExtensionBlockStructure::new(BlockVariant::ExtendUp, Rect::new(6, 0, 12, 12));
        assert!(interior.fits(36, 72));
        let right_edge =
            ExtensionBlockStructure::new(BlockVariant::ExtendRight, Rect::new(0, 24, 12, 12));
        assert!(!right_edge.fits(36, 72));
    }

    #[test]
    fn block_histogram_constant_image_masses_bin_zero() {
        let codes = constant_codes(24, 24);
        let s = ExtensionBlockStructure::base_only(Rect::new(4, 4, 8, 8));
        let (h1, h2) = block_histogram_utct(&codes, &s, (0, 0)).unwrap();
        assert_eq!(h1[0], 36.0);
        assert_eq!(h2[0], 36.0);
        assert_eq!(h1.iter().sum::<f64>(), 36.0);
        assert_eq!(h2.iter().sum::<f64>(), 36.0);
    }

    #[test]
    fn degenerate_3x3_rect_counts_one_pixel() {
        let codes = constant_codes(16, 16);
        let s = ExtensionBlockStructure::base_only(Rect::new(5, 5, 3, 3));
        let (h1, _) = block_histogram_utct(&codes, &s, (0, 0)).unwrap();
        assert_eq!(h1[0], 1.0);
        assert_eq!(h1.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn out_of_bounds_rect_is_rejected() {
        let codes = constant_codes(16, 16);
        let s = ExtensionBlockStructure::base_only(Rect::new(10, 10, 8, 8));
        assert!(matches!(
            block_histogram_utct(&codes, &s, (0, 0)),
            Err(Error::OutOfBounds { .. })
        ));
        let ok = ExtensionBlockStructure::base_only(Rect::new(2, 2, 8, 8));
        assert!(block_histogram_utct(&codes, &ok, (6, 6)).is_ok());
        assert!(matches!(
            block_histogram_utct(&codes, &ok, (7, 7)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn tcentrist_constant_two_blocks() {
        let codes = constant_codes(36, 72);
        let layout = BlockLayout::new(
            36,
            72,
            BinScheme::Utct59,
            vec![
                ExtensionBlockStructure::base_only(Rect::new(0, 0, 12, 12)),
                ExtensionBlockStructure::base_only(Rect::new(12, 12, 12, 12)),
            ],
        )
        .unwrap();
        let f = extract_tcentrist(&codes, &layout, (0, 0)).unwrap();
        assert_eq!(f.len(), 236);
        let nonzero: Vec<(usize, f64)> = f
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        assert_eq!(nonzero, vec![(0, 100.0), (59, 100.0), (118, 100.0), (177, 100.0)]);
    }

    #[test]
    fn centrist_constant_single_block() {
        let img = GrayImage::new(36, 72, vec![7; 36 * 72]);
        let ct = crate::census::ct_image(&img).unwrap();
        let layout = BlockLayout::new(
            36,
            72,
            BinScheme::Ct256,
            vec![ExtensionBlockStructure::base_only(Rect::new(0, 0, 12, 12))],
        )
        .unwrap();
        let f = extract_centrist(&ct, &layout, (0, 0)).unwrap();
        assert_eq!(f.len(), 256);
        assert_eq!(f.values[0], 100.0);
        assert_eq!(f.values.iter().sum::<f64>(), 100.0);
    }

    #[test]
    fn permuting_blocks_permutes_whole_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = GrayImage::from_fn(30, 30, |_, _| rng.gen());
        let codes = utct_images(&img).unwrap();
        let a = ExtensionBlockStructure::base_only(Rect::new(2, 3, 10, 9));
        let b = ExtensionBlockStructure::base_only(Rect::new(14, 8, 12, 12));
        let ab = BlockLayout::new(30, 30, BinScheme::Utct59, vec![a, b]).unwrap();
        let ba = BlockLayout::new(30, 30, BinScheme::Utct59, vec![b, a]).unwrap();
        let fab = extract_tcentrist(&codes, &ab, (0, 0)).unwrap();
        let fba = extract_tcentrist(&codes, &ba, (0, 0)).unwrap();
        assert_eq!(fab.values[..118], fba.values[118..]);
        assert_eq!(fab.values[118..], fba.values[..118]);
    }

    #[test]
    fn histogram_mass_matches_counted_pixels() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = GrayImage::from_fn(40, 40, |_, _| rng.gen());
        let codes = utct_images(&img).unwrap();
        for variant in BlockVariant::ALL {
            let s = ExtensionBlockStructure::new(variant, Rect::new(12, 12, 12, 12));
            let (h1, h2) = block_histogram_utct(&codes, &s, (2, 1)).unwrap();
            let expected = s.counted_pixels() as f64;
            assert_eq!(h1.iter().sum::<f64>(), expected);
            assert_eq!(h2.iter().sum::<f64>(), expected);
        }
    }

    #[test]
    fn layout_json_round_trip() {
        let layout = BlockLayout::new(
            36,
            72,
            BinScheme::Utct59,
            vec![
                ExtensionBlockStructure::new(BlockVariant::ExtendUp, Rect::new(6, 0, 12, 12)),
                ExtensionBlockStructure::base_only(Rect::new(0, 12, 12, 12)),
            ],
        )
        .unwrap();
        let json = layout.to_json();
        let restored = BlockLayout::from_json(&json).unwrap();
        assert_eq!(layout, restored);
        assert_eq!(json, restored.to_json());
    }

    #[test]
    fn normalization_scales_each_block_segment() {
        let codes = constant_codes(36, 72);
        let layout = BlockLayout::base_grid(36, 72, 12, 12, 12, BinScheme::Utct59).unwrap();
        let mut f = extract_tcentrist(&codes, &layout, (0, 0)).unwrap();
        f.l1_normalize_blocks(&layout);
        for seg in f.values.chunks(118) {
            assert!((seg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
