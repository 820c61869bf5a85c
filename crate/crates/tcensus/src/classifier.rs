//! Linear window classifier: training, bootstrap hard-negative mining, and
//! integral-image fast scoring.
//!
//! Fast scoring works through auxiliary images: a pixel of auxiliary plane
//! `t` holds the trained weight of the coordinate (block containing the
//! pixel, sub-pattern `t`, bin = the pixel's label). Summing a block's inset
//! rectangles over the integral images of those planes then reproduces the
//! dot product of the weights with the window's histogram feature, four table
//! lookups per rectangle per plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census::{CodeImagePair, GrayImage, LABEL_COUNT};
use crate::detector::{pyramid_levels, PyramidConfig};
use crate::error::{Error, Result};
use crate::features::{extract_tcentrist, BinScheme, BlockLayout, FeatureVector};
use crate::integral::IntegralImage;
use crate::svm::{solve, SvmConfig};

/// Provenance recorded alongside trained weights.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainMeta {
    pub seed: u64,
    pub c: f64,
    pub rounds: u32,
    pub hard_negatives_added: usize,
    pub normalized: bool,
}

impl TrainMeta {
    fn single_round(cfg: &SvmConfig) -> Self {
        Self {
            seed: cfg.seed,
            c: cfg.c,
            rounds: 1,
            hard_negatives_added: 0,
            normalized: false,
        }
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// Trained linear model, coordinate-bound to its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
    layout: BlockLayout,
    meta: TrainMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    layout: BlockLayout,
    /// One weight per coordinate, as hex of the f64's little-endian bytes.
    weights: Vec<String>,
    bias: String,
    meta: TrainMeta,
}

fn f64_to_hex(v: f64) -> String {
    let mut s = String::with_capacity(16);
    for byte in v.to_bits().to_le_bytes() {
        s.push_str(&format!("{byte:02x}"));
    }
    s
}

fn f64_from_hex(s: &str) -> Result<f64> {
    if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Error::InvalidConfig(format!("bad weight encoding {s:?}")));
    }
    let mut bytes = [0u8; 8];
    for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
        let hi = (chunk[0] as char).to_digit(16).unwrap() as u8;
        let lo = (chunk[1] as char).to_digit(16).unwrap() as u8;
        bytes[i] = (hi << 4) | lo;
    }
    Ok(f64::from_bits(u64::from_le_bytes(bytes)))
}

impl LinearModel {
    /// Trains a single-round linear SVM on features sharing `layout`.
    pub fn train(
        features: &[FeatureVector],
        labels: &[i8],
        layout: BlockLayout,
        cfg: &SvmConfig,
    ) -> Result<Self> {
        let dim = layout.total_dim();
        for f in features {
            assert_eq!(f.len(), dim, "feature dimension must match the layout");
        }
        let rows: Vec<&[f64]> = features.iter().map(|f| f.values.as_slice()).collect();
        let plane = solve(&rows, labels, cfg)?;
        Ok(Self {
            weights: plane.weights,
            bias: plane.bias,
            layout,
            meta: TrainMeta::single_round(cfg),
        })
    }

    pub fn from_parts(
        weights: Vec<f64>,
        bias: f64,
        layout: BlockLayout,
        meta: TrainMeta,
    ) -> Self {
        assert_eq!(weights.len(), layout.total_dim());
        Self {
            weights,
            bias,
            layout,
            meta,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn meta(&self) -> &TrainMeta {
        &self.meta
    }

    /// Flat weight coordinate of `(block, plane, bin)`.
    #[inline]
    pub fn weight_index(&self, block: usize, plane: usize, bin: usize) -> usize {
        let bins = self.layout.bins().bins();
        debug_assert!(plane < self.layout.bins().planes() && bin < bins);
        block * self.layout.bins().block_dim() + plane * bins + bin
    }

    #[inline]
    pub fn score(&self, feature: &FeatureVector) -> f64 {
        debug_assert_eq!(feature.len(), self.weights.len());
        self.weights
            .iter()
            .zip(&feature.values)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            layout: self.layout.clone(),
            weights: self.weights.iter().copied().map(f64_to_hex).collect(),
            bias: f64_to_hex(self.bias),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        let weights = file
            .weights
            .iter()
            .map(|s| f64_from_hex(s))
            .collect::<Result<Vec<f64>>>()?;
        if weights.len() != file.layout.total_dim() {
            return Err(Error::InvalidConfig(format!(
                "model has {} weights but its layout needs {}",
                weights.len(),
                file.layout.total_dim()
            )));
        }
        Ok(Self {
            weights,
            bias: f64_from_hex(&file.bias)?,
            layout: file.layout,
            meta: file.meta,
        })
    }
}

/// Auxiliary weight planes for one window placement.
///
/// Blocks whose counted interiors overlap cannot share a plane, so blocks
/// are grouped into disjoint layers; a plain non-overlapping grid always
/// yields exactly one layer, which is what [`a1`](Self::a1)/[`a2`](Self::a2)
/// expose.
#[derive(Debug, Clone)]
pub struct AuxiliaryImagePair {
    width: u32,
    height: u32,
    layers: Vec<(Vec<f64>, Vec<f64>)>,
    block_layer: Vec<usize>,
}

impl AuxiliaryImagePair {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Sub-pattern-1 plane of the first layer (the only layer for gridded layouts).
    pub fn a1(&self) -> &[f64] {
        &self.layers[0].0
    }

    /// Sub-pattern-2 plane of the first layer.
    pub fn a2(&self) -> &[f64] {
        &self.layers[0].1
    }

    pub fn block_layer(&self) -> &[usize] {
        &self.block_layer
    }

    /// Builds the integral tables used by [`fast_window_score`].
    pub fn integrals(&self) -> AuxiliaryIntegrals {
        let (w, h) = (self.width as usize, self.height as usize);
        AuxiliaryIntegrals {
            layers: self
                .layers
                .iter()
                .map(|(a1, a2)| (IntegralImage::new(a1, w, h), IntegralImage::new(a2, w, h)))
                .collect(),
            block_layer: self.block_layer.clone(),
        }
    }
}

/// Integral tables of an [`AuxiliaryImagePair`].
#[derive(Debug, Clone)]
pub struct AuxiliaryIntegrals {
    layers: Vec<(IntegralImage, IntegralImage)>,
    block_layer: Vec<usize>,
}

/// Greedy first-fit grouping of blocks into layers with pairwise-disjoint
/// counted interiors. Deterministic in layout order.
fn assign_layers(layout: &BlockLayout) -> (Vec<usize>, usize) {
    let blocks = layout.blocks();
    let mut block_layer = vec![0usize; blocks.len()];
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        let layer = layers.iter().position(|members| {
            members
                .iter()
                .all(|&j| !block.counted_regions_intersect(&blocks[j]))
        });
        match layer {
            Some(l) => {
                layers[l].push(i);
                block_layer[i] = l;
            }
            None => {
                layers.push(vec![i]);
                block_layer[i] = layers.len() - 1;
            }
        }
    }
    let count = layers.len();
    (block_layer, count)
}

/// Builds the auxiliary weight planes of `model` for the window placed at
/// `origin` on `codes`.
///
/// With `accumulate_overlaps` disabled the layout must be a non-overlapping
/// arrangement (one layer); otherwise overlapping blocks are spread across
/// additional layers, costing proportionally more to build while keeping the
/// same four-lookup scoring.
pub fn build_auxiliary_images(
    model: &LinearModel,
    codes: &CodeImagePair,
    origin: (u32, u32),
    accumulate_overlaps: bool,
) -> Result<AuxiliaryImagePair> {
    let layout = model.layout();
    if layout.bins() != BinScheme::Utct59 {
        return Err(Error::LayoutMismatch {
            expected: LABEL_COUNT,
            actual: layout.bins().bins(),
        });
    }
    let (block_layer, layer_count) = assign_layers(layout);
    if layer_count > 1 && !accumulate_overlaps {
        return Err(Error::LayoutNotGridded);
    }

    let (w, h) = (codes.width(), codes.height());
    let plane_len = w as usize * h as usize;
    let mut layers = vec![(vec![0.0; plane_len], vec![0.0; plane_len]); layer_count];

    for (bi, block) in layout.blocks().iter().enumerate() {
        let (a1, a2) = &mut layers[block_layer[bi]];
        for rect in block.rects() {
            if u64::from(rect.left) + u64::from(origin.0) + u64::from(rect.width) > u64::from(w)
                || u64::from(rect.top) + u64::from(origin.1) + u64::from(rect.height)
                    > u64::from(h)
            {
                return Err(Error::OutOfBounds {
                    rect: rect.to_string(),
                    width: w,
                    height: h,
                });
            }
            let inner = rect.inset();
            let left = inner.left + origin.0;
            let top = inner.top + origin.1;
            for y in top..top + inner.height {
                let row = y as usize * w as usize;
                for x in left..left + inner.width {
                    let idx = row + x as usize;
                    a1[idx] = model.weights[model.weight_index(bi, 0, codes.label1(x, y) as usize)];
                    a2[idx] = model.weights[model.weight_index(bi, 1, codes.label2(x, y) as usize)];
                }
            }
        }
    }

    Ok(AuxiliaryImagePair {
        width: w,
        height: h,
        layers,
        block_layer,
    })
}

/// Integral-image window score: the sum over every block's inset rectangles
/// plus the bias. Matches `<weights, feature>` + bias to 1e-6 relative.
pub fn fast_window_score(
    integrals: &AuxiliaryIntegrals,
    layout: &BlockLayout,
    origin: (u32, u32),
    bias: f64,
) -> f64 {
    let mut lookups = 0u64;
    fast_window_score_counted(integrals, layout, origin, bias, &mut lookups)
}

/// [`fast_window_score`] with an explicit lookup counter (4 lookups per
/// rectangle per plane, independent of block area).
pub fn fast_window_score_counted(
    integrals: &AuxiliaryIntegrals,
    layout: &BlockLayout,
    origin: (u32, u32),
    bias: f64,
    lookups: &mut u64,
) -> f64 {
    debug_assert_eq!(integrals.block_layer.len(), layout.block_count());
    let mut score = bias;
    for (bi, block) in layout.blocks().iter().enumerate() {
        let (i1, i2) = &integrals.layers[integrals.block_layer[bi]];
        for rect in block.rects() {
            let inner = rect.inset();
            let left = (inner.left + origin.0) as usize;
            let top = (inner.top + origin.1) as usize;
            let (rw, rh) = (inner.width as usize, inner.height as usize);
            score += i1.rect_sum_counted(left, top, rw, rh, lookups);
            score += i2.rect_sum_counted(left, top, rw, rh, lookups);
        }
    }
    score
}

/// Naive window score: feature extraction followed by the dot product.
/// The slow half of the fast/naive dual route.
pub fn naive_window_score(
    model: &LinearModel,
    codes: &CodeImagePair,
    origin: (u32, u32),
) -> Result<f64> {
    let mut feature = extract_tcentrist(codes, model.layout(), origin)?;
    if model.meta().normalized {
        feature.l1_normalize_blocks(model.layout());
    }
    Ok(model.score(&feature))
}

/// Full-image auxiliary planes for a single block: every interior pixel gets
/// that block's weight for its label, independent of window placement. Used
/// by the scanner to amortize one build over all window origins.
pub fn block_contribution(
    model: &LinearModel,
    codes: &CodeImagePair,
    block: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (codes.width() as usize, codes.height() as usize);
    let mut c1 = vec![0.0; w * h];
    let mut c2 = vec![0.0; w * h];
    let base = block * model.layout().bins().block_dim();
    let w1 = &model.weights[base..base + LABEL_COUNT];
    let w2 = &model.weights[base + LABEL_COUNT..base + 2 * LABEL_COUNT];
    let (p1, p2) = codes.planes();
    c1.par_chunks_mut(w)
        .zip(c2.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row1, row2))| {
            if y == 0 || y + 1 == h {
                return;
            }
            for x in 1..w - 1 {
                row1[x] = w1[p1[y * w + x] as usize];
                row2[x] = w2[p2[y * w + x] as usize];
            }
        });
    (c1, c2)
}

/// Scores every window origin on the stride lattice of `codes`.
///
/// One auxiliary contribution is built per block and its integral reused for
/// all origins, so each window still costs exactly four lookups per
/// rectangle per plane. Returns `(x, y, score)` in row-major origin order.
pub fn scan_scores(
    model: &LinearModel,
    codes: &CodeImagePair,
    stride: u32,
) -> Result<Vec<(u32, u32, f64)>> {
    assert!(stride >= 1);
    let layout = model.layout();
    if layout.bins() != BinScheme::Utct59 {
        return Err(Error::LayoutMismatch {
            expected: LABEL_COUNT,
            actual: layout.bins().bins(),
        });
    }
    let (w, h) = (codes.width(), codes.height());
    let (ww, wh) = (layout.window_width(), layout.window_height());
    if ww > w || wh > h {
        return Err(Error::WindowTooLarge {
            window_width: ww,
            window_height: wh,
            width: w,
            height: h,
        });
    }

    let xs: Vec<u32> = (0..=w - ww).step_by(stride as usize).collect();
    let ys: Vec<u32> = (0..=h - wh).step_by(stride as usize).collect();
    let mut scores = vec![model.bias(); xs.len() * ys.len()];

    // Blocks stay outer and sequential so every origin accumulates its
    // per-block terms in the same order.
    for (bi, block) in layout.blocks().iter().enumerate() {
        let (c1, c2) = block_contribution(model, codes, bi);
        let i1 = IntegralImage::new(&c1, w as usize, h as usize);
        let i2 = IntegralImage::new(&c2, w as usize, h as usize);
        let rects: Vec<_> = block.rects().iter().map(|r| r.inset()).collect();
        scores
            .par_chunks_mut(xs.len())
            .zip(ys.par_iter())
            .for_each(|(row, &oy)| {
                for (ix, &ox) in xs.iter().enumerate() {
                    let mut acc = 0.0;
                    for inner in &rects {
                        let left = (inner.left + ox) as usize;
                        let top = (inner.top + oy) as usize;
                        acc += i1.rect_sum(left, top, inner.width as usize, inner.height as usize);
                        acc += i2.rect_sum(left, top, inner.width as usize, inner.height as usize);
                    }
                    row[ix] += acc;
                }
            });
    }

    let mut out = Vec::with_capacity(scores.len());
    for (iy, &oy) in ys.iter().enumerate() {
        for (ix, &ox) in xs.iter().enumerate() {
            out.push((ox, oy, scores[iy * xs.len() + ix]));
        }
    }
    Ok(out)
}

/// [`scan_scores`] through the naive extract-then-dot route.
pub fn scan_scores_naive(
    model: &LinearModel,
    codes: &CodeImagePair,
    stride: u32,
) -> Result<Vec<(u32, u32, f64)>> {
    assert!(stride >= 1);
    let layout = model.layout();
    let (w, h) = (codes.width(), codes.height());
    let (ww, wh) = (layout.window_width(), layout.window_height());
    if ww > w || wh > h {
        return Err(Error::WindowTooLarge {
            window_width: ww,
            window_height: wh,
            width: w,
            height: h,
        });
    }
    let xs: Vec<u32> = (0..=w - ww).step_by(stride as usize).collect();
    let ys: Vec<u32> = (0..=h - wh).step_by(stride as usize).collect();
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &oy in &ys {
        for &ox in &xs {
            out.push((ox, oy, naive_window_score(model, codes, (ox, oy))?));
        }
    }
    Ok(out)
}

/// Two-round bootstrap trainer.
#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub svm: SvmConfig,
    /// Random negative windows drawn for round 1.
    pub negative_samples: usize,
    /// Cap on mined hard negatives, hardest (highest score) first.
    pub hard_negative_cap: usize,
    /// Seed of the negative-window sampler.
    pub sample_seed: u64,
    /// Pyramid used when scanning negatives for false positives.
    pub pyramid: PyramidConfig,
    /// Scan stride used during mining.
    pub scan_stride: u32,
    pub normalize: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            svm: SvmConfig::default(),
            negative_samples: 5000,
            hard_negative_cap: 5000,
            sample_seed: 99,
            pyramid: PyramidConfig::default(),
            scan_stride: 4,
            normalize: false,
        }
    }
}

/// Trains round 1 on positives vs. randomly sampled negative windows, rescans
/// the negative images with that model, appends the highest-scoring false
/// positives (score > 0, capped) and retrains. A zero cap reproduces the
/// single-round model exactly.
pub fn bootstrap_train(
    positives: &[GrayImage],
    negative_images: &[GrayImage],
    layout: &BlockLayout,
    cfg: &BootstrapConfig,
) -> Result<LinearModel> {
    if layout.bins() != BinScheme::Utct59 {
        return Err(Error::LayoutMismatch {
            expected: LABEL_COUNT,
            actual: layout.bins().bins(),
        });
    }
    let (ww, wh) = (layout.window_width(), layout.window_height());
    for p in positives {
        assert_eq!(
            (p.width(), p.height()),
            (ww, wh),
            "positive windows must match the layout window size"
        );
    }

    let sampled = crate::dataset::sample_negative_windows(
        negative_images,
        cfg.negative_samples,
        ww,
        wh,
        cfg.sample_seed,
    );
    let sampled = match sampled {
        Ok(windows) => windows,
        Err(Error::ImageTooSmall { .. }) => return Err(Error::NoNegatives),
        Err(e) => return Err(e),
    };
    if cfg.negative_samples > 0 && sampled.is_empty() {
        return Err(Error::NoNegatives);
    }

    let extract = |window: &GrayImage| -> Result<FeatureVector> {
        let codes = crate::census::utct_images(window)?;
        let mut f = extract_tcentrist(&codes, layout, (0, 0))?;
        if cfg.normalize {
            f.l1_normalize_blocks(layout);
        }
        Ok(f)
    };

    let mut features: Vec<FeatureVector> = positives
        .par_iter()
        .chain(sampled.par_iter())
        .map(extract)
        .collect::<Result<_>>()?;
    let mut labels = vec![1i8; positives.len()];
    labels.extend(std::iter::repeat(-1).take(sampled.len()));

    let mut round1 = LinearModel::train(&features, &labels, layout.clone(), &cfg.svm)?;
    round1.meta.normalized = cfg.normalize;

    let mined = mine_hard_negatives(&round1, negative_images, cfg)?;
    let mined_count = mined.len();
    for window in &mined {
        features.push(extract(window)?);
        labels.push(-1);
    }

    let round2 = LinearModel::train(&features, &labels, layout.clone(), &cfg.svm)?;
    Ok(LinearModel {
        meta: TrainMeta {
            rounds: 2,
            hard_negatives_added: mined_count,
            normalized: cfg.normalize,
            ..round2.meta
        },
        ..round2
    })
}

/// Scans every negative image over the pyramid and collects windows the
/// model scores above zero, hardest first.
fn mine_hard_negatives(
    model: &LinearModel,
    negative_images: &[GrayImage],
    cfg: &BootstrapConfig,
) -> Result<Vec<GrayImage>> {
    if cfg.hard_negative_cap == 0 {
        return Ok(Vec::new());
    }
    let layout = model.layout();
    let (ww, wh) = (layout.window_width(), layout.window_height());
    let mut hits: Vec<(f64, GrayImage)> = Vec::new();
    for img in negative_images {
        for level in pyramid_levels(img, &cfg.pyramid, ww, wh) {
            let codes = crate::census::utct_images(&level.image)?;
            let scored = if model.meta().normalized {
                scan_scores_naive(model, &codes, cfg.scan_stride)?
            } else {
                scan_scores(model, &codes, cfg.scan_stride)?
            };
            for (x, y, score) in scored {
                if score > 0.0 {
                    hits.push((score, level.image.crop(x, y, ww, wh)));
                }
            }
        }
    }
    // Stable sort keeps discovery order among equal scores.
    hits.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("scores are finite"));
    hits.truncate(cfg.hard_negative_cap);
    Ok(hits.into_iter().map(|(_, w)| w).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::utct_images;
    use crate::features::{BinScheme, ExtensionBlockStructure, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: u32, h: u32, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.gen())
    }

    fn random_model(layout: BlockLayout, seed: u64) -> LinearModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..layout.total_dim())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        LinearModel::from_parts(
            weights,
            rng.gen_range(-0.5..0.5),
            layout,
            TrainMeta::single_round(&SvmConfig::default()),
        )
    }

    fn gridded_layout() -> BlockLayout {
        BlockLayout::base_grid(24, 24, 8, 8, 8, BinScheme::Utct59).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_planes() {
        let layout = gridded_layout();
        let model = LinearModel::from_parts(
            vec![0.0; layout.total_dim()],
            0.25,
            layout,
            TrainMeta::single_round(&SvmConfig::default()),
        );
        let codes = utct_images(&random_image(30, 30, 1)).unwrap();
        let aux = build_auxiliary_images(&model, &codes, (2, 3), false).unwrap();
        assert_eq!(aux.layer_count(), 1);
        assert!(aux.a1().iter().all(|&v| v == 0.0));
        assert!(aux.a2().iter().all(|&v| v == 0.0));
        let score = fast_window_score(&aux.integrals(), model.layout(), (2, 3), model.bias());
        assert_eq!(score, 0.25);
    }

    #[test]
    fn unit_weight_marks_block_interior() {
        let layout = gridded_layout();
        let mut weights = vec![0.0; layout.total_dim()];
        weights[0] = 1.0; // block 0, sub-pattern 1, bin 0
        let model = LinearModel::from_parts(
            weights,
            0.0,
            layout,
            TrainMeta::single_round(&SvmConfig::default()),
        );
        let img = GrayImage::new(32, 32, vec![50; 32 * 32]);
        let codes = utct_images(&img).unwrap();
        let aux = build_auxiliary_images(&model, &codes, (1, 1), false).unwrap();

        let mut ones = 0;
        for y in 0..32u32 {
            for x in 0..32u32 {
                let v = aux.a1()[(y * 32 + x) as usize];
                // Block 0 occupies window rect (0,0,8,8); at origin (1,1) its
                // inset interior is x,y in [2, 8).
                let inside = (2..8).contains(&x) && (2..8).contains(&y);
                assert_eq!(v, if inside { 1.0 } else { 0.0 }, "at ({x},{y})");
                ones += (v == 1.0) as u32;
            }
        }
        assert_eq!(ones, 36);
        assert!(aux.a2().iter().all(|&v| v == 0.0));

        let score = fast_window_score(&aux.integrals(), model.layout(), (1, 1), model.bias());
        assert_eq!(score, 36.0);
    }

    #[test]
    fn block_sums_match_weight_histogram_products() {
        let layout = gridded_layout();
        let model = random_model(layout, 7);
        let img = random_image(40, 36, 8);
        let codes = utct_images(&img).unwrap();
        let origin = (5, 9);
        let aux = build_auxiliary_images(&model, &codes, origin, false).unwrap();

        for (bi, block) in model.layout().blocks().iter().enumerate() {
            let (h1, h2) =
                crate::features::block_histogram_utct(&codes, block, origin).unwrap();
            let mut expected = 0.0;
            for bin in 0..LABEL_COUNT {
                expected += model.weights()[model.weight_index(bi, 0, bin)] * h1[bin];
                expected += model.weights()[model.weight_index(bi, 1, bin)] * h2[bin];
            }
            let mut actual = 0.0;
            for rect in block.rects() {
                let inner = rect.inset();
                for y in inner.top + origin.1..inner.top + origin.1 + inner.height {
                    for x in inner.left + origin.0..inner.left + origin.0 + inner.width {
                        let idx = (y * codes.width() + x) as usize;
                        actual += aux.a1()[idx] + aux.a2()[idx];
                    }
                }
            }
            assert!(
                (expected - actual).abs() <= 1e-9 * expected.abs().max(1.0),
                "block {bi}: {expected} vs {actual}"
            );
        }
    }

    #[test]
    fn overlapping_layout_needs_accumulation() {
        let layout = BlockLayout::base_grid(24, 24, 12, 12, 6, BinScheme::Utct59).unwrap();
        let model = random_model(layout, 3);
        let codes = utct_images(&random_image(30, 30, 4)).unwrap();
        assert!(matches!(
            build_auxiliary_images(&model, &codes, (0, 0), false),
            Err(Error::LayoutNotGridded)
        ));
        let aux = build_auxiliary_images(&model, &codes, (0, 0), true).unwrap();
        assert!(aux.layer_count() > 1);
    }

    #[test]
    fn fast_score_matches_naive_on_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for case in 0..30 {
            let overlapping = case % 2 == 1;
            let layout = if overlapping {
                BlockLayout::base_grid(20, 20, 10, 10, 5, BinScheme::Utct59).unwrap()
            } else {
                gridded_layout()
            };
            let (ww, wh) = (layout.window_width(), layout.window_height());
            let model = random_model(layout, 200 + case);
            let img = random_image(
                ww + rng.gen_range(0..10),
                wh + rng.gen_range(0..10),
                300 + case,
            );
            let codes = utct_images(&img).unwrap();
            let origin = (
                rng.gen_range(0..=img.width() - ww),
                rng.gen_range(0..=img.height() - wh),
            );
            let aux = build_auxiliary_images(&model, &codes, origin, true).unwrap();
            let fast = fast_window_score(&aux.integrals(), model.layout(), origin, model.bias());
            let naive = naive_window_score(&model, &codes, origin).unwrap();
            assert!(
                (fast - naive).abs() <= 1e-6 * naive.abs().max(1.0),
                "case {case}: fast {fast} vs naive {naive}"
            );
        }
    }

    #[test]
    fn lookup_count_is_area_independent() {
        for (bw, bh, stride) in [(8u32, 8u32, 8u32), (12, 12, 12)] {
            let layout = BlockLayout::base_grid(24, 24, bw, bh, stride, BinScheme::Utct59).unwrap();
            let rect_count: usize = layout.blocks().iter().map(|b| b.rects().len()).sum();
            let model = random_model(layout, 1);
            let codes = utct_images(&random_image(24, 24, 2)).unwrap();
            let aux = build_auxiliary_images(&model, &codes, (0, 0), false).unwrap();
            let mut lookups = 0;
            fast_window_score_counted(
                &aux.integrals(),
                model.layout(),
                (0, 0),
                model.bias(),
                &mut lookups,
            );
            assert_eq!(lookups, 8 * rect_count as u64);
        }
    }

    #[test]
    fn scan_scores_match_naive_route() {
        let layout = BlockLayout::base_grid(16, 16, 8, 8, 4, BinScheme::Utct59).unwrap();
        let model = random_model(layout, 21);
        let codes = utct_images(&random_image(28, 24, 22)).unwrap();
        let fast = scan_scores(&model, &codes, 3).unwrap();
        let naive = scan_scores_naive(&model, &codes, 3).unwrap();
        assert_eq!(fast.len(), naive.len());
        for ((fx, fy, fs), (nx, ny, ns)) in fast.iter().zip(&naive) {
            assert_eq!((fx, fy), (nx, ny));
            assert!((fs - ns).abs() <= 1e-6 * ns.abs().max(1.0));
        }
    }

    #[test]
    fn model_json_round_trip_is_bit_exact() {
        let layout = gridded_layout();
        let model = random_model(layout, 77);
        let json = model.to_json();
        let restored = LinearModel::from_json(&json).unwrap();
        assert_eq!(model, restored);
        assert_eq!(json, restored.to_json());
        // Hex survives non-finite and subnormal payloads too.
        for v in [f64::MIN_POSITIVE / 8.0, -0.0, 1.5e308] {
            assert_eq!(f64_from_hex(&f64_to_hex(v)).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn zero_cap_bootstrap_equals_single_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layout = BlockLayout::base_grid(12, 12, 6, 6, 6, BinScheme::Utct59).unwrap();
        let positives: Vec<GrayImage> = (0..6)
            .map(|_| GrayImage::from_fn(12, 12, |x, y| ((x * 37 + y * 11) % 200) as u8))
            .collect();
        let negatives: Vec<GrayImage> = (0..3)
            .map(|_| GrayImage::from_fn(30, 30, |_, _| rng.gen()))
            .collect();
        let cfg = BootstrapConfig {
            negative_samples: 10,
            hard_negative_cap: 0,
            scan_stride: 4,
            ..BootstrapConfig::default()
        };
        let boot = bootstrap_train(&positives, &negatives, &layout, &cfg).unwrap();

        let sampled =
            crate::dataset::sample_negative_windows(&negatives, 10, 12, 12, cfg.sample_seed)
                .unwrap();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for w in positives.iter().chain(&sampled) {
            let codes = utct_images(w).unwrap();
            features.push(extract_tcentrist(&codes, &layout, (0, 0)).unwrap());
            labels.push(if features.len() <= positives.len() { 1 } else { -1 });
        }
        let single = LinearModel::train(&features, &labels, layout, &cfg.svm).unwrap();
        assert_eq!(boot.weights(), single.weights());
        assert!(boot.bias() == single.bias());
        assert_eq!(boot.meta().hard_negatives_added, 0);
    }
}
