//! Shared test support: literal oracles for the census transforms and
//! features, and the synthetic silhouette dataset.
//!
//! The oracles re-derive every value from the defining formulas with plain
//! per-pixel loops and enumeration. They share no code with the library
//! paths they are used to check (and none with the library's built-in
//! `selftest` references either).

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcensus::census::GrayImage;
use tcensus::features::{BlockLayout, Rect};

pub mod oracle {
    use super::*;

    /// Neighbour offsets in ring order TL, T, TR, R, BR, B, BL, L.
    const RING: [(i32, i32); 8] = [
        (-1, -1),
        (0, -1),
        (1, -1),
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
    ];

    fn at(img: &GrayImage, x: u32, y: u32, d: (i32, i32)) -> i32 {
        i32::from(img.get((x as i32 + d.0) as u32, (y as i32 + d.1) as u32))
    }

    /// Binary census code, scan order, most significant bit first.
    pub fn ct_code(img: &GrayImage, x: u32, y: u32) -> u8 {
        let center = i32::from(img.get(x, y));
        let scan = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        let weights = [128u8, 64, 32, 16, 8, 4, 2, 1];
        let mut code = 0u8;
        for (d, w) in scan.iter().zip(weights) {
            if center < at(img, x, y, *d) {
                code += w;
            }
        }
        code
    }

    /// Ternary digits over consecutive ring pairs.
    pub fn ternary(img: &GrayImage, x: u32, y: u32) -> [i8; 8] {
        let center = i32::from(img.get(x, y));
        let mut digits = [0i8; 8];
        for i in 0..8 {
            let a = at(img, x, y, RING[i]);
            let b = at(img, x, y, RING[(i + 1) % 8]);
            digits[i] = if center < a.min(b) {
                -1
            } else if center > a.max(b) {
                1
            } else {
                0
            };
        }
        digits
    }

    /// Circular 0/1 transition count of an 8-bit code.
    pub fn transitions(code: u8) -> u32 {
        let mut count = 0;
        for i in 0..8 {
            let a = (code >> i) & 1;
            let b = (code >> ((i + 1) % 8)) & 1;
            if a != b {
                count += 1;
            }
        }
        count
    }

    /// Compact label: rank among uniform codes in ascending order, 58 for
    /// hybrids.
    pub fn label(code: u8) -> u8 {
        if transitions(code) > 2 {
            return 58;
        }
        let mut rank = 0;
        for c in 0..code {
            if transitions(c) <= 2 {
                rank += 1;
            }
        }
        rank
    }

    /// Positive/negative sub-pattern labels of one pixel.
    pub fn utct_labels(img: &GrayImage, x: u32, y: u32) -> (u8, u8) {
        let digits = ternary(img, x, y);
        let mut pos = 0u8;
        let mut neg = 0u8;
        for (i, &d) in digits.iter().enumerate() {
            if d == 1 {
                pos |= 1 << i;
            } else if d == -1 {
                neg |= 1 << i;
            }
        }
        (label(pos), label(neg))
    }

    /// Whole-image label planes; border pixels 0.
    pub fn utct_planes(img: &GrayImage) -> (Vec<u8>, Vec<u8>) {
        let (w, h) = (img.width(), img.height());
        let mut p1 = vec![0u8; (w * h) as usize];
        let mut p2 = vec![0u8; (w * h) as usize];
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let (l1, l2) = utct_labels(img, x, y);
                p1[(y * w + x) as usize] = l1;
                p2[(y * w + x) as usize] = l2;
            }
        }
        (p1, p2)
    }

    pub fn ct_plane(img: &GrayImage) -> Vec<u8> {
        let (w, h) = (img.width(), img.height());
        let mut plane = vec![0u8; (w * h) as usize];
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                plane[(y * w + x) as usize] = ct_code(img, x, y);
            }
        }
        plane
    }

    fn rect_interior_visit(rect: &Rect, origin: (u32, u32), mut visit: impl FnMut(u32, u32)) {
        for y in rect.top + 1..rect.top + rect.height - 1 {
            for x in rect.left + 1..rect.left + rect.width - 1 {
                visit(x + origin.0, y + origin.1);
            }
        }
    }

    /// Ternary feature vector of a window: per block, the 59-bin histogram of
    /// sub-pattern 1 followed by sub-pattern 2, counting only per-rectangle
    /// interiors.
    pub fn tcentrist_feature(img: &GrayImage, layout: &BlockLayout, origin: (u32, u32)) -> Vec<f64> {
        let (p1, p2) = utct_planes(img);
        let w = img.width();
        let mut feature = Vec::new();
        for block in layout.blocks() {
            let mut h1 = vec![0.0f64; 59];
            let mut h2 = vec![0.0f64; 59];
            for rect in block.rects() {
                rect_interior_visit(&rect, origin, |x, y| {
                    h1[p1[(y * w + x) as usize] as usize] += 1.0;
                    h2[p2[(y * w + x) as usize] as usize] += 1.0;
                });
            }
            feature.extend_from_slice(&h1);
            feature.extend_from_slice(&h2);
        }
        feature
    }

    /// Binary-census feature vector (256 bins per block).
    pub fn centrist_feature(img: &GrayImage, layout: &BlockLayout, origin: (u32, u32)) -> Vec<f64> {
        let plane = ct_plane(img);
        let w = img.width();
        let mut feature = Vec::new();
        for block in layout.blocks() {
            let mut hist = vec![0.0f64; 256];
            for rect in block.rects() {
                rect_interior_visit(&rect, origin, |x, y| {
                    hist[plane[(y * w + x) as usize] as usize] += 1.0;
                });
            }
            feature.extend_from_slice(&hist);
        }
        feature
    }

    /// Window score through the oracle feature path.
    pub fn window_score(
        weights: &[f64],
        bias: f64,
        img: &GrayImage,
        layout: &BlockLayout,
        origin: (u32, u32),
    ) -> f64 {
        let feature = tcentrist_feature(img, layout, origin);
        assert_eq!(feature.len(), weights.len());
        weights.iter().zip(&feature).map(|(w, x)| w * x).sum::<f64>() + bias
    }
}

/// Synthetic silhouette-vs-noise dataset used by the end-to-end criteria.
pub mod synth {
    use super::*;

    pub const WINDOW_W: u32 = 36;
    pub const WINDOW_H: u32 = 72;

    /// True inside a person-ish silhouette: a head disc over a body ellipse
    /// over two legs.
    pub fn silhouette(x: u32, y: u32) -> bool {
        let (fx, fy) = (f64::from(x), f64::from(y));
        let head = {
            let (dx, dy) = (fx - 18.0, fy - 11.0);
            dx * dx + dy * dy <= 6.5 * 6.5
        };
        let torso = {
            let (dx, dy) = ((fx - 18.0) / 9.5, (fy - 32.0) / 15.0);
            dx * dx + dy * dy <= 1.0
        };
        let legs = (40.0..=66.0).contains(&fy)
            && ((10.0..=16.5).contains(&fx) || (19.5..=26.0).contains(&fx));
        head || torso || legs
    }

    fn clamp_u8(v: f64) -> u8 {
        v.round().clamp(0.0, 255.0) as u8
    }

    /// Texture knobs of the generator. The defaults are the frozen values
    /// the end-to-end criteria run with.
    #[derive(Debug, Clone, Copy)]
    pub struct Params {
        /// Pixel-noise range on positive windows.
        pub pos_noise: (f64, f64),
        /// Silhouette contrast over the background.
        pub contrast: (f64, f64),
        /// Stripe amplitude inside the silhouette.
        pub stripe_amp: f64,
        /// Pixel-noise range on negative images.
        pub neg_noise: (f64, f64),
        /// Probability that a negative image carries a striped confuser.
        pub confuser_prob: f64,
    }

    impl Default for Params {
        fn default() -> Self {
            Self {
                pos_noise: (7.0, 13.0),
                contrast: (10.0, 72.0),
                stripe_amp: 12.0,
                neg_noise: (5.0, 15.0),
                confuser_prob: 0.7,
            }
        }
    }

    /// Textured positive window: striped silhouette on a smooth background,
    /// with geometric jitter and a wide contrast range (some silhouettes
    /// barely rise above the background).
    pub fn positive_window(rng: &mut ChaCha8Rng, p: &Params) -> GrayImage {
        let jx = rng.gen_range(-3i32..=3);
        let jy = rng.gen_range(-4i32..=4);
        let contrast = rng.gen_range(p.contrast.0..p.contrast.1);
        let base = rng.gen_range(30.0..85.0);
        let noise = rng.gen_range(p.pos_noise.0..p.pos_noise.1);
        let phase = rng.gen_range(0u32..6);
        let stripe_period = rng.gen_range(2u32..5);
        let mut data = Vec::with_capacity((WINDOW_W * WINDOW_H) as usize);
        for y in 0..WINDOW_H {
            for x in 0..WINDOW_W {
                let sx = (x as i32 - jx).clamp(0, WINDOW_W as i32 - 1) as u32;
                let sy = (y as i32 - jy).clamp(0, WINDOW_H as i32 - 1) as u32;
                let inside = silhouette(sx, sy);
                let stripes = if (sy / stripe_period + phase) % 2 == 0 {
                    p.stripe_amp
                } else {
                    -p.stripe_amp
                };
                let value = if inside {
                    base + contrast + stripes
                } else {
                    base + f64::from(sx) * 0.4
                };
                data.push(clamp_u8(value + rng.gen_range(-noise..noise)));
            }
        }
        GrayImage::new(WINDOW_W, WINDOW_H, data)
    }

    /// Full negative image: low-frequency blotches plus pixel noise, usually
    /// with a striped rectangle as a confuser (the silhouettes' stripe
    /// texture, wrong shape).
    pub fn negative_image(rng: &mut ChaCha8Rng, p: &Params, width: u32, height: u32) -> GrayImage {
        let base = rng.gen_range(30.0..100.0);
        let amp = rng.gen_range(10.0..35.0);
        let fx = rng.gen_range(0.02..0.12);
        let fy = rng.gen_range(0.02..0.12);
        let noise = rng.gen_range(p.neg_noise.0..p.neg_noise.1);
        let confuser = rng.gen_bool(p.confuser_prob);
        let lift = rng.gen_range(25.0..70.0);
        let stripe_period = rng.gen_range(2u32..5);
        let (cx, cy, cw, ch) = (
            rng.gen_range(0..width.saturating_sub(20).max(1)),
            rng.gen_range(0..height.saturating_sub(34).max(1)),
            rng.gen_range(12..20u32),
            rng.gen_range(20..34u32),
        );
        let mut data = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                let wave = (f64::from(x) * fx).sin() * (f64::from(y) * fy).cos() * amp;
                let mut value = base + wave;
                if confuser && (cx..cx + cw).contains(&x) && (cy..cy + ch).contains(&y) {
                    let stripes = if (y / stripe_period) % 2 == 0 { 14.0 } else { -14.0 };
                    value += lift + stripes;
                }
                data.push(clamp_u8(value + rng.gen_range(-noise..noise)));
            }
        }
        GrayImage::new(width, height, data)
    }

    /// A test scene with one planted positive window; returns the scene and
    /// the ground-truth rectangle.
    pub fn scene_with_target(
        rng: &mut ChaCha8Rng,
        p: &Params,
        width: u32,
        height: u32,
    ) -> (GrayImage, Rect) {
        let scene = negative_image(rng, p, width, height);
        // Planted targets use a solidly visible contrast band.
        let plant = Params {
            contrast: (60.0, 95.0),
            ..*p
        };
        let target = positive_window(rng, &plant);
        let left = rng.gen_range(4..width - WINDOW_W - 4);
        let top = rng.gen_range(4..height - WINDOW_H - 4);
        let mut data = scene.data().to_vec();
        for y in 0..WINDOW_H {
            for x in 0..WINDOW_W {
                data[((top + y) * width + left + x) as usize] = target.get(x, y);
            }
        }
        (
            GrayImage::new(width, height, data),
            Rect::new(top, left, WINDOW_H, WINDOW_W),
        )
    }

    pub struct SyntheticDataset {
        pub positives: Vec<GrayImage>,
        pub negative_images: Vec<GrayImage>,
        pub scenes: Vec<(GrayImage, Rect)>,
    }

    pub fn generate_with(
        seed: u64,
        p: &Params,
        positives: usize,
        negatives: usize,
        scenes: usize,
    ) -> SyntheticDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SyntheticDataset {
            positives: (0..positives)
                .map(|_| positive_window(&mut rng, p))
                .collect(),
            negative_images: (0..negatives)
                .map(|_| negative_image(&mut rng, p, 120, 160))
                .collect(),
            scenes: (0..scenes)
                .map(|_| scene_with_target(&mut rng, p, 160, 200))
                .collect(),
        }
    }

    pub fn generate(seed: u64, positives: usize, negatives: usize, scenes: usize) -> SyntheticDataset {
        generate_with(seed, &Params::default(), positives, negatives, scenes)
    }
}
