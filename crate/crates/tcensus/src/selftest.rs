//! Built-in equivalence suite behind the `selftest` CLI command.
//!
//! Each check pits a library code path against a literal, unoptimized
//! re-implementation of the defining formulas. The references here are
//! deliberately written from the equations (coordinate arithmetic, per-pixel
//! loops, enumeration) rather than shared with the optimized paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::census::{ct_image, utct_images, GrayImage};
use crate::classifier::{
    build_auxiliary_images, fast_window_score, naive_window_score, LinearModel, TrainMeta,
};
use crate::evaluation::{detection_rate_at_fpr, hik, roc};
use crate::features::{BinScheme, BlockLayout, BlockVariant, ExtensionBlockStructure, Rect};

/// Outcome of one check.
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, outcome: std::result::Result<String, String>) -> CheckResult {
    match outcome {
        Ok(detail) => CheckResult {
            name,
            passed: true,
            detail,
        },
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
    }
}

/// Runs every check; all must pass.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        result("census-oracle-equivalence", census_equivalence(1000, 0xC0DE)),
        result("uniform-pattern-count", uniform_count()),
        result("fast-score-equivalence", fast_score_equivalence(0xFA57)),
        result("similarity-identities", similarity_identities()),
    ]
}

// Reference implementations, straight from the defining equations.

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

fn ref_pixel(img: &GrayImage, x: u32, y: u32, dx: i32, dy: i32) -> u8 {
    img.get((x as i32 + dx) as u32, (y as i32 + dy) as u32)
}

fn ref_ct(img: &GrayImage, x: u32, y: u32) -> u8 {
    let center = img.get(x, y);
    let mut code = 0u32;
    // Scan order: left to right, top to bottom, centre skipped; the
    // bitstring is read most-significant-bit first.
    for dy in -1..=1 {
        for dx in -1..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let bit = u32::from(center < ref_pixel(img, x, y, dx, dy));
            code = code * 2 + bit;
        }
    }
    code as u8
}

fn ref_ternary(img: &GrayImage, x: u32, y: u32) -> [i8; 8] {
    let center = img.get(x, y);
    let mut digits = [0i8; 8];
    for i in 0..8 {
        let (adx, ady) = RING[i];
        let (bdx, bdy) = RING[(i + 1) % 8];
        let a = ref_pixel(img, x, y, adx, ady);
        let b = ref_pixel(img, x, y, bdx, bdy);
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

fn ref_transitions(code: u8) -> u32 {
    let bit = |i: usize| (code >> (i % 8)) & 1;
    (0..8).map(|i| u32::from(bit(i) != bit(i + 1))).sum()
}

fn ref_label(code: u8) -> u8 {
    if ref_transitions(code) <= 2 {
        (0..code).filter(|&c| ref_transitions(c) <= 2).count() as u8
    } else {
        58
    }
}

fn ref_utct_labels(img: &GrayImage, x: u32, y: u32) -> (u8, u8) {
    let digits = ref_ternary(img, x, y);
    let mut positive = 0u16;
    let mut negative = 0u16;
    for (i, &d) in digits.iter().enumerate() {
        if d == 1 {
            positive += 1 << i;
        }
        if d == -1 {
            negative += 1 << i;
        }
    }
    (ref_label(positive as u8), ref_label(negative as u8))
}

fn census_equivalence(cases: usize, seed: u64) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let w = rng.gen_range(3..=32u32);
        let h = rng.gen_range(3..=32u32);
        let img = GrayImage::from_fn(w, h, |_, _| rng.gen());
        let ct = ct_image(&img).map_err(|e| e.to_string())?;
        let codes = utct_images(&img).map_err(|e| e.to_string())?;
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                if ct.code(x, y) != ref_ct(&img, x, y) {
                    return Err(format!("binary code mismatch at case {case}, ({x},{y})"));
                }
                let (l1, l2) = ref_utct_labels(&img, x, y);
                if codes.label1(x, y) != l1 || codes.label2(x, y) != l2 {
                    return Err(format!("ternary label mismatch at case {case}, ({x},{y})"));
                }
            }
        }
    }
    Ok(format!("{cases} random images match the literal transform"))
}

fn uniform_count() -> std::result::Result<String, String> {
    let count = (0..=255u8).filter(|&c| ref_transitions(c) <= 2).count();
    if count == 58 {
        Ok("58 of 256 codes are uniform".into())
    } else {
        Err(format!("expected 58 uniform codes, found {count}"))
    }
}

fn fast_score_equivalence(seed: u64) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layouts = vec![
        BlockLayout::base_grid(24, 24, 8, 8, 8, BinScheme::Utct59).map_err(|e| e.to_string())?,
        BlockLayout::base_grid(20, 20, 10, 10, 5, BinScheme::Utct59).map_err(|e| e.to_string())?,
        BlockLayout::new(
            24,
            24,
            BinScheme::Utct59,
            vec![
                ExtensionBlockStructure::new(BlockVariant::ExtendDown, Rect::new(0, 0, 8, 8)),
                ExtensionBlockStructure::new(BlockVariant::ExtendRight, Rect::new(12, 2, 10, 8)),
            ],
        )
        .map_err(|e| e.to_string())?,
    ];
    let mut checked = 0usize;
    for case in 0..30 {
        let layout = layouts[case % layouts.len()].clone();
        let (ww, wh) = (layout.window_width(), layout.window_height());
        let weights = (0..layout.total_dim())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let model = LinearModel::from_parts(
            weights,
            rng.gen_range(-1.0..1.0),
            layout,
            TrainMeta {
                seed: 0,
                c: 1.0,
                rounds: 1,
                hard_negatives_added: 0,
                normalized: false,
            },
        );
        let img = GrayImage::from_fn(ww + rng.gen_range(0..8), wh + rng.gen_range(0..8), |_, _| {
            rng.gen()
        });
        let codes = utct_images(&img).map_err(|e| e.to_string())?;
        for oy in 0..=img.height() - wh {
            for ox in 0..=img.width() - ww {
                let aux = build_auxiliary_images(&model, &codes, (ox, oy), true)
                    .map_err(|e| e.to_string())?;
                let fast =
                    fast_window_score(&aux.integrals(), model.layout(), (ox, oy), model.bias());
                let naive =
                    naive_window_score(&model, &codes, (ox, oy)).map_err(|e| e.to_string())?;
                if (fast - naive).abs() > 1e-6 * naive.abs().max(1.0) {
                    return Err(format!(
                        "case {case} origin ({ox},{oy}): fast {fast} vs naive {naive}"
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} window scores match the naive route"))
}

fn similarity_identities() -> std::result::Result<String, String> {
    let d = hik(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).map_err(|e| e.to_string())?;
    if (d - 2.0 / 3.0).abs() > 1e-15 {
        return Err(format!("hik hand example returned {d}"));
    }
    let m = [0.5, 4.0, 1.25];
    let self_sim = hik(&m, &m).map_err(|e| e.to_string())?;
    if self_sim != 1.0 {
        return Err(format!("hik self-similarity returned {self_sim}"));
    }
    let curve = roc(
        &[0.9, 0.8, 0.7, 0.4, 0.2],
        &[0.6, 0.5, 0.3, 0.1, 0.05],
    )
    .map_err(|e| e.to_string())?;
    let rate = detection_rate_at_fpr(&curve, 0.2);
    if (rate - 0.6).abs() > 1e-15 {
        return Err(format!("roc hand example returned {rate}"));
    }
    Ok("hik and roc hand values hold".into())
}
