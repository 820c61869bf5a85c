//! Pixel-level census transforms.
//!
//! The binary census transform compares a pixel against each of its eight
//! neighbours; the ternary variant compares it against consecutive neighbour
//! *pairs* and therefore also captures the relation between adjacent
//! neighbours. Ternary codes are decomposed into a positive and a negative
//! binary sub-pattern, and each sub-pattern is reduced to one of 59 compact
//! labels via the uniform-pattern rule (at most two circular 0/1 transitions).

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Number of ring neighbours of a 3x3 window.
pub const RING_SIZE: usize = 8;

/// Compact label assigned to every non-uniform (hybrid) sub-pattern.
pub const HYBRID_LABEL: u8 = 58;

/// Labels take values `0..=58`: 58 uniform codes plus the hybrid bucket.
pub const LABEL_COUNT: usize = 59;

/// Ring neighbour offsets `(dx, dy)` in clockwise order starting at the
/// top-left corner: TL, T, TR, R, BR, B, BL, L. Every code-producing
/// operation indexes neighbours through this one constant.
pub const RING_OFFSETS: [(i32, i32); RING_SIZE] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// Single-channel 8-bit raster, row-major. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert_eq!(
            data.len(),
            width as usize * height as usize,
            "pixel buffer length must equal width * height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Copies the `width`x`height` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: u32, y: u32, width: u32, height: u32) -> Self {
        assert!(x + width <= self.width && y + height <= self.height);
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for row in y..y + height {
            let start = row as usize * self.width as usize + x as usize;
            data.extend_from_slice(&self.data[start..start + width as usize]);
        }
        Self::new(width, height, data)
    }

    /// Horizontal mirror, used for positive-sample augmentation.
    pub fn mirror_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            let row = &self.data
                [y as usize * self.width as usize..(y as usize + 1) * self.width as usize];
            data.extend(row.iter().rev());
        }
        Self::new(self.width, self.height, data)
    }

    fn check_min_size(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

/// Ternary census code: one digit in `{-1, 0, +1}` per consecutive ring pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TernaryCode(pub [i8; RING_SIZE]);

/// A ternary code split into its positive and negative binary sub-patterns.
/// Bit `i` of each byte corresponds to ternary digit `i`; the two bytes never
/// share a set bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubPatternCode {
    pub positive: u8,
    pub negative: u8,
}

/// Binary census code of a 3x3 window, row-major order `[TL, T, TR, L, C, R, BL, B, BR]`.
///
/// Bit semantics: the comparison results are concatenated in scan order
/// (left to right, top to bottom, skipping the centre) and the resulting
/// bitstring is read most-significant-bit first.
#[inline]
pub fn ct_code(window: &[u8; 9]) -> u8 {
    let center = window[4];
    // Scan order TL, T, TR, L, R, BL, B, BR.
    const SCAN: [usize; 8] = [0, 1, 2, 3, 5, 6, 7, 8];
    let mut code = 0u8;
    for &idx in &SCAN {
        code = (code << 1) | u8::from(center < window[idx]);
    }
    code
}

/// Ternary census code of a 3x3 window (same row-major layout as [`ct_code`]).
///
/// Digit `i` compares the centre against the neighbour pair
/// `(p_i, p_{(i+1) mod 8})` in ring order: -1 below the pair's minimum,
/// +1 above its maximum, 0 otherwise.
#[inline]
pub fn tct_code(window: &[u8; 9]) -> TernaryCode {
    // Ring positions TL, T, TR, R, BR, B, BL, L as row-major window indices.
    const RING: [usize; 8] = [0, 1, 2, 5, 8, 7, 6, 3];
    let center = window[4];
    let mut digits = [0i8; RING_SIZE];
    for i in 0..RING_SIZE {
        let a = window[RING[i]];
        let b = window[RING[(i + 1) % RING_SIZE]];
        digits[i] = if center < a.min(b) {
            -1
        } else if center > a.max(b) {
            1
        } else {
            0
        };
    }
    TernaryCode(digits)
}

/// Splits a ternary code into its two binary sub-patterns.
#[inline]
pub fn decompose(code: TernaryCode) -> SubPatternCode {
    let mut positive = 0u8;
    let mut negative = 0u8;
    for (i, &digit) in code.0.iter().enumerate() {
        match digit {
            1 => positive |= 1 << i,
            -1 => negative |= 1 << i,
            _ => {}
        }
    }
    SubPatternCode { positive, negative }
}

/// Number of 0/1 transitions around the circular bit sequence of `bits`.
/// Always even, in `[0, 8]`.
#[inline]
pub fn uniformity(bits: u8) -> u32 {
    (bits ^ bits.rotate_right(1)).count_ones()
}

/// Total lookup table from 8-bit codes to compact labels.
///
/// The 58 uniform codes (uniformity <= 2) map to `0..=57` in ascending code
/// order; every hybrid code maps to [`HYBRID_LABEL`].
#[derive(Debug, Clone)]
pub struct UniformLut {
    table: [u8; 256],
}

impl UniformLut {
    pub fn new() -> Self {
        let mut table = [HYBRID_LABEL; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            if uniformity(code) <= 2 {
                table[code as usize] = next;
                next += 1;
            }
        }
        debug_assert_eq!(next, 58);
        Self { table }
    }

    #[inline]
    pub fn label(&self, bits: u8) -> u8 {
        self.table[bits as usize]
    }
}

impl Default for UniformLut {
    fn default() -> Self {
        Self::new()
    }
}

/// Compact label of a code under `lut`: its uniform index, or the hybrid bucket.
#[inline]
pub fn utct_label(bits: u8, lut: &UniformLut) -> u8 {
    lut.label(bits)
}

/// The two label images produced by the ternary transform of one image.
///
/// `i1` labels positive sub-patterns, `i2` negative ones. Codes are undefined
/// on the 1-pixel border (the 3x3 window leaves the image there); border
/// entries are stored as 0 but must never enter a histogram or score sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeImagePair {
    width: u32,
    height: u32,
    i1: Vec<u8>,
    i2: Vec<u8>,
}

impl CodeImagePair {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn label1(&self, x: u32, y: u32) -> u8 {
        debug_assert!(self.is_valid(x, y), "border pixels carry no code");
        self.i1[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn label2(&self, x: u32, y: u32) -> u8 {
        debug_assert!(self.is_valid(x, y), "border pixels carry no code");
        self.i2[y as usize * self.width as usize + x as usize]
    }

    /// True for interior pixels, where the 3x3 window fits.
    #[inline]
    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        x >= 1 && y >= 1 && x + 1 < self.width && y + 1 < self.height
    }

    /// Raw label planes, border entries included (stored as 0).
    pub fn planes(&self) -> (&[u8], &[u8]) {
        (&self.i1, &self.i2)
    }
}

/// Raster of binary census codes; same border convention as [`CodeImagePair`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtImage {
    width: u32,
    height: u32,
    codes: Vec<u8>,
}

impl CtImage {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn code(&self, x: u32, y: u32) -> u8 {
        debug_assert!(self.is_valid(x, y), "border pixels carry no code");
        self.codes[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        x >= 1 && y >= 1 && x + 1 < self.width && y + 1 < self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }
}

#[inline]
fn window_at(img: &GrayImage, x: u32, y: u32) -> [u8; 9] {
    let w = img.width() as usize;
    let base = (y as usize - 1) * w + x as usize - 1;
    let d = img.data();
    [
        d[base],
        d[base + 1],
        d[base + 2],
        d[base + w],
        d[base + w + 1],
        d[base + w + 2],
        d[base + 2 * w],
        d[base + 2 * w + 1],
        d[base + 2 * w + 2],
    ]
}

/// Computes both UTCT label images of `img`.
///
/// Rows are processed in parallel; the result is bit-identical to a
/// sequential scan because every pixel is independent.
pub fn utct_images(img: &GrayImage) -> Result<CodeImagePair> {
    img.check_min_size()?;
    let lut = UniformLut::new();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut i1 = vec![0u8; w * h];
    let mut i2 = vec![0u8; w * h];

    i1.par_chunks_mut(w)
        .zip(i2.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row1, row2))| {
            if y == 0 || y + 1 == h {
                return;
            }
            for x in 1..w - 1 {
                let sub = decompose(tct_code(&window_at(img, x as u32, y as u32)));
                row1[x] = lut.label(sub.positive);
                row2[x] = lut.label(sub.negative);
            }
        });

    Ok(CodeImagePair {
        width: img.width(),
        height: img.height(),
        i1,
        i2,
    })
}

/// Computes the binary census-code raster of `img`.
pub fn ct_image(img: &GrayImage) -> Result<CtImage> {
    img.check_min_size()?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut codes = vec![0u8; w * h];

    codes.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        if y == 0 || y + 1 == h {
            return;
        }
        for x in 1..w - 1 {
            row[x] = ct_code(&window_at(img, x as u32, y as u32));
        }
    });

    Ok(CtImage {
        width: img.width(),
        height: img.height(),
        codes,
    })
}
