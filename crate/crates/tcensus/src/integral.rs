//! Summed-area table over a real-valued raster.

/// 2-D prefix-sum table, one row and column larger than its source and
/// zero-padded on the top/left, so any axis-aligned rectangle sum costs
/// four lookups.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,  // source width + 1
    height: usize, // source height + 1
    data: Vec<f64>,
}

impl IntegralImage {
    /// Builds the table for a `width`x`height` row-major raster.
    pub fn new(raster: &[f64], width: usize, height: usize) -> Self {
        assert_eq!(raster.len(), width * height);
        let (tw, th) = (width + 1, height + 1);
        let mut data = vec![0.0; tw * th];
        for y in 0..height {
            let mut row_sum = 0.0;
            for x in 0..width {
                row_sum += raster[y * width + x];
                data[(y + 1) * tw + x + 1] = data[y * tw + x + 1] + row_sum;
            }
        }
        Self {
            width: tw,
            height: th,
            data,
        }
    }

    /// Sum of the source rectangle with top-left `(left, top)` (0-based
    /// source coordinates) and the given extent. Exactly four table lookups.
    #[inline]
    pub fn rect_sum(&self, left: usize, top: usize, width: usize, height: usize) -> f64 {
        debug_assert!(left + width < self.width && top + height < self.height);
        let tw = self.width;
        let (r, b) = (left + width, top + height);
        self.data[b * tw + r] - self.data[top * tw + r] - self.data[b * tw + left]
            + self.data[top * tw + left]
    }

    /// [`rect_sum`](Self::rect_sum) that also advances a lookup counter by 4.
    #[inline]
    pub fn rect_sum_counted(
        &self,
        left: usize,
        top: usize,
        width: usize,
        height: usize,
        lookups: &mut u64,
    ) -> f64 {
        *lookups += 4;
        self.rect_sum(left, top, width, height)
    }
}
