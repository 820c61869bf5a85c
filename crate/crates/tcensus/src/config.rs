//! Run configuration: window geometry, layout grid, training and detection
//! parameters. Serializes to JSON and round-trips losslessly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::BootstrapConfig;
use crate::detector::{DetectParams, PyramidConfig};
use crate::error::{Error, Result};
use crate::features::{BinScheme, BlockLayout};
use crate::svm::SvmConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub window_width: u32,
    pub window_height: u32,
    pub block_width: u32,
    pub block_height: u32,
    pub block_stride: u32,
    /// Whether block selection may pick extension structures, or `Base` only.
    pub extension_candidates: bool,
    pub svm_c: f64,
    pub seed: u64,
    pub pyramid: PyramidConfig,
    pub scan_stride: u32,
    pub score_threshold: f64,
    pub nms_iou: f64,
    /// Optional per-block L1 normalization of features (off by default; the
    /// fast scanner requires raw counts, so scans fall back to the naive
    /// route when this is on).
    pub normalize: bool,
    pub negative_samples: usize,
    pub hard_negative_cap: usize,
    pub mirror_positives: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            window_width: 36,
            window_height: 72,
            block_width: 12,
            block_height: 12,
            block_stride: 6,
            extension_candidates: true,
            svm_c: 1.0,
            seed: 1,
            pyramid: PyramidConfig::default(),
            scan_stride: 4,
            score_threshold: 0.0,
            nms_iou: 0.5,
            normalize: false,
            negative_samples: 5000,
            hard_negative_cap: 5000,
            mirror_positives: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("window_width", self.window_width),
            ("window_height", self.window_height),
            ("block_width", self.block_width),
            ("block_height", self.block_height),
            ("block_stride", self.block_stride),
            ("scan_stride", self.scan_stride),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.block_width < 3 || self.block_height < 3 {
            return Err(Error::InvalidConfig(
                "blocks must be at least 3x3 to have interior pixels".into(),
            ));
        }
        if self.block_width > self.window_width || self.block_height > self.window_height {
            return Err(Error::InvalidConfig(
                "blocks must fit inside the window".into(),
            ));
        }
        if self.svm_c <= 0.0 {
            return Err(Error::InvalidConfig("svm_c must be positive".into()));
        }
        if !(self.pyramid.scale_factor > 1.0) {
            return Err(Error::InvalidConfig(
                "pyramid scale_factor must exceed 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.nms_iou) {
            return Err(Error::InvalidConfig("nms_iou must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Default ternary-descriptor layout: the base block grid.
    pub fn layout(&self) -> Result<BlockLayout> {
        BlockLayout::base_grid(
            self.window_width,
            self.window_height,
            self.block_width,
            self.block_height,
            self.block_stride,
            BinScheme::Utct59,
        )
    }

    /// Same grid with 256-bin binary-census histograms.
    pub fn layout_ct(&self) -> Result<BlockLayout> {
        BlockLayout::base_grid(
            self.window_width,
            self.window_height,
            self.block_width,
            self.block_height,
            self.block_stride,
            BinScheme::Ct256,
        )
    }

    pub fn svm(&self) -> SvmConfig {
        SvmConfig {
            c: self.svm_c,
            seed: self.seed,
            ..SvmConfig::default()
        }
    }

    pub fn detect_params(&self) -> DetectParams {
        DetectParams {
            stride: self.scan_stride,
            score_threshold: self.score_threshold,
            nms_iou: self.nms_iou,
        }
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            svm: self.svm(),
            negative_samples: self.negative_samples,
            hard_negative_cap: self.hard_negative_cap,
            sample_seed: self.seed,
            pyramid: self.pyramid,
            scan_stride: self.scan_stride,
            normalize: self.normalize,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_losslessly() {
        let cfg = RunConfig::default();
        let json = cfg.to_json();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(json, back.to_json());
        assert!(back.pyramid.scale_factor == 2f64.powf(0.125));
    }

    #[test]
    fn partial_json_takes_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{ "seed": 9, "svm_c": 2.5 }"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert!(cfg.svm_c == 2.5);
        assert_eq!(cfg.window_width, 36);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{ "sed": 9 }"#).is_err());
    }

    #[test]
    fn bad_values_fail_validation() {
        let mut cfg = RunConfig::default();
        cfg.block_width = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.nms_iou = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.pyramid.scale_factor = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_layout_matches_headline_dimensions() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.layout().unwrap().total_dim(), 6490);
        assert_eq!(cfg.layout_ct().unwrap().total_dim(), 14080);
    }
}
