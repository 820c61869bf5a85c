//! Ternary census-transform descriptors and a fast sliding-window pedestrian
//! detector.
//!
//! The pipeline stages are:
//!
//! 1. **census** – binary and ternary census transforms, uniform-pattern
//!    label images.
//! 2. **features** – block layouts (plain grids or extension structures) and
//!    concatenated per-block histograms.
//! 3. **classifier** – deterministic linear SVM, two-round hard-negative
//!    bootstrap, and integral-image fast window scoring through auxiliary
//!    weight images.
//! 4. **detector** – image pyramid, stride-lattice scanning, non-maximum
//!    suppression.
//! 5. **evaluation** – histogram-intersection similarity statistics and
//!    classification ROC.
//!
//! The `tcensus` binary chains the stages; `selftest` re-derives the core
//! transforms from their defining formulas and checks the optimized paths
//! against them.

pub mod census;
pub mod classifier;
pub mod config;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod image_io;
pub mod integral;
pub mod selftest;
pub mod svm;

pub use census::{ct_image, utct_images, CodeImagePair, CtImage, GrayImage};
pub use classifier::{
    bootstrap_train, build_auxiliary_images, fast_window_score, BootstrapConfig, LinearModel,
};
pub use config::RunConfig;
pub use detector::{detect, nms, Detection, DetectParams, PyramidConfig};
pub use error::{Error, Result};
pub use evaluation::{diff_negative_fraction, diff_score, hik, roc, DescriptorTag};
pub use features::{
    extract_centrist, extract_tcentrist, BinScheme, BlockLayout, BlockVariant,
    ExtensionBlockStructure, FeatureVector, Rect,
};
pub use svm::SvmConfig;
