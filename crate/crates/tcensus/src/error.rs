//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]; `category()` yields the stable
//! machine-parseable tag the CLI prints on failure.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image is {width}x{height}, transforms need at least 3x3")]
    ImageTooSmall { width: u32, height: u32 },

    #[error("rectangle {rect} leaves the {width}x{height} image")]
    OutOfBounds {
        rect: String,
        width: u32,
        height: u32,
    },

    #[error("layout expects {expected} bins per block, caller supplied {actual}")]
    LayoutMismatch { expected: usize, actual: usize },

    #[error("blocks overlap; enable per-rect accumulation to score this layout")]
    LayoutNotGridded,

    #[error("training data contains a single class")]
    DegenerateData,

    #[error("class {class} has {count} windows, block selection needs at least 2")]
    InsufficientData { class: i32, count: usize },

    #[error("negative sampling produced no windows")]
    NoNegatives,

    #[error("reference histogram has zero mass")]
    EmptyReference,

    #[error("similarity set is empty")]
    EmptySet,

    #[error("score list is empty")]
    EmptyScores,

    #[error("window {window_width}x{window_height} exceeds image {width}x{height}")]
    WindowTooLarge {
        window_width: u32,
        window_height: u32,
        width: u32,
        height: u32,
    },

    #[error("cannot decode {path}: {reason}")]
    DecodeError { path: PathBuf, reason: String },

    #[error("unsupported image format for {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable category tag for the CLI's one-line error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::ImageTooSmall { .. } => "image-too-small",
            Error::OutOfBounds { .. } => "out-of-bounds",
            Error::LayoutMismatch { .. } => "layout-mismatch",
            Error::LayoutNotGridded => "layout-not-gridded",
            Error::DegenerateData => "degenerate-data",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::NoNegatives => "no-negatives",
            Error::EmptyReference => "empty-reference",
            Error::EmptySet => "empty-set",
            Error::EmptyScores => "empty-scores",
            Error::WindowTooLarge { .. } => "window-too-large",
            Error::DecodeError { .. } => "decode-error",
            Error::UnsupportedFormat { .. } => "unsupported-format",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
