use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("clone mask has an empty interior")]
    EmptyInterior,

    #[error("clone mask interior touches the image border")]
    InteriorTouchesBorder,

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e}, tolerance {tolerance:.1e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("placement out of bounds: {0}")]
    OutOfBounds(String),

    #[error("no valid placement found after {attempts} attempts")]
    PlacementFailed { attempts: usize },

    #[error("crop of {crop_w}x{crop_h} px (max jitter {max_scale}) does not fit a {image_w}x{image_h} image with a 1 px margin")]
    CropTooLarge {
        crop_w: usize,
        crop_h: usize,
        max_scale: f64,
        image_w: usize,
        image_h: usize,
    },

    #[error(
        "insufficient instances of '{category}': {available} available, {requested} requested"
    )]
    InsufficientInstances {
        category: String,
        available: usize,
        requested: usize,
    },

    #[error(
        "no crop of category '{category}' with a compatible aspect ratio for a {w:.1}x{h:.1} box"
    )]
    NoCompatibleCrop { category: String, w: f64, h: f64 },

    #[error("infeasible target for '{category}': target {target}, achievable range {min_achievable}..={max_achievable}")]
    InfeasibleTarget {
        category: String,
        target: usize,
        min_achievable: usize,
        max_achievable: usize,
    },

    #[error("targets missed after all placement retries: {0}")]
    TargetsMissed(String),

    #[error("unknown category '{0}'")]
    UnknownCategory(String),

    #[error("unknown image id {0}")]
    UnknownImage(u64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid network configuration: {0}")]
    InvalidNetwork(String),

    #[error("malformed weights file: {0}")]
    MalformedWeights(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::EmptyInterior => "empty_interior",
            Error::InteriorTouchesBorder => "interior_touches_border",
            Error::NoConvergence { .. } => "no_convergence",
            Error::OutOfBounds(_) => "out_of_bounds",
            Error::PlacementFailed { .. } => "placement_failed",
            Error::CropTooLarge { .. } => "crop_too_large",
            Error::InsufficientInstances { .. } => "insufficient_instances",
            Error::NoCompatibleCrop { .. } => "no_compatible_crop",
            Error::InfeasibleTarget { .. } => "infeasible_target",
            Error::TargetsMissed(_) => "targets_missed",
            Error::UnknownCategory(_) => "unknown_category",
            Error::UnknownImage(_) => "unknown_image",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidManifest(_) => "invalid_manifest",
            Error::InvalidNetwork(_) => "invalid_network",
            Error::MalformedWeights(_) => "malformed_weights",
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
