//! Pixel model, the MIAC asset container, and the pixel transformations every
//! other module operates on.

mod container;
pub mod dct;
mod image;
mod transform;

pub use container::{parse_asset, serialize_asset, MediaAsset, RawSegment, MAGIC};
pub use image::{InsecureMetadata, PixelImage, MAX_DIMENSION};
pub use transform::{
    apply_transformation, resample_plane, resize_bilinear, transform_image, TransformKind, Transformation,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MediaError {
    #[error("malformed container: {0}")]
    MalformedContainer(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("bad transformation parameters: {0}")]
    BadTransformParams(String),
}
