pub mod attack;
pub mod canonical;
mod digest;
pub mod fingerprint;
pub mod fixtures;
mod hexfmt;
pub mod manifest;
pub mod media;
pub mod registry;
pub mod trust;
pub mod validation;
pub mod watermark;

pub use digest::Digest;
