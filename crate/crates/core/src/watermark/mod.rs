//! Imperceptible watermarks carrying a 64-bit reference id.
//!
//! Robust marks use quantization index modulation on two key-selected
//! mid-frequency DCT coefficients per 8x8 luma block; fragile marks hide the
//! payload in key-chosen LSBs next to a keyed tag over everything else.
//! [`perceptible`] is the visible corner stamp, included to show how easily
//! such marks are removed or forged.

mod fragile;
mod key;
pub mod perceptible;
mod robust;

pub use key::{WatermarkKey, WatermarkMode};
pub use perceptible::{apply_perceptible_mark, detect_perceptible_mark, remove_perceptible_mark};

use crc::{Crc, CRC_16_IBM_3740};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::media::PixelImage;

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection).
const CRC16: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub const PAYLOAD_BITS: usize = 80;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WatermarkError {
    #[error("image {width}x{height} too small: {reason}")]
    ImageTooSmall { width: u32, height: u32, reason: &'static str },
    #[error("bad watermark key: {0}")]
    BadKey(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WatermarkPayload {
    id: u64,
    crc: u16,
}

impl WatermarkPayload {
    pub fn new(id: u64) -> Self {
        Self { id, crc: CRC16.checksum(&id.to_be_bytes()) }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn crc(&self) -> u16 {
        self.crc
    }

    /// id (big-endian) then crc, most significant bit first.
    pub fn to_bits(&self) -> [bool; PAYLOAD_BITS] {
        let mut bytes = [0u8; 10];
        bytes[..8].copy_from_slice(&self.id.to_be_bytes());
        bytes[8..].copy_from_slice(&self.crc.to_be_bytes());
        let mut bits = [false; PAYLOAD_BITS];
        for (i, bit) in bits.iter_mut().enumerate() {
            *bit = bytes[i / 8] >> (7 - i % 8) & 1 == 1;
        }
        bits
    }

    /// Inverse of [`to_bits`](Self::to_bits); `None` unless the CRC verifies.
    pub fn from_bits(bits: &[bool; PAYLOAD_BITS]) -> Option<Self> {
        let mut bytes = [0u8; 10];
        for (i, &bit) in bits.iter().enumerate() {
            bytes[i / 8] |= u8::from(bit) << (7 - i % 8);
        }
        let id = u64::from_be_bytes(bytes[..8].try_into().unwrap());
        let crc = u16::from_be_bytes([bytes[8], bytes[9]]);
        let payload = Self::new(id);
        (payload.crc == crc).then_some(payload)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "payload", rename_all = "snake_case")]
pub enum DetectionStatus {
    Detected(WatermarkPayload),
    Undetectable,
    NoAccess,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub status: DetectionStatus,
    /// Internal confidence in [0, 1]. Never exposed on public endpoints.
    pub raw_bit_agreement: f64,
}

impl DetectionResult {
    pub fn payload(&self) -> Option<WatermarkPayload> {
        match self.status {
            DetectionStatus::Detected(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_detected(&self) -> bool {
        self.payload().is_some()
    }
}

pub fn embed_watermark(
    image: &PixelImage,
    payload: WatermarkPayload,
    key: &WatermarkKey,
) -> Result<PixelImage, WatermarkError> {
    key.check()?;
    match key.mode {
        WatermarkMode::Robust => robust::embed(image, payload, key),
        WatermarkMode::Fragile => fragile::embed(image, payload, key),
    }
}

/// Deterministic; `Detected` only when the decoded payload's CRC verifies.
pub fn decode_watermark(image: &PixelImage, key: &WatermarkKey) -> DetectionResult {
    match key.mode {
        WatermarkMode::Robust => robust::decode(image, key),
        WatermarkMode::Fragile => fragile::decode(image, key),
    }
}

/// Lifts the payload out of `source` and writes it into `target`. With the
/// wrong key nothing decodes and `target` comes back unchanged.
pub fn forge_watermark(
    source: &PixelImage,
    target: &PixelImage,
    key: &WatermarkKey,
) -> Result<PixelImage, WatermarkError> {
    match decode_watermark(source, key).payload() {
        Some(payload) => embed_watermark(target, payload, key),
        None => {
            match key.mode {
                WatermarkMode::Robust => robust::check_capacity(target)?,
                WatermarkMode::Fragile => fragile::check_capacity(target)?,
            }
            Ok(target.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc_matches_ccitt_false_check_value() {
        // catalogue check value for "123456789"
        assert_eq!(CRC16.checksum(b"123456789"), 0x29B1);
    }

    #[test]
    fn payload_bits_round_trip() {
        for id in [0u64, 1, u64::MAX, 0xDEAD_BEEF_0123_4567] {
            let p = WatermarkPayload::new(id);
            assert_eq!(WatermarkPayload::from_bits(&p.to_bits()), Some(p));
        }
        let mut bits = WatermarkPayload::new(5).to_bits();
        bits[3] ^= true;
        assert_eq!(WatermarkPayload::from_bits(&bits), None);
    }
}
