use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MediaError;

pub const MAX_DIMENSION: u32 = 65_535;

/// Row-major, channel-interleaved 8-bit image with one (gray) or three (RGB)
/// channels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PixelImage {
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<u8>,
}

impl PixelImage {
    pub fn new(width: u32, height: u32, channels: u8, samples: Vec<u8>) -> Result<Self, MediaError> {
        if !(1..=MAX_DIMENSION).contains(&width) || !(1..=MAX_DIMENSION).contains(&height) {
            return Err(MediaError::InvariantViolation(format!(
                "dimensions {width}x{height} outside 1..={MAX_DIMENSION}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(MediaError::InvariantViolation(format!("channels must be 1 or 3, got {channels}")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(MediaError::InvariantViolation(format!(
                "expected {expected} samples for {width}x{height}x{channels}, got {}",
                samples.len()
            )));
        }
        Ok(Self { width, height, channels, samples })
    }

    /// An image with every sample set to `value`.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self, MediaError> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    /// Builds an image from a per-pixel function returning one value per channel.
    pub fn from_fn(
        width: u32,
        height: u32,
        channels: u8,
        mut f: impl FnMut(u32, u32, usize) -> u8,
    ) -> Result<Self, MediaError> {
        let mut samples = Vec::with_capacity(width as usize * height as usize * channels as usize);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels as usize {
                    samples.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, samples)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// Mutable access to the samples; the length cannot change through a slice.
    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32, channel: usize) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize + channel
    }

    pub fn sample(&self, x: u32, y: u32, channel: usize) -> u8 {
        self.samples[self.index(x, y, channel)]
    }

    /// Luma plane in [0, 255]; gray images are returned as-is, RGB uses
    /// Rec. 601 weights.
    pub fn luma(&self) -> Vec<f64> {
        match self.channels {
            1 => self.samples.iter().map(|&s| f64::from(s)).collect(),
            _ => self
                .samples
                .chunks_exact(3)
                .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
                .collect(),
        }
    }

    /// Adds a per-pixel luma offset. For RGB the same offset is added to all
    /// three channels, which moves luma by exactly that amount before rounding.
    pub fn add_luma(&mut self, delta: &[f64]) {
        debug_assert_eq!(delta.len(), self.pixel_count());
        let ch = self.channels as usize;
        for (i, d) in delta.iter().enumerate() {
            for c in 0..ch {
                let s = &mut self.samples[i * ch + c];
                *s = (f64::from(*s) + d).round().clamp(0.0, 255.0) as u8;
            }
        }
    }

    /// The exact PIXL segment payload: width u32, height u32, channels u8 (all
    /// big-endian), then the samples.
    pub fn pixl_payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + self.samples.len());
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.push(self.channels);
        out.extend_from_slice(&self.samples);
        out
    }
}

/// Unsigned, freely editable key/value metadata (capture time, device model and
/// the like). Nothing here is covered by a signature.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InsecureMetadata(BTreeMap<String, String>);

impl InsecureMetadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> Option<String> {
        self.0.insert(key.into(), value.into())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for InsecureMetadata {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_sample_count_mismatch() {
        let err = PixelImage::new(2, 2, 3, vec![0; 11]).unwrap_err();
        assert!(matches!(err, MediaError::InvariantViolation(_)));
    }

    #[test]
    fn rejects_bad_dimensions_and_channels() {
        assert!(PixelImage::new(0, 1, 1, vec![]).is_err());
        assert!(PixelImage::new(65_536, 1, 1, vec![0; 65_536]).is_err());
        assert!(PixelImage::new(1, 1, 2, vec![0; 2]).is_err());
    }

    #[test]
    fn rgb_luma_weights() {
        let img = PixelImage::new(1, 1, 3, vec![255, 0, 0]).unwrap();
        assert!((img.luma()[0] - 0.299 * 255.0).abs() < 1e-9);
    }

    #[test]
    fn pixl_payload_layout() {
        let img = PixelImage::new(2, 1, 1, vec![7, 9]).unwrap();
        assert_eq!(img.pixl_payload(), vec![0, 0, 0, 2, 0, 0, 0, 1, 1, 7, 9]);
    }
}
