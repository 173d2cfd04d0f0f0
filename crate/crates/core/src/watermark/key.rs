use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::WatermarkError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WatermarkMode {
    Robust,
    Fragile,
}

/// 16-byte secret plus the mode it was issued for. Key files are the secret
/// followed by one mode byte (0 robust, 1 fragile).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WatermarkKey {
    pub secret: [u8; 16],
    pub mode: WatermarkMode,
}

impl std::fmt::Debug for WatermarkKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WatermarkKey").field("mode", &self.mode).finish_non_exhaustive()
    }
}

impl WatermarkKey {
    pub fn new(secret: [u8; 16], mode: WatermarkMode) -> Self {
        Self { secret, mode }
    }

    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R, mode: WatermarkMode) -> Self {
        let mut secret = [0u8; 16];
        rng.fill_bytes(&mut secret);
        Self { secret, mode }
    }

    /// Deterministic key for tests, demos and seeded experiments.
    pub fn from_seed(seed: u64, mode: WatermarkMode) -> Self {
        Self::generate(&mut ChaCha20Rng::seed_from_u64(seed), mode)
    }

    pub fn to_bytes(&self) -> [u8; 17] {
        let mut out = [0u8; 17];
        out[..16].copy_from_slice(&self.secret);
        out[16] = match self.mode {
            WatermarkMode::Robust => 0,
            WatermarkMode::Fragile => 1,
        };
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WatermarkError> {
        if bytes.len() != 17 {
            return Err(WatermarkError::BadKey(format!("key file must be 17 bytes, got {}", bytes.len())));
        }
        let mode = match bytes[16] {
            0 => WatermarkMode::Robust,
            1 => WatermarkMode::Fragile,
            m => return Err(WatermarkError::BadKey(format!("unknown mode byte {m}"))),
        };
        let key = Self { secret: bytes[..16].try_into().unwrap(), mode };
        key.check()?;
        Ok(key)
    }

    pub(super) fn check(&self) -> Result<(), WatermarkError> {
        if self.secret == [0; 16] {
            return Err(WatermarkError::BadKey("all-zero secret".into()));
        }
        Ok(())
    }

    /// Independent keyed stream per purpose.
    pub(super) fn stream(&self, label: &str) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(b"mediaseal-watermark/");
        h.update(label.as_bytes());
        h.update(self.secret);
        ChaCha20Rng::from_seed(h.finalize().into())
    }

    pub(super) fn derive(&self, label: &str) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"mediaseal-watermark-key/");
        h.update(label.as_bytes());
        h.update(self.secret);
        h.finalize().into()
    }
}
