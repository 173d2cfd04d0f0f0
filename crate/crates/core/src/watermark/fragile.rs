//! Fragile LSB watermark.
//!
//! The key picks 144 sample positions: the first 80 carry the payload bits
//! in their LSBs, the last 64 carry an HMAC-SHA256 tag computed over the
//! image header and every sample with those 64 tag LSBs cleared. Any
//! single-sample change, payload LSBs included, breaks the tag.

use hmac::{Hmac, Mac};
use rand::seq::index;
use sha2::Sha256;

use super::{DetectionResult, DetectionStatus, WatermarkError, WatermarkKey, WatermarkPayload, PAYLOAD_BITS};
use crate::media::PixelImage;

const TAG_BITS: usize = 64;
const NEEDED: usize = PAYLOAD_BITS + TAG_BITS;

pub(super) fn check_capacity(image: &PixelImage) -> Result<(), WatermarkError> {
    if image.samples().len() < NEEDED {
        return Err(WatermarkError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            reason: "fragile mode needs at least 144 samples",
        });
    }
    Ok(())
}

fn positions(key: &WatermarkKey, samples: usize) -> Vec<usize> {
    let mut rng = key.stream("fragile-positions");
    index::sample(&mut rng, samples, NEEDED).into_vec()
}

fn tag(key: &WatermarkKey, image: &PixelImage, tag_positions: &[usize]) -> [bool; TAG_BITS] {
    let mut mac = Hmac::<Sha256>::new_from_slice(&key.derive("fragile-tag")).expect("hmac takes any key length");
    mac.update(b"MIAF");
    mac.update(&image.width().to_be_bytes());
    mac.update(&image.height().to_be_bytes());
    mac.update(&[image.channels()]);
    let mut samples = image.samples().to_vec();
    for &p in tag_positions {
        samples[p] &= !1;
    }
    mac.update(&samples);
    let digest = mac.finalize().into_bytes();
    let mut bits = [false; TAG_BITS];
    for (i, bit) in bits.iter_mut().enumerate() {
        *bit = digest[i / 8] >> (7 - i % 8) & 1 == 1;
    }
    bits
}

fn set_lsb(sample: &mut u8, bit: bool) {
    *sample = (*sample & !1) | u8::from(bit);
}

pub(super) fn embed(
    image: &PixelImage,
    payload: WatermarkPayload,
    key: &WatermarkKey,
) -> Result<PixelImage, WatermarkError> {
    check_capacity(image)?;
    let pos = positions(key, image.samples().len());
    let mut out = image.clone();
    for (&p, bit) in pos[..PAYLOAD_BITS].iter().zip(payload.to_bits()) {
        set_lsb(&mut out.samples_mut()[p], bit);
    }
    let tag_bits = tag(key, &out, &pos[PAYLOAD_BITS..]);
    for (&p, bit) in pos[PAYLOAD_BITS..].iter().zip(tag_bits) {
        set_lsb(&mut out.samples_mut()[p], bit);
    }
    Ok(out)
}

pub(super) fn decode(image: &PixelImage, key: &WatermarkKey) -> DetectionResult {
    let undetectable =
        |agreement| DetectionResult { status: DetectionStatus::Undetectable, raw_bit_agreement: agreement };
    if check_capacity(image).is_err() {
        return undetectable(0.0);
    }
    let pos = positions(key, image.samples().len());
    let samples = image.samples();
    let expected = tag(key, image, &pos[PAYLOAD_BITS..]);
    let matching = pos[PAYLOAD_BITS..].iter().zip(expected).filter(|&(&p, bit)| (samples[p] & 1 == 1) == bit).count();
    let agreement = matching as f64 / TAG_BITS as f64;
    if matching != TAG_BITS {
        return undetectable(agreement);
    }
    let mut bits = [false; PAYLOAD_BITS];
    for (b, &p) in bits.iter_mut().zip(&pos[..PAYLOAD_BITS]) {
        *b = samples[p] & 1 == 1;
    }
    match WatermarkPayload::from_bits(&bits) {
        Some(payload) => DetectionResult { status: DetectionStatus::Detected(payload), raw_bit_agreement: agreement },
        None => undetectable(agreement),
    }
}
