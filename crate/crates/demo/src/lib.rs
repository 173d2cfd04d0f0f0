//! wasm-bindgen exports behind `www/index.html`.
//!
//! Everything crosses the boundary as JSON strings, RGBA byte vectors or
//! plain numbers, so the same functions run unchanged in native tests.
//! Failures come back as `{"error": "..."}`.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use mediaseal::fingerprint::{compute_fingerprint, hamming_distance, Algorithm, DEFAULT_THRESHOLD};
use mediaseal::fixtures::natural_image;
use mediaseal::media::{transform_image, PixelImage, Transformation};
use mediaseal::validation::{decide, outcome_table, C2paClass, FingerprintClass, OutcomeTriple, WatermarkClass};
use mediaseal::watermark::{decode_watermark, embed_watermark, WatermarkKey, WatermarkMode, WatermarkPayload};

const MIN_SIZE: u32 = 64;
const MAX_SIZE: u32 = 512;

fn error(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(error)
}

/// RGBA bytes for a canvas `ImageData`.
pub fn rgba(img: &PixelImage) -> Vec<u8> {
    let c = img.channels() as usize;
    let mut out = Vec::with_capacity(img.pixel_count() * 4);
    for px in img.samples().chunks_exact(c) {
        match c {
            1 | 2 => out.extend_from_slice(&[px[0], px[0], px[0], if c == 2 { px[1] } else { 255 }]),
            3 => out.extend_from_slice(&[px[0], px[1], px[2], 255]),
            _ => out.extend_from_slice(&px[..4]),
        }
    }
    out
}

fn psnr(a: &PixelImage, b: &PixelImage) -> f64 {
    let n = a.samples().len() as f64;
    let mse = a.samples().iter().zip(b.samples()).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>() / n;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

/// A seeded natural-looking image, its watermarked copy and an attacked copy.
#[wasm_bindgen]
pub struct WatermarkLab {
    key: WatermarkKey,
    original: PixelImage,
    marked: Option<PixelImage>,
    attacked: Option<PixelImage>,
}

#[wasm_bindgen]
impl WatermarkLab {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, size: u32) -> WatermarkLab {
        let size = size.clamp(MIN_SIZE, MAX_SIZE);
        WatermarkLab {
            key: WatermarkKey::from_seed(seed as u64 ^ 0x5eed, WatermarkMode::Robust),
            original: natural_image(size, size, 3, seed as u64),
            marked: None,
            attacked: None,
        }
    }

    /// Embeds `id` and clears any previous attack.
    pub fn embed(&mut self, id: u32) -> String {
        match embed_watermark(&self.original, WatermarkPayload::new(id as u64), &self.key) {
            Ok(marked) => {
                let max_deviation = self
                    .original
                    .samples()
                    .iter()
                    .zip(marked.samples())
                    .map(|(&a, &b)| a.abs_diff(b))
                    .max()
                    .unwrap_or(0);
                let psnr = psnr(&self.original, &marked);
                self.marked = Some(marked);
                self.attacked = None;
                json!({ "id": id, "max_deviation": max_deviation, "psnr": psnr }).to_string()
            }
            Err(e) => error(e),
        }
    }

    /// Applies a transformation such as `{"kind":"gaussian_noise","sigma":4}`
    /// to the watermarked image.
    pub fn attack(&mut self, transformation: &str) -> String {
        let Some(marked) = &self.marked else { return error("embed a watermark first") };
        let t: Transformation = match serde_json::from_str(transformation) {
            Ok(t) => t,
            Err(e) => return error(e),
        };
        match transform_image(marked, &t) {
            Ok(img) => {
                let out = json!({ "width": img.width(), "height": img.height() }).to_string();
                self.attacked = Some(img);
                out
            }
            Err(e) => error(e),
        }
    }

    /// Decodes the attacked image, or the watermarked one before any attack.
    pub fn decode(&self) -> String {
        let Some(img) = self.attacked.as_ref().or(self.marked.as_ref()) else {
            return to_json(&decode_watermark(&self.original, &self.key));
        };
        to_json(&decode_watermark(img, &self.key))
    }

    pub fn size(&self) -> u32 {
        self.original.width()
    }

    pub fn original_rgba(&self) -> Vec<u8> {
        rgba(&self.original)
    }

    pub fn marked_rgba(&self) -> Vec<u8> {
        self.marked.as_ref().map(rgba).unwrap_or_default()
    }

    /// Watermark residual amplified 16x around mid-grey.
    pub fn residual_rgba(&self) -> Vec<u8> {
        let Some(marked) = &self.marked else { return Vec::new() };
        let samples = self
            .original
            .samples()
            .iter()
            .zip(marked.samples())
            .map(|(&a, &b)| (128.0 + 16.0 * (b as f64 - a as f64)).clamp(0.0, 255.0) as u8)
            .collect();
        PixelImage::new(marked.width(), marked.height(), marked.channels(), samples)
            .map(|img| rgba(&img))
            .unwrap_or_default()
    }

    pub fn attacked_rgba(&self) -> Vec<u8> {
        self.attacked.as_ref().map(rgba).unwrap_or_default()
    }

    pub fn attacked_width(&self) -> u32 {
        self.attacked.as_ref().map_or(0, |i| i.width())
    }

    pub fn attacked_height(&self) -> u32 {
        self.attacked.as_ref().map_or(0, |i| i.height())
    }
}

/// Fingerprints a 128x128 image, an edited copy and an unrelated image, and
/// reports the Hamming distances against `DEFAULT_THRESHOLD`.
#[wasm_bindgen]
pub fn fingerprint_compare(seed: u32, transformation: &str, algorithm: &str) -> String {
    let algorithm: Algorithm = match algorithm.parse() {
        Ok(a) => a,
        Err(e) => return error(e),
    };
    let t: Transformation = match serde_json::from_str(transformation) {
        Ok(t) => t,
        Err(e) => return error(e),
    };
    let base = natural_image(128, 128, 3, seed as u64);
    let other = natural_image(128, 128, 3, seed as u64 + 1);
    let edited = match transform_image(&base, &t) {
        Ok(img) => img,
        Err(e) => return error(e),
    };
    let result = (|| {
        let fp = compute_fingerprint(&base, algorithm)?;
        let fp_edited = compute_fingerprint(&edited, algorithm)?;
        let fp_other = compute_fingerprint(&other, algorithm)?;
        let d_edited = hamming_distance(fp, fp_edited)?;
        let d_other = hamming_distance(fp, fp_other)?;
        Ok::<_, mediaseal::fingerprint::FingerprintError>(json!({
            "tau": DEFAULT_THRESHOLD,
            "original": fp,
            "edited": { "width": edited.width(), "height": edited.height(), "fingerprint": fp_edited, "distance": d_edited, "matches": d_edited <= DEFAULT_THRESHOLD },
            "unrelated": { "fingerprint": fp_other, "distance": d_other, "matches": d_other <= DEFAULT_THRESHOLD },
        }))
    })();
    match result {
        Ok(v) => v.to_string(),
        Err(e) => error(e),
    }
}

/// Base image and edited copy for the fingerprint panel, side by side.
#[wasm_bindgen]
pub fn fingerprint_images(seed: u32, transformation: &str) -> Vec<u8> {
    let Ok(t) = serde_json::from_str::<Transformation>(transformation) else { return Vec::new() };
    let base = natural_image(128, 128, 3, seed as u64);
    let Ok(edited) = transform_image(&base, &t) else { return Vec::new() };
    let mut out = rgba(&base);
    out.extend(rgba(&edited));
    out
}

/// Decision for one combination of the three stage classes, e.g.
/// `decide_outcome("not_present", "detectable_match", "valid_match")`.
#[wasm_bindgen]
pub fn decide_outcome(c2pa: &str, watermark: &str, fingerprint: &str) -> String {
    let quoted = |s: &str| serde_json::Value::String(s.to_owned());
    let triple = (|| {
        Ok::<_, serde_json::Error>(OutcomeTriple {
            c2pa: serde_json::from_value::<C2paClass>(quoted(c2pa))?,
            watermark: serde_json::from_value::<WatermarkClass>(quoted(watermark))?,
            fingerprint: serde_json::from_value::<FingerprintClass>(quoted(fingerprint))?,
        })
    })();
    match triple {
        Ok(t) => to_json(&decide(t)),
        Err(e) => error(e),
    }
}

/// The class names each selector offers.
#[wasm_bindgen]
pub fn outcome_classes() -> String {
    json!({
        "c2pa": C2paClass::ALL,
        "watermark": WatermarkClass::ALL,
        "fingerprint": FingerprintClass::ALL,
    })
    .to_string()
}

#[wasm_bindgen]
pub fn outcome_rows() -> String {
    to_json(&outcome_table())
}
