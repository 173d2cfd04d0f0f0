use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dct::{block8, BLOCK};
use super::{MediaAsset, MediaError, PixelImage, MAX_DIMENSION};

/// Benign or adversarial edits applied to an asset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformKind {
    /// Additive Gaussian noise, `sigma` in sample units.
    GaussianNoise {
        sigma: f64,
    },
    /// Bilinear resize by `factor`.
    Rescale {
        factor: f64,
    },
    /// Keep the box `[left, right) x [top, bottom)`.
    Crop {
        left: u32,
        top: u32,
        right: u32,
        bottom: u32,
    },
    /// 8x8 blockwise DCT, uniform coefficient quantization, inverse DCT.
    Quantize {
        step: u32,
    },
    /// XOR the least significant bit of `count` distinct samples.
    PixelFlip {
        count: u32,
    },
    StripMetadata,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transformation {
    #[serde(flatten)]
    pub kind: TransformKind,
    #[serde(default)]
    pub seed: u64,
}

impl Transformation {
    pub fn new(kind: TransformKind) -> Self {
        Self { kind, seed: 0 }
    }

    pub fn seeded(kind: TransformKind, seed: u64) -> Self {
        Self { kind, seed }
    }
}

fn bad(msg: impl Into<String>) -> MediaError {
    MediaError::BadTransformParams(msg.into())
}

pub fn apply_transformation(asset: &MediaAsset, t: &Transformation) -> Result<MediaAsset, MediaError> {
    let mut out = asset.clone();
    if t.kind == TransformKind::StripMetadata {
        out.manifest_segment = None;
        out.insecure_meta = Default::default();
    } else {
        out.image = transform_image(&asset.image, t)?;
    }
    Ok(out)
}

/// Pixel part of [`apply_transformation`]; metadata-only kinds are no-ops.
pub fn transform_image(img: &PixelImage, t: &Transformation) -> Result<PixelImage, MediaError> {
    Ok(match &t.kind {
        TransformKind::Identity | TransformKind::StripMetadata => img.clone(),
        TransformKind::GaussianNoise { sigma } => gaussian_noise(img, *sigma, t.seed)?,
        TransformKind::Rescale { factor } => rescale(img, *factor)?,
        TransformKind::Crop { left, top, right, bottom } => crop(img, *left, *top, *right, *bottom)?,
        TransformKind::Quantize { step } => quantize(img, *step)?,
        TransformKind::PixelFlip { count } => pixel_flip(img, *count, t.seed)?,
    })
}

pub(crate) fn gaussian_noise(img: &PixelImage, sigma: f64, seed: u64) -> Result<PixelImage, MediaError> {
    if !sigma.is_finite() || !(0.0..=255.0).contains(&sigma) {
        return Err(bad(format!("sigma {sigma} outside [0, 255]")));
    }
    let mut out = img.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| bad(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in out.samples_mut() {
        *s = (f64::from(*s) + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
    }
    Ok(out)
}

pub(crate) fn rescale(img: &PixelImage, factor: f64) -> Result<PixelImage, MediaError> {
    if !factor.is_finite() || factor <= 0.0 {
        return Err(bad(format!("rescale factor {factor} must be positive")));
    }
    let w = (f64::from(img.width()) * factor).round();
    let h = (f64::from(img.height()) * factor).round();
    if w < 1.0 || h < 1.0 || w > f64::from(MAX_DIMENSION) || h > f64::from(MAX_DIMENSION) {
        return Err(bad(format!("rescale by {factor} gives {w}x{h}")));
    }
    Ok(resize_bilinear(img, w as u32, h as u32))
}

/// Bilinear resampling with pixel-center alignment.
pub fn resize_bilinear(img: &PixelImage, new_w: u32, new_h: u32) -> PixelImage {
    let (w, h, ch) = (img.width() as usize, img.height() as usize, img.channels() as usize);
    if (new_w as usize, new_h as usize) == (w, h) {
        return img.clone();
    }
    let mut samples = vec![0u8; new_w as usize * new_h as usize * ch];
    for c in 0..ch {
        let plane: Vec<f64> = img.samples().iter().skip(c).step_by(ch).map(|&s| f64::from(s)).collect();
        let resized = resample_plane(&plane, w, h, new_w as usize, new_h as usize);
        for (i, v) in resized.into_iter().enumerate() {
            samples[i * ch + c] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    PixelImage::new(new_w, new_h, img.channels(), samples).expect("resize keeps invariants")
}

/// Bilinear resampling of a single row-major plane.
pub fn resample_plane(plane: &[f64], w: usize, h: usize, new_w: usize, new_h: usize) -> Vec<f64> {
    let sx = w as f64 / new_w as f64;
    let sy = h as f64 / new_h as f64;
    let mut out = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        for x in 0..new_w {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            let top = plane[y0 * w + x0] * (1.0 - tx) + plane[y0 * w + x1] * tx;
            let bottom = plane[y1 * w + x0] * (1.0 - tx) + plane[y1 * w + x1] * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

pub(crate) fn crop(img: &PixelImage, left: u32, top: u32, right: u32, bottom: u32) -> Result<PixelImage, MediaError> {
    if left >= right || top >= bottom || right > img.width() || bottom > img.height() {
        return Err(bad(format!(
            "crop box ({left},{top})-({right},{bottom}) not inside {}x{}",
            img.width(),
            img.height()
        )));
    }
    let ch = img.channels() as usize;
    let mut samples = Vec::with_capacity(((right - left) * (bottom - top)) as usize * ch);
    for y in top..bottom {
        let start = img.index(left, y, 0);
        let end = img.index(right - 1, y, ch - 1) + 1;
        samples.extend_from_slice(&img.samples()[start..end]);
    }
    Ok(PixelImage::new(right - left, bottom - top, img.channels(), samples).expect("crop keeps invariants"))
}

pub(crate) fn quantize(img: &PixelImage, step: u32) -> Result<PixelImage, MediaError> {
    if step == 0 {
        return Err(bad("quantization step must be >= 1"));
    }
    let step = f64::from(step);
    let dct = block8();
    let (w, h, ch) = (img.width() as usize, img.height() as usize, img.channels() as usize);
    let mut out = img.clone();
    let mut block = [0.0f64; BLOCK * BLOCK];
    for c in 0..ch {
        for by in (0..h).step_by(BLOCK) {
            for bx in (0..w).step_by(BLOCK) {
                // edge blocks are padded by replicating the last row/column
                for y in 0..BLOCK {
                    let sy = (by + y).min(h - 1);
                    for x in 0..BLOCK {
                        let sx = (bx + x).min(w - 1);
                        block[y * BLOCK + x] = f64::from(img.samples()[(sy * w + sx) * ch + c]);
                    }
                }
                let mut coeffs = dct.forward(&block);
                for v in coeffs.iter_mut() {
                    *v = (*v / step).round() * step;
                }
                let pixels = dct.inverse(&coeffs);
                for y in 0..BLOCK.min(h - by) {
                    for x in 0..BLOCK.min(w - bx) {
                        out.samples_mut()[((by + y) * w + bx + x) * ch + c] =
                            pixels[y * BLOCK + x].round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn pixel_flip(img: &PixelImage, count: u32, seed: u64) -> Result<PixelImage, MediaError> {
    let len = img.samples().len();
    if count == 0 || count as usize > len {
        return Err(bad(format!("pixel_flip count {count} outside 1..={len}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = img.clone();
    for i in index::sample(&mut rng, len, count as usize) {
        out.samples_mut()[i] ^= 0x01;
    }
    Ok(out)
}
