//! Visible corner stamp: eight 8x8 glyphs in the bottom-right corner.
//!
//! Deliberately naive. Anyone can strip it ([`remove_perceptible_mark`]) or
//! stamp it onto content it does not belong to, which is why validation
//! never consults it.

use sha2::{Digest as _, Sha256};

use super::WatermarkError;
use crate::media::PixelImage;

const GLYPHS: usize = 8;
const GLYPH: u32 = 8;
const MARGIN: u32 = 2;
const STAMP_W: u32 = GLYPH * GLYPHS as u32;
const STAMP_H: u32 = GLYPH;

/// Top-left corner of the stamp box.
fn origin(image: &PixelImage) -> Result<(u32, u32), WatermarkError> {
    let (w, h) = (image.width(), image.height());
    if w < STAMP_W + 2 * MARGIN || h < STAMP_H + 2 * MARGIN {
        return Err(WatermarkError::ImageTooSmall {
            width: w,
            height: h,
            reason: "perceptible stamp needs at least 68x12",
        });
    }
    Ok((w - MARGIN - STAMP_W, h - MARGIN - STAMP_H))
}

fn glyph(c: char) -> [u8; 8] {
    let mut buf = [0u8; 4];
    let digest = Sha256::digest(c.encode_utf8(&mut buf).as_bytes());
    digest[..8].try_into().unwrap()
}

pub fn apply_perceptible_mark(image: &PixelImage, text: &str) -> Result<PixelImage, WatermarkError> {
    let (x0, y0) = origin(image)?;
    let chars: Vec<char> = text.chars().chain(std::iter::repeat(' ')).take(GLYPHS).collect();
    let mut out = image.clone();
    let ch = usize::from(image.channels());
    for (g, &c) in chars.iter().enumerate() {
        let rows = glyph(c);
        for (gy, row) in rows.iter().enumerate() {
            for gx in 0..GLYPH {
                let value = if row >> (7 - gx) & 1 == 1 { 255 } else { 0 };
                let x = x0 + g as u32 * GLYPH + gx;
                let idx = out.index(x, y0 + gy as u32, 0);
                out.samples_mut()[idx..idx + ch].fill(value);
            }
        }
    }
    Ok(out)
}

/// Overwrites the stamp box with the per-channel mean of the 2-pixel ring
/// around it.
pub fn remove_perceptible_mark(image: &PixelImage) -> Result<PixelImage, WatermarkError> {
    let (x0, y0) = origin(image)?;
    let ch = usize::from(image.channels());
    let (x1, y1) = (x0 + STAMP_W, y0 + STAMP_H);
    let mut sums = vec![0u64; ch];
    let mut n = 0u64;
    for y in y0 - MARGIN..y1 + MARGIN {
        for x in x0 - MARGIN..x1 + MARGIN {
            if (x0..x1).contains(&x) && (y0..y1).contains(&y) {
                continue;
            }
            for (c, s) in sums.iter_mut().enumerate() {
                *s += u64::from(image.sample(x, y, c));
            }
            n += 1;
        }
    }
    let mean: Vec<u8> = sums.iter().map(|s| ((s + n / 2) / n) as u8).collect();
    let mut out = image.clone();
    for y in y0..y1 {
        for x in x0..x1 {
            let idx = out.index(x, y, 0);
            out.samples_mut()[idx..idx + ch].copy_from_slice(&mean);
        }
    }
    Ok(out)
}

/// True when the stamp box is (almost) entirely saturated black/white with
/// both present.
pub fn detect_perceptible_mark(image: &PixelImage) -> bool {
    let Ok((x0, y0)) = origin(image) else {
        return false;
    };
    let (mut black, mut white, mut total) = (0usize, 0usize, 0usize);
    for y in y0..y0 + STAMP_H {
        for x in x0..x0 + STAMP_W {
            for c in 0..usize::from(image.channels()) {
                match image.sample(x, y, c) {
                    0 => black += 1,
                    255 => white += 1,
                    _ => {}
                }
                total += 1;
            }
        }
    }
    black > 0 && white > 0 && (black + white) * 100 >= total * 95
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::natural_image;

    #[test]
    fn apply_changes_corner_and_is_detected() {
        let img = natural_image(96, 48, 3, 1);
        assert!(!detect_perceptible_mark(&img));
        let marked = apply_perceptible_mark(&img, "AI-MADE").unwrap();
        assert_ne!(marked, img);
        assert!(detect_perceptible_mark(&marked));
        // pixels outside the box are untouched
        assert_eq!(marked.sample(0, 0, 0), img.sample(0, 0, 0));
        assert_eq!(marked.sample(95, 47, 1), img.sample(95, 47, 1));
    }

    #[test]
    fn removal_is_easy_but_lossy() {
        let img = natural_image(96, 48, 1, 2);
        let cleaned = remove_perceptible_mark(&apply_perceptible_mark(&img, "SAMPLE").unwrap()).unwrap();
        assert!(!detect_perceptible_mark(&cleaned));
        assert_ne!(cleaned, img);
    }

    #[test]
    fn too_small() {
        let img = PixelImage::filled(67, 40, 1, 9).unwrap();
        assert!(matches!(apply_perceptible_mark(&img, "x"), Err(WatermarkError::ImageTooSmall { .. })));
    }
}
