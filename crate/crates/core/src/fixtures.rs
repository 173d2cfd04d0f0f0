//! Seeded synthetic images: smooth "natural-looking" scenes for watermark and
//! fingerprint experiments, plus uniform noise and checkerboards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::media::PixelImage;

struct Blob {
    cx: f64,
    cy: f64,
    radius: f64,
    amp: [f64; 3],
}

struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    amp: [f64; 3],
}

fn soft_step(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// A smooth scene: gradient background, Gaussian blobs, soft-edged rectangles
/// and light sensor-like grain, kept away from the 0/255 rails.
pub fn natural_image(width: u32, height: u32, channels: u8, seed: u64) -> PixelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (f64::from(width), f64::from(height));
    let amp3 = |rng: &mut ChaCha8Rng, scale: f64| {
        let base = rng.gen_range(-scale..scale);
        [base, base + rng.gen_range(-15.0..15.0), base + rng.gen_range(-15.0..15.0)]
    };
    let base: [f64; 3] = [rng.gen_range(90.0..160.0), rng.gen_range(90.0..160.0), rng.gen_range(90.0..160.0)];
    let gx = amp3(&mut rng, 50.0);
    let gy = amp3(&mut rng, 50.0);
    let blobs: Vec<Blob> = (0..6)
        .map(|_| Blob {
            cx: rng.gen_range(0.0..w),
            cy: rng.gen_range(0.0..h),
            radius: rng.gen_range(0.08..0.3) * w.max(h),
            amp: amp3(&mut rng, 60.0),
        })
        .collect();
    let rects: Vec<Rect> = (0..3)
        .map(|_| {
            let (x0, y0) = (rng.gen_range(0.0..w * 0.8), rng.gen_range(0.0..h * 0.8));
            Rect {
                x0,
                y0,
                x1: x0 + rng.gen_range(0.1..0.5) * w,
                y1: y0 + rng.gen_range(0.1..0.5) * h,
                amp: amp3(&mut rng, 40.0),
            }
        })
        .collect();
    let grain = Normal::new(0.0, 2.0).unwrap();

    PixelImage::from_fn(width, height, channels, |x, y, c| {
        let (fx, fy) = (f64::from(x), f64::from(y));
        let mut v = base[c] + gx[c] * (fx / w - 0.5) + gy[c] * (fy / h - 0.5);
        for b in &blobs {
            let d2 = (fx - b.cx).powi(2) + (fy - b.cy).powi(2);
            v += b.amp[c] * (-d2 / (2.0 * b.radius * b.radius)).exp();
        }
        for r in &rects {
            let edge = 1.5;
            let inside = soft_step((fx - r.x0) / edge)
                * soft_step((r.x1 - fx) / edge)
                * soft_step((fy - r.y0) / edge)
                * soft_step((r.y1 - fy) / edge);
            v += r.amp[c] * inside;
        }
        v += grain.sample(&mut rng);
        // compress into [16, 239] so clipping never dominates
        (16.0 + 223.0 * soft_step((v - 128.0) / 70.0)).round() as u8
    })
    .expect("fixture dimensions are valid")
}

/// Independent uniform samples.
pub fn random_image(width: u32, height: u32, channels: u8, seed: u64) -> PixelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PixelImage::from_fn(width, height, channels, |_, _, _| rng.gen()).expect("fixture dimensions are valid")
}

/// Alternating `cell`-sized squares of `dark` and `light`.
pub fn checkerboard(width: u32, height: u32, cell: u32, dark: u8, light: u8) -> PixelImage {
    PixelImage::from_fn(
        width,
        height,
        1,
        |x, y, _| if ((x / cell) + (y / cell)).is_multiple_of(2) { dark } else { light },
    )
    .expect("fixture dimensions are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        assert_eq!(natural_image(32, 32, 3, 1), natural_image(32, 32, 3, 1));
        assert_ne!(natural_image(32, 32, 1, 1), natural_image(32, 32, 1, 2));
        assert_eq!(random_image(8, 8, 1, 4), random_image(8, 8, 1, 4));
    }

    #[test]
    fn checkerboard_pattern() {
        let img = checkerboard(4, 4, 2, 0, 255);
        assert_eq!(img.sample(0, 0, 0), 0);
        assert_eq!(img.sample(2, 0, 0), 255);
        assert_eq!(img.sample(2, 2, 0), 0);
    }
}
