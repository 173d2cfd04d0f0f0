//! Straight-line fingerprint reference, independent of the library code.
//! Every cell visits every pixel and takes the exact overlap of the two
//! intervals on a common axis scaled by `cells` (pixels) and `len` (cells).

use mediaseal::fixtures::{checkerboard, natural_image, random_image};
use mediaseal::media::PixelImage;

fn luma_milli(img: &PixelImage, x: u32, y: u32) -> u128 {
    if img.channels() == 1 {
        1000 * u128::from(img.sample(x, y, 0))
    } else {
        299 * u128::from(img.sample(x, y, 0))
            + 587 * u128::from(img.sample(x, y, 1))
            + 114 * u128::from(img.sample(x, y, 2))
    }
}

fn overlap(pixel: u64, cell: u64, len: u64, cells: u64) -> u64 {
    let lo = (pixel * cells).max(cell * len);
    let hi = ((pixel + 1) * cells).min((cell + 1) * len);
    hi.saturating_sub(lo)
}

pub fn grid(img: &PixelImage, cells: u64) -> Vec<u128> {
    let (w, h) = (u64::from(img.width()), u64::from(img.height()));
    let mut out = Vec::new();
    for cy in 0..cells {
        for cx in 0..cells {
            let mut total = 0u128;
            for y in 0..h {
                for x in 0..w {
                    let weight = overlap(x, cx, w, cells) * overlap(y, cy, h, cells);
                    total += u128::from(weight) * luma_milli(img, x as u32, y as u32);
                }
            }
            out.push(total);
        }
    }
    out
}

pub fn block_mean(img: &PixelImage) -> u64 {
    let g = grid(img, 8);
    let mut s = g.clone();
    s.sort();
    let mid = s[31] + s[32];
    let mut bits = 0u64;
    for (i, v) in g.iter().enumerate() {
        if 2 * v >= mid {
            bits |= 1 << (63 - i);
        }
    }
    bits
}

pub fn dct_wave(img: &PixelImage) -> u64 {
    use std::f64::consts::PI;
    let n = 32usize;
    let denom = f64::from(img.width()) * f64::from(img.height()) * 1000.0;
    let g: Vec<f64> = grid(img, n as u64).into_iter().map(|v| v as f64 / denom).collect();
    let alpha = |k: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
    let mut coeffs = Vec::new();
    for r in 1..=8usize {
        for c in 1..=8usize {
            let (v, u) = if (r, c) == (1, 1) { (0, 1) } else { (r, c) };
            let mut acc = 0.0;
            for y in 0..n {
                for x in 0..n {
                    acc += g[y * n + x]
                        * ((2 * x + 1) as f64 * u as f64 * PI / (2 * n) as f64).cos()
                        * ((2 * y + 1) as f64 * v as f64 * PI / (2 * n) as f64).cos();
                }
            }
            let value = alpha(u) * alpha(v) * acc;
            coeffs.push((value / 1e-6).round() * 1e-6 + 0.0);
        }
    }
    let mut s = coeffs.clone();
    s.sort_by(f64::total_cmp);
    let mid = s[31] + s[32];
    let mut bits = 0u64;
    for (i, v) in coeffs.iter().enumerate() {
        if 2.0 * v >= mid {
            bits |= 1 << (63 - i);
        }
    }
    bits
}

/// 50 images of assorted sizes, channel counts and content.
pub fn corpus() -> Vec<PixelImage> {
    (0..50u64)
        .map(|i| {
            let w = 8 + (i * 37 % 93) as u32;
            let h = 8 + (i * 53 % 71) as u32;
            match i % 5 {
                0 | 1 => natural_image(w, h, if i % 2 == 0 { 3 } else { 1 }, i),
                2 | 3 => random_image(w, h, if i % 2 == 0 { 3 } else { 1 }, i),
                _ => checkerboard(w, h, 1 + (i % 4) as u32, 20, 220),
            }
        })
        .collect()
}
