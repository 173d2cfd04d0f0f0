//! 64-bit perceptual fingerprints (soft hashes) matched by Hamming distance.
//!
//! Two families: `block_mean` thresholds an 8x8 grid of luma block means,
//! `dct_wave` thresholds low-frequency coefficients of a 32x32 DCT. Block
//! averaging is area-weighted and done in exact integer arithmetic on luma
//! scaled by 1000, so ties are decided exactly.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::media::dct::DctBasis;
use crate::media::PixelImage;
use crate::Digest;

/// Default match threshold in bits. An operating point of this crate, not a
/// universal constant.
pub const DEFAULT_THRESHOLD: u32 = 10;

const MIN_SIDE: u32 = 8;
const WAVE_GRID: usize = 32;
/// DCT coefficients are snapped to this grid before thresholding so that
/// exact ties (symmetric images) do not depend on summation order.
const SNAP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FingerprintError {
    #[error("image {width}x{height} is smaller than 8x8")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("cannot compare {0} with {1}")]
    AlgorithmMismatch(Algorithm, Algorithm),
    #[error("budget exhausted at distance {distance}")]
    BudgetExhausted { best: Box<PixelImage>, distance: u32 },
    #[error("malformed fingerprint: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    BlockMean,
    DctWave,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::BlockMean, Algorithm::DctWave];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::BlockMean => "block_mean",
            Algorithm::DctWave => "dct_wave",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = FingerprintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "block_mean" => Ok(Algorithm::BlockMean),
            "dct_wave" => Ok(Algorithm::DctWave),
            other => Err(FingerprintError::Malformed(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Text form `<algorithm>:<16 lowercase hex digits>`; serialized as that string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint {
    pub algorithm: Algorithm,
    pub bits: u64,
}

impl Fingerprint {
    pub fn new(algorithm: Algorithm, bits: u64) -> Self {
        Self { algorithm, bits }
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:016x}", self.algorithm, self.bits)
    }
}

impl FromStr for Fingerprint {
    type Err = FingerprintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (alg, hex) = s.split_once(':').ok_or_else(|| FingerprintError::Malformed(s.to_string()))?;
        if hex.len() != 16 || !hex.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
            return Err(FingerprintError::Malformed(s.to_string()));
        }
        let bits = u64::from_str_radix(hex, 16).map_err(|e| FingerprintError::Malformed(e.to_string()))?;
        Ok(Self { algorithm: alg.parse()?, bits })
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MatchStatus {
    /// `manifest_ref` is the content hash keying the registry entry.
    ValidMatch {
        manifest_ref: Digest,
        distance: u32,
    },
    ValidNoMatch,
    MissingManifest,
    Invalid,
    NoAccess,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub status: MatchStatus,
    pub needs_human_review: bool,
}

impl MatchResult {
    /// Review is required exactly for matches; nothing upgrades a soft-hash
    /// match automatically.
    pub fn new(status: MatchStatus) -> Self {
        let needs_human_review = matches!(status, MatchStatus::ValidMatch { .. });
        Self { status, needs_human_review }
    }
}

pub fn hamming_distance(a: Fingerprint, b: Fingerprint) -> Result<u32, FingerprintError> {
    if a.algorithm != b.algorithm {
        return Err(FingerprintError::AlgorithmMismatch(a.algorithm, b.algorithm));
    }
    Ok((a.bits ^ b.bits).count_ones())
}

/// Luma scaled by 1000 (Rec. 601 weights for RGB), exact.
fn luma_milli(image: &PixelImage) -> Vec<u64> {
    match image.channels() {
        1 => image.samples().iter().map(|&s| 1000 * u64::from(s)).collect(),
        _ => image
            .samples()
            .chunks_exact(3)
            .map(|p| 299 * u64::from(p[0]) + 587 * u64::from(p[1]) + 114 * u64::from(p[2]))
            .collect(),
    }
}

/// Overlap weights of `len` pixels onto `cells` equal cells. Pixel `x`
/// covers `[x * cells, (x + 1) * cells)` and cell `i` covers
/// `[i * len, (i + 1) * len)` on a common axis, so every cell has total
/// weight `len`. Returns, per cell, the (pixel, weight) pairs.
fn axis_weights(len: usize, cells: usize) -> Vec<Vec<(usize, u64)>> {
    (0..cells)
        .map(|i| {
            let (lo, hi) = (i * len, (i + 1) * len);
            let first = lo / cells;
            let last = (hi - 1) / cells;
            (first..=last)
                .map(|x| {
                    let overlap = hi.min((x + 1) * cells) - lo.max(x * cells);
                    (x, overlap as u64)
                })
                .collect()
        })
        .collect()
}

/// Area-weighted box sums onto a `cells x cells` grid. Every cell has the
/// same total weight `width * height`, so the sums compare like means.
fn box_sums(image: &PixelImage, cells: usize) -> Vec<u128> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let luma = luma_milli(image);
    let wx = axis_weights(w, cells);
    let wy = axis_weights(h, cells);
    // columns first: rows[y][i] = sum_x weight * luma
    let mut rows = vec![0u128; h * cells];
    for y in 0..h {
        for (i, weights) in wx.iter().enumerate() {
            rows[y * cells + i] = weights.iter().map(|&(x, k)| u128::from(k * luma[y * w + x])).sum();
        }
    }
    let mut out = vec![0u128; cells * cells];
    for (j, weights) in wy.iter().enumerate() {
        for i in 0..cells {
            out[j * cells + i] = weights.iter().map(|&(y, k)| u128::from(k) * rows[y * cells + i]).sum();
        }
    }
    out
}

/// Bits set where `value >= median`, the median being the mean of the two
/// middle values; MSB is the first element.
fn threshold<T: Copy + PartialOrd + std::ops::Add<Output = T>>(
    values: &[T],
    ge_twice_median: impl Fn(T, T) -> bool,
) -> u64 {
    debug_assert_eq!(values.len(), 64);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let mid_sum = sorted[31] + sorted[32];
    values.iter().fold(0u64, |acc, &v| (acc << 1) | u64::from(ge_twice_median(v, mid_sum)))
}

fn check_size(image: &PixelImage) -> Result<(), FingerprintError> {
    if image.width() < MIN_SIDE || image.height() < MIN_SIDE {
        return Err(FingerprintError::ImageTooSmall { width: image.width(), height: image.height() });
    }
    Ok(())
}

fn block_mean_bits(image: &PixelImage) -> u64 {
    let sums = box_sums(image, 8);
    threshold(&sums, |v, mid| 2 * v >= mid)
}

/// The 64 coefficients used by `dct_wave`, in bit order: rows (vertical
/// frequency) 1..=8 by columns 1..=8, with (1,1) swapped for (0,1).
pub(crate) fn wave_positions() -> impl Iterator<Item = (usize, usize)> {
    (1..=8).flat_map(|r| (1..=8).map(move |c| if (r, c) == (1, 1) { (0, 1) } else { (r, c) }))
}

fn snap(x: f64) -> f64 {
    (x / SNAP).round() * SNAP + 0.0
}

fn wave_coefficients(image: &PixelImage) -> Vec<f64> {
    let n = WAVE_GRID;
    let scale = (image.width() as f64) * (image.height() as f64) * 1000.0;
    let grid: Vec<f64> = box_sums(image, n).into_iter().map(|s| s as f64 / scale).collect();
    let coeffs = DctBasis::new(n).forward(&grid);
    wave_positions().map(|(r, c)| snap(coeffs[r * n + c])).collect()
}

fn dct_wave_bits(image: &PixelImage) -> u64 {
    threshold(&wave_coefficients(image), |v, mid| 2.0 * v >= mid)
}

pub fn compute_fingerprint(image: &PixelImage, algorithm: Algorithm) -> Result<Fingerprint, FingerprintError> {
    check_size(image)?;
    let bits = match algorithm {
        Algorithm::BlockMean => block_mean_bits(image),
        Algorithm::DctWave => dct_wave_bits(image),
    };
    Ok(Fingerprint { algorithm, bits })
}

/// 8x8 luma thumbnail (area-weighted block means), row-major.
pub fn thumbnail(image: &PixelImage) -> Result<[u8; 64], FingerprintError> {
    check_size(image)?;
    let denom = u128::from(image.width()) * u128::from(image.height()) * 1000;
    let mut out = [0u8; 64];
    for (o, s) in out.iter_mut().zip(box_sums(image, 8)) {
        *o = ((s + denom / 2) / denom) as u8;
    }
    Ok(out)
}

/// Result of [`craft_collision`] when the target was reached.
#[derive(Clone, Debug, PartialEq)]
pub struct Collision {
    pub image: PixelImage,
    pub iterations: u32,
}

/// Perturbs `base` until its fingerprint equals `target`.
///
/// `block_mean` is attacked greedily: each iteration takes the disagreeing
/// cell closest to the median and shifts its pixels so the cell mean lands
/// on the target side. `dct_wave` uses seeded hill climbing over small
/// pixel blocks. On budget exhaustion the closest image found is returned
/// inside the error.
pub fn craft_collision(target: Fingerprint, base: &PixelImage, budget: u32) -> Result<Collision, FingerprintError> {
    check_size(base)?;
    match target.algorithm {
        Algorithm::BlockMean => collide_block_mean(target.bits, base, budget),
        Algorithm::DctWave => collide_dct_wave(target.bits, base, budget),
    }
}

fn cell_pixels(image: &PixelImage, cell: usize) -> impl Iterator<Item = usize> {
    // pixels whose centre falls inside the cell
    let (w, h) = (image.width() as usize, image.height() as usize);
    let (cx, cy) = (cell % 8, cell / 8);
    let xs = (cx * w).div_ceil(8)..((cx + 1) * w).div_ceil(8);
    let ys = (cy * h).div_ceil(8)..((cy + 1) * h).div_ceil(8);
    ys.flat_map(move |y| xs.clone().map(move |x| y * w + x))
}

fn collide_block_mean(target: u64, base: &PixelImage, budget: u32) -> Result<Collision, FingerprintError> {
    let mut image = base.clone();
    let denom = f64::from(base.width()) * f64::from(base.height()) * 1000.0;
    let mut margin = 1.0;
    let mut best = (64, image.clone());
    for iteration in 0..=budget {
        let sums = box_sums(&image, 8);
        let bits = threshold(&sums, |v, mid| 2 * v >= mid);
        let distance = (bits ^ target).count_ones();
        if distance < best.0 {
            best = (distance, image.clone());
        }
        if distance == 0 {
            return Ok(Collision { image, iterations: iteration });
        }
        if iteration == budget {
            break;
        }
        let means: Vec<f64> = sums.iter().map(|&s| s as f64 / denom).collect();
        let mut sorted = means.clone();
        sorted.sort_by(f64::total_cmp);
        let median = (sorted[31] + sorted[32]) / 2.0;
        let wrong = (0..64)
            .filter(|&i| (bits ^ target) >> (63 - i) & 1 == 1)
            .min_by(|&a, &b| (means[a] - median).abs().total_cmp(&(means[b] - median).abs()))
            .expect("distance > 0");
        let want_one = target >> (63 - wrong) & 1 == 1;
        let goal = if want_one { median + margin } else { median - margin };
        let delta = goal - means[wrong];
        let mut offsets = vec![0.0; image.pixel_count()];
        for p in cell_pixels(&image, wrong) {
            offsets[p] = delta;
        }
        let before = image.clone();
        image.add_luma(&offsets);
        if image == before {
            // rounding swallowed the step; push harder next time
            margin += 1.0;
        }
    }
    Err(FingerprintError::BudgetExhausted { best: Box::new(best.1), distance: best.0 })
}

fn collide_dct_wave(target: u64, base: &PixelImage, budget: u32) -> Result<Collision, FingerprintError> {
    // Score: wrong bits first, then how far wrong coefficients sit from the
    // median on the wrong side.
    let score = |img: &PixelImage| -> (u32, f64) {
        let coeffs = wave_coefficients(img);
        let mut sorted = coeffs.clone();
        sorted.sort_by(f64::total_cmp);
        let median = (sorted[31] + sorted[32]) / 2.0;
        let mut wrong = 0;
        let mut slack = 0.0;
        for (i, &c) in coeffs.iter().enumerate() {
            let want_one = target >> (63 - i) & 1 == 1;
            if (c >= median) != want_one {
                wrong += 1;
                slack += (c - median).abs();
            }
        }
        (wrong, slack)
    };
    let (w, h) = (base.width() as usize, base.height() as usize);
    let patch = (w.min(h) / 8).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(target);
    let mut image = base.clone();
    let mut current = score(&image);
    for iteration in 0..budget {
        if current.0 == 0 {
            return Ok(Collision { image, iterations: iteration });
        }
        let (x0, y0) = (rng.gen_range(0..=w - patch), rng.gen_range(0..=h - patch));
        let step = if rng.gen() { 6.0 } else { -6.0 };
        let mut offsets = vec![0.0; image.pixel_count()];
        for y in y0..y0 + patch {
            offsets[y * w + x0..y * w + x0 + patch].fill(step);
        }
        let mut candidate = image.clone();
        candidate.add_luma(&offsets);
        let s = score(&candidate);
        if s.0 < current.0 || (s.0 == current.0 && s.1 < current.1) {
            image = candidate;
            current = s;
        }
    }
    if current.0 == 0 {
        return Ok(Collision { image, iterations: budget });
    }
    Err(FingerprintError::BudgetExhausted { best: Box::new(image), distance: current.0 })
}
