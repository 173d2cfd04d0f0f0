//! DCT-QIM robust watermark.
//!
//! The 80 payload bits (id + CRC) are repeated three times, each copy under
//! its own key-seeded permutation, giving a 240-bit codeword. The codeword
//! fills a tile of 8 x 15 blocks (two slots per block) which repeats across
//! the image, so any 64 x 64 region already holds the first full copy.
//! Each slot is one DCT coefficient quantized onto a dithered lattice with
//! step 12: bit 0 on `dither + k*12`, bit 1 half a step away.
//!
//! Decoding accumulates soft votes `cos(2 pi (c - dither) / 12)` per payload
//! bit. The canonical grid is tried first; if that fails the decoder searches
//! grid offsets (cropping) and a handful of scale factors (resizing), with a
//! stricter agreement bar for every non-canonical hypothesis.

use std::f64::consts::TAU;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{DetectionResult, DetectionStatus, WatermarkError, WatermarkKey, WatermarkPayload, PAYLOAD_BITS};
use crate::media::dct::{block8, BLOCK};
use crate::media::{resample_plane, PixelImage};

pub(super) const QIM_STEP: f64 = 12.0;
const TILE_W: usize = 8;
const TILE_H: usize = 15;
const PER_BLOCK: usize = 2;
const SLOTS: usize = TILE_W * TILE_H * PER_BLOCK;
const MIN_SIDE: u32 = 64;
/// Per-pixel luma budget.
const MAX_DEVIATION: f64 = 4.0;

/// Low/mid-frequency (row, column) positions the key chooses from.
const CANDIDATES: [(usize, usize); 7] = [(0, 2), (1, 1), (2, 0), (0, 3), (1, 2), (2, 1), (3, 0)];

/// Resize hypotheses tried by the decoder (ratio of suspect size to original).
const SCALES: [f64; 10] = [0.75, 0.5, 0.6, 0.8, 0.9, 0.7, 1.1, 1.25, 1.5, 2.0];

/// Resampling twice attenuates mid frequencies; each scale hypothesis is
/// also tried with the lattice shrunk by these factors.
const GAINS: [f64; 6] = [1.0, 0.95, 0.9, 0.85, 0.8, 0.75];

/// Agreement must clear `0.5 + z / sqrt(copies per bit)`.
const CANONICAL_Z: f64 = 0.425;
const SEARCH_Z: f64 = 0.6;
const MIN_CONSISTENCY: f64 = 0.8;
/// Below this many copies per bit the offset search is skipped: too few
/// votes to tell a real mark from a lucky CRC.
const MIN_COPIES_FOR_SEARCH: f64 = 4.0;

struct Layout {
    coeffs: [(usize, usize); PER_BLOCK],
    /// Dither angle `2 pi d / step` per slot, as (cos, sin).
    dither: Vec<(f64, f64)>,
    dither_raw: Vec<f64>,
    slot_bit: Vec<usize>,
}

impl Layout {
    fn new(key: &WatermarkKey) -> Self {
        let mut rng = key.stream("robust-layout");
        let picked = index::sample(&mut rng, CANDIDATES.len(), PER_BLOCK);
        let coeffs = [CANDIDATES[picked.index(0)], CANDIDATES[picked.index(1)]];
        let dither_raw: Vec<f64> = (0..SLOTS).map(|_| rng.gen_range(0.0..QIM_STEP)).collect();
        let dither = dither_raw.iter().map(|d| ((TAU * d / QIM_STEP).cos(), (TAU * d / QIM_STEP).sin())).collect();
        let mut slot_bit = Vec::with_capacity(SLOTS);
        for _ in 0..SLOTS / PAYLOAD_BITS {
            let mut perm: Vec<usize> = (0..PAYLOAD_BITS).collect();
            perm.shuffle(&mut rng);
            slot_bit.extend(perm);
        }
        Self { coeffs, dither, dither_raw, slot_bit }
    }
}

#[inline]
fn slot(tx: usize, ty: usize, k: usize) -> usize {
    ((ty % TILE_H) * TILE_W + tx % TILE_W) * PER_BLOCK + k
}

/// Nearest point of the bit's lattice that also lands within 2 of a
/// multiple of 8, so block quantization with step 8 (which shares our block
/// grid) cannot push it past the decision boundary. Lattice points alternate
/// between two residues mod 8 and one of them always qualifies.
fn qim_target(c: f64, bit: bool, dither: f64) -> f64 {
    let offset = dither + if bit { QIM_STEP / 2.0 } else { 0.0 };
    let nearest = offset + QIM_STEP * ((c - offset) / QIM_STEP).round();
    let survives = |t: f64| (t - 8.0 * (t / 8.0).round()).abs() <= 2.0 + 1e-9;
    [nearest, nearest - QIM_STEP, nearest + QIM_STEP]
        .into_iter()
        .filter(|&t| survives(t))
        .min_by(|a, b| (a - c).abs().total_cmp(&(b - c).abs()))
        .expect("one of two adjacent lattice points survives")
}

pub(super) fn check_capacity(image: &PixelImage) -> Result<(), WatermarkError> {
    if image.width() < MIN_SIDE || image.height() < MIN_SIDE {
        return Err(WatermarkError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            reason: "robust mode needs at least 64x64",
        });
    }
    Ok(())
}

fn read_block(plane: &[f64], w: usize, x0: usize, y0: usize, out: &mut [f64; BLOCK * BLOCK]) {
    for y in 0..BLOCK {
        out[y * BLOCK..(y + 1) * BLOCK].copy_from_slice(&plane[(y0 + y) * w + x0..(y0 + y) * w + x0 + BLOCK]);
    }
}

pub(super) fn embed(
    image: &PixelImage,
    payload: WatermarkPayload,
    key: &WatermarkKey,
) -> Result<PixelImage, WatermarkError> {
    check_capacity(image)?;
    let layout = Layout::new(key);
    let bits = payload.to_bits();
    let dct = block8();
    let (w, h) = (image.width() as usize, image.height() as usize);
    let original = image.luma();

    // Desired lattice point for every slot, fixed from the original pixels.
    let mut targets = Vec::new();
    let mut block = [0.0; BLOCK * BLOCK];
    for by in 0..h / BLOCK {
        for bx in 0..w / BLOCK {
            read_block(&original, w, bx * BLOCK, by * BLOCK, &mut block);
            for (k, &(v, u)) in layout.coeffs.iter().enumerate() {
                let s = slot(bx, by, k);
                let c = dct.coefficient(&block, v, u);
                targets.push(qim_target(c, bits[layout.slot_bit[s]], layout.dither_raw[s]));
            }
        }
    }

    // A few passes absorb integer rounding and clipping at 0/255.
    let mut delta = vec![0.0; w * h];
    let mut out = image.clone();
    for _ in 0..3 {
        let current = out.luma();
        let mut worst: f64 = 0.0;
        let mut t = targets.iter();
        for by in 0..h / BLOCK {
            for bx in 0..w / BLOCK {
                read_block(&current, w, bx * BLOCK, by * BLOCK, &mut block);
                for &(v, u) in &layout.coeffs {
                    let err = t.next().unwrap() - dct.coefficient(&block, v, u);
                    worst = worst.max(err.abs());
                    for y in 0..BLOCK {
                        let row = err * dct.at(v, y);
                        for x in 0..BLOCK {
                            delta[(by * BLOCK + y) * w + bx * BLOCK + x] += row * dct.at(u, x);
                        }
                    }
                }
            }
        }
        if worst < 0.75 {
            break;
        }
        for d in delta.iter_mut() {
            *d = d.clamp(-MAX_DEVIATION, MAX_DEVIATION);
        }
        out = image.clone();
        out.add_luma(&delta);
    }

    // Integer rounding has a dead zone the real-valued passes cannot get
    // through; finish each block with single-pixel unit steps.
    let mut t = targets.chunks_exact(PER_BLOCK);
    for by in 0..h / BLOCK {
        for bx in 0..w / BLOCK {
            refine_block(&mut out, &original, bx * BLOCK, by * BLOCK, &layout.coeffs, t.next().unwrap());
        }
    }
    Ok(out)
}

/// Greedy +-1 luma steps on single pixels until both slot coefficients sit
/// within half a unit of their targets or no step helps. Every channel moves
/// together, so luma moves by exactly one per step.
fn refine_block(
    out: &mut PixelImage,
    original: &[f64],
    x0: usize,
    y0: usize,
    coeffs: &[(usize, usize); PER_BLOCK],
    targets: &[f64],
) {
    let dct = block8();
    let w = out.width() as usize;
    let ch = usize::from(out.channels());
    let luma = out.luma();
    let mut block = [0.0; BLOCK * BLOCK];
    read_block(&luma, w, x0, y0, &mut block);
    let mut err = [0.0; PER_BLOCK];
    for (k, &(v, u)) in coeffs.iter().enumerate() {
        err[k] = targets[k] - dct.coefficient(&block, v, u);
    }
    let mut offset: Vec<f64> =
        (0..BLOCK * BLOCK).map(|i| block[i] - original[(y0 + i / BLOCK) * w + x0 + i % BLOCK]).collect();
    for _ in 0..4 * BLOCK * BLOCK {
        if err.iter().all(|e| e.abs() < 0.5) {
            return;
        }
        let mut best: Option<(f64, usize, f64)> = None;
        for i in 0..BLOCK * BLOCK {
            let (y, x) = (i / BLOCK, i % BLOCK);
            let base = out.index((x0 + x) as u32, (y0 + y) as u32, 0);
            for step in [1.0, -1.0] {
                if (offset[i] + step).abs() > MAX_DEVIATION + 1e-9 {
                    continue;
                }
                let fits =
                    out.samples()[base..base + ch].iter().all(|&s| (0.0..=255.0).contains(&(f64::from(s) + step)));
                if !fits {
                    continue;
                }
                let gain: f64 = coeffs
                    .iter()
                    .zip(&err)
                    .map(|(&(v, u), e)| {
                        let moved = e - step * dct.at(v, y) * dct.at(u, x);
                        e * e - moved * moved
                    })
                    .sum();
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, i, step));
                }
            }
        }
        let Some((gain, i, step)) = best else { return };
        if gain <= 1e-12 {
            return;
        }
        let (y, x) = (i / BLOCK, i % BLOCK);
        let base = out.index((x0 + x) as u32, (y0 + y) as u32, 0);
        for s in &mut out.samples_mut()[base..base + ch] {
            *s = (f64::from(*s) + step) as u8;
        }
        offset[i] += step;
        for (k, &(v, u)) in coeffs.iter().enumerate() {
            err[k] -= step * dct.at(v, y) * dct.at(u, x);
        }
    }
}

/// Per-class sums of (cos, sin) of the coefficient phase, where a class is a
/// (tile position, coefficient) pair under zero tile shift.
struct ClassSums {
    cos: Vec<f64>,
    sin: Vec<f64>,
    count: Vec<u32>,
}

/// (class, coefficient) for every full block on the grid starting at (ox, oy).
fn coefficients(plane: &[f64], w: usize, h: usize, ox: usize, oy: usize, layout: &Layout) -> Vec<(usize, f64)> {
    let dct = block8();
    let mut out = Vec::new();
    let mut block = [0.0; BLOCK * BLOCK];
    if w < ox + BLOCK || h < oy + BLOCK {
        return out;
    }
    for by in 0..(h - oy) / BLOCK {
        for bx in 0..(w - ox) / BLOCK {
            read_block(plane, w, ox + bx * BLOCK, oy + by * BLOCK, &mut block);
            for (k, &(v, u)) in layout.coeffs.iter().enumerate() {
                out.push((slot(bx, by, k), dct.coefficient(&block, v, u)));
            }
        }
    }
    out
}

fn class_sums(coeffs: &[(usize, f64)], gain: f64) -> ClassSums {
    let mut sums = ClassSums { cos: vec![0.0; SLOTS], sin: vec![0.0; SLOTS], count: vec![0; SLOTS] };
    for &(q, c) in coeffs {
        let phase = TAU * c / (gain * QIM_STEP);
        sums.cos[q] += phase.cos();
        sums.sin[q] += phase.sin();
        sums.count[q] += 1;
    }
    sums
}

struct Hypothesis {
    payload: Option<WatermarkPayload>,
    agreement: f64,
    copies: f64,
    /// How much of the per-slot vote mass survives summing the slots that
    /// carry the same bit: near 1 when they agree, about 0.58 when three
    /// slots vote independently (as on a misaligned grid).
    consistency: f64,
}

impl Hypothesis {
    /// Agreement excess in units of its chance-level standard deviation.
    fn score(&self) -> f64 {
        (self.agreement - 0.5) * self.copies.sqrt()
    }

    fn accepted(&self, z: f64) -> bool {
        self.payload.is_some() && self.copies >= 1.0 && self.agreement >= 0.5 + z / self.copies.sqrt()
    }
}

fn evaluate(sums: &ClassSums, sx: usize, sy: usize, layout: &Layout) -> Hypothesis {
    let mut votes = [0.0f64; PAYLOAD_BITS];
    let mut counts = [0u32; PAYLOAD_BITS];
    let mut slot_votes = [0.0f64; SLOTS];
    for ty in 0..TILE_H {
        for tx in 0..TILE_W {
            for k in 0..PER_BLOCK {
                let q = slot(tx, ty, k);
                if sums.count[q] == 0 {
                    continue;
                }
                let s = slot(tx + sx, ty + sy, k);
                let (dc, ds) = layout.dither[s];
                let bit = layout.slot_bit[s];
                // cos(phase - dither) summed over the class
                let v = sums.cos[q] * dc + sums.sin[q] * ds;
                votes[bit] += v;
                slot_votes[s] += v;
                counts[bit] += sums.count[q];
            }
        }
    }
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return Hypothesis { payload: None, agreement: 0.5, copies: 0.0, consistency: 0.0 };
    }
    let decided: f64 = votes.iter().map(|v| v.abs()).sum();
    let agreement = 0.5 + 0.5 * decided / f64::from(total);
    let consistency = decided / slot_votes.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let copies = f64::from(total) / PAYLOAD_BITS as f64;
    let payload = if counts.iter().all(|&c| c > 0) {
        let mut bits = [false; PAYLOAD_BITS];
        for (b, v) in bits.iter_mut().zip(votes) {
            *b = v < 0.0;
        }
        WatermarkPayload::from_bits(&bits)
    } else {
        None
    };
    Hypothesis { payload, agreement, copies, consistency }
}

fn detected(h: &Hypothesis) -> DetectionResult {
    DetectionResult {
        status: DetectionStatus::Detected(h.payload.expect("accepted hypothesis has a payload")),
        raw_bit_agreement: h.agreement.min(1.0),
    }
}

pub(super) fn decode(image: &PixelImage, key: &WatermarkKey) -> DetectionResult {
    let layout = Layout::new(key);
    let (w, h) = (image.width() as usize, image.height() as usize);
    let luma = image.luma();

    let canonical_sums = class_sums(&coefficients(&luma, w, h, 0, 0, &layout), 1.0);
    let canonical = evaluate(&canonical_sums, 0, 0, &layout);
    if canonical.accepted(CANONICAL_Z) {
        return detected(&canonical);
    }

    // Off-canonical grids on a marked image produce lopsided but mutually
    // inconsistent votes, so search hypotheses must also show consistent
    // slots; the best-scoring survivor wins.
    let mut best: Option<Hypothesis> = None;
    let mut consider = |hyp: Hypothesis| {
        if hyp.copies >= MIN_COPIES_FOR_SEARCH
            && hyp.consistency >= MIN_CONSISTENCY
            && hyp.accepted(SEARCH_Z)
            && best.as_ref().is_none_or(|b| hyp.score() > b.score())
        {
            best = Some(hyp);
        }
    };
    if canonical.copies >= MIN_COPIES_FOR_SEARCH {
        for oy in 0..BLOCK {
            for ox in 0..BLOCK {
                let sums = if (ox, oy) == (0, 0) {
                    None
                } else {
                    Some(class_sums(&coefficients(&luma, w, h, ox, oy, &layout), 1.0))
                };
                let sums = sums.as_ref().unwrap_or(&canonical_sums);
                for sy in 0..TILE_H {
                    for sx in 0..TILE_W {
                        if (ox, oy, sx, sy) != (0, 0, 0, 0) {
                            consider(evaluate(sums, sx, sy, &layout));
                        }
                    }
                }
            }
        }
    }
    for scale in SCALES {
        let nw = (w as f64 / scale).round() as usize;
        let nh = (h as f64 / scale).round() as usize;
        if nw < MIN_SIDE as usize || nh < MIN_SIDE as usize || nw > 8192 || nh > 8192 {
            continue;
        }
        let plane = resample_plane(&luma, w, h, nw, nh);
        let coeffs = coefficients(&plane, nw, nh, 0, 0, &layout);
        for gain in GAINS {
            consider(evaluate(&class_sums(&coeffs, gain), 0, 0, &layout));
        }
    }
    if let Some(hyp) = best {
        return detected(&hyp);
    }

    DetectionResult { status: DetectionStatus::Undetectable, raw_bit_agreement: canonical.agreement.min(1.0) }
}
