//! An attacker who knows the embedding algorithm but not the key tries to
//! wash a watermark out with as little distortion as possible, using a
//! detection endpoint as its only feedback.
//!
//! Moves are single low-frequency DCT coefficient nudges in one 8x8 block.
//! With the confidence-leaking endpoint the attacker keeps only moves that
//! lower the reported agreement and stops as soon as detection fails. With
//! the binary, rate-limited endpoint it cannot tell useful moves apart, so
//! it accumulates moves until detection fails and then spends one query per
//! kept move trying to drop it again.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fixtures;
use crate::media::dct::{block8, BLOCK};
use crate::media::PixelImage;
use crate::registry::SlidingWindowLimiter;
use crate::watermark::{decode_watermark, embed_watermark, WatermarkKey, WatermarkMode, WatermarkPayload};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// Detected or not, behind a per-client sliding-window limiter.
    PublicRateLimited,
    /// Unlimited, and returns the raw bit agreement.
    InternalConfidence,
}

impl std::str::FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "public_rate_limited" => Ok(Self::PublicRateLimited),
            "internal_confidence" => Ok(Self::InternalConfidence),
            other => Err(format!("unknown endpoint {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleAttackConfig {
    pub seed: u64,
    /// Maximum number of granted queries.
    pub budget: u32,
    pub rate_limit: u32,
    pub window_ms: u64,
    /// Simulated time one granted query takes.
    pub query_ms: u64,
    /// Back-off after a refused request.
    pub retry_ms: u64,
    /// Coefficient change per move.
    pub amplitude: f64,
    pub image_size: u32,
}

impl Default for OracleAttackConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            budget: 5_000,
            rate_limit: 10,
            window_ms: 60_000,
            query_ms: 50,
            retry_ms: 1_000,
            amplitude: 6.0,
            image_size: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleAttackOutcome {
    pub endpoint: Endpoint,
    pub succeeded: bool,
    /// Granted queries spent.
    pub queries: u32,
    pub refused: u32,
    /// Simulated wall-clock time from first request to the last answer.
    pub elapsed_ms: u64,
    /// Moves in the final perturbation.
    pub moves_kept: usize,
    /// Mean squared sample error of the final image against the marked one.
    pub mse: f64,
    /// Most grants observed in any window of `window_ms`.
    pub max_grants_per_window: u32,
}

struct Oracle<'a> {
    endpoint: Endpoint,
    key: &'a WatermarkKey,
    limiter: SlidingWindowLimiter,
    config: &'a OracleAttackConfig,
    now: u64,
    queries: u32,
    refused: u32,
    grants: Vec<u64>,
}

struct Answer {
    detected: bool,
    /// Only the internal endpoint reveals it.
    agreement: Option<f64>,
}

impl Oracle<'_> {
    fn query(&mut self, image: &PixelImage) -> Option<Answer> {
        if self.queries >= self.config.budget {
            return None;
        }
        if self.endpoint == Endpoint::PublicRateLimited {
            while !self.limiter.try_acquire("attacker", self.now) {
                self.refused += 1;
                self.now += self.config.retry_ms;
            }
        }
        self.grants.push(self.now);
        self.now += self.config.query_ms;
        self.queries += 1;
        let r = decode_watermark(image, self.key);
        Some(Answer {
            detected: r.is_detected(),
            agreement: (self.endpoint == Endpoint::InternalConfidence).then_some(r.raw_bit_agreement),
        })
    }

    fn max_grants_per_window(&self) -> u32 {
        let mut best = 0;
        let mut start = 0;
        for (end, &t) in self.grants.iter().enumerate() {
            while self.grants[start] + self.config.window_ms <= t {
                start += 1;
            }
            best = best.max(end + 1 - start);
        }
        best as u32
    }
}

/// One coefficient nudge: block origin and a 64-entry luma delta.
struct Move {
    x0: usize,
    y0: usize,
    delta: [f64; BLOCK * BLOCK],
}

const BAND: [(usize, usize); 7] = [(0, 2), (1, 1), (2, 0), (0, 3), (1, 2), (2, 1), (3, 0)];

fn moves(size: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<Move> {
    let dct = block8();
    let blocks = size / BLOCK;
    let mut out = Vec::with_capacity(blocks * blocks * BAND.len());
    for by in 0..blocks {
        for bx in 0..blocks {
            for &(v, u) in &BAND {
                let sign = if rng.gen() { amplitude } else { -amplitude };
                let mut delta = [0.0; BLOCK * BLOCK];
                for y in 0..BLOCK {
                    for x in 0..BLOCK {
                        delta[y * BLOCK + x] = sign * dct.at(v, y) * dct.at(u, x);
                    }
                }
                out.push(Move { x0: bx * BLOCK, y0: by * BLOCK, delta });
            }
        }
    }
    out.shuffle(rng);
    out
}

fn render(base: &PixelImage, all: &[Move], kept: &[bool]) -> PixelImage {
    let w = base.width() as usize;
    let mut offsets = vec![0.0; base.pixel_count()];
    for (m, _) in all.iter().zip(kept).filter(|(_, &k)| k) {
        for y in 0..BLOCK {
            for x in 0..BLOCK {
                offsets[(m.y0 + y) * w + m.x0 + x] += m.delta[y * BLOCK + x];
            }
        }
    }
    let mut out = base.clone();
    out.add_luma(&offsets);
    out
}

fn mse(a: &PixelImage, b: &PixelImage) -> f64 {
    let sum: f64 = a.samples().iter().zip(b.samples()).map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2)).sum();
    sum / a.samples().len() as f64
}

/// Deterministic per `config.seed`. A budget of zero fails immediately.
pub fn oracle_attack_simulation(endpoint: Endpoint, config: &OracleAttackConfig) -> OracleAttackOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let key = WatermarkKey::from_seed(config.seed, WatermarkMode::Robust);
    let size = config.image_size.max(64);
    let marked = embed_watermark(
        &fixtures::natural_image(size, size, 3, config.seed),
        WatermarkPayload::new(config.seed & 0xffff_ffff),
        &key,
    )
    .expect("fixture is large enough to mark");
    let all = moves(size as usize, config.amplitude, &mut rng);
    let mut kept = vec![false; all.len()];
    let mut oracle = Oracle {
        endpoint,
        key: &key,
        limiter: SlidingWindowLimiter::new(config.rate_limit, config.window_ms),
        config,
        now: 0,
        queries: 0,
        refused: 0,
        grants: Vec::new(),
    };

    let succeeded = match endpoint {
        Endpoint::InternalConfidence => score_guided(&mut oracle, &marked, &all, &mut kept),
        Endpoint::PublicRateLimited => decision_only(&mut oracle, &marked, &all, &mut kept),
    };
    let last = render(&marked, &all, &kept);
    OracleAttackOutcome {
        endpoint,
        succeeded,
        queries: oracle.queries,
        refused: oracle.refused,
        elapsed_ms: oracle.now,
        moves_kept: kept.iter().filter(|&&k| k).count(),
        mse: mse(&marked, &last),
        max_grants_per_window: oracle.max_grants_per_window(),
    }
}

fn score_guided(oracle: &mut Oracle<'_>, marked: &PixelImage, all: &[Move], kept: &mut [bool]) -> bool {
    let Some(first) = oracle.query(marked) else { return false };
    if !first.detected {
        return true;
    }
    let mut current = first.agreement.expect("internal endpoint reports agreement");
    for i in 0..all.len() {
        kept[i] = true;
        let Some(answer) = oracle.query(&render(marked, all, kept)) else {
            kept[i] = false;
            return false;
        };
        if !answer.detected {
            return true;
        }
        let a = answer.agreement.expect("internal endpoint reports agreement");
        if a < current - 1e-12 {
            current = a;
        } else {
            kept[i] = false;
        }
    }
    false
}

fn decision_only(oracle: &mut Oracle<'_>, marked: &PixelImage, all: &[Move], kept: &mut [bool]) -> bool {
    let Some(first) = oracle.query(marked) else { return false };
    if !first.detected {
        return true;
    }
    let mut removed = false;
    for i in 0..all.len() {
        kept[i] = true;
        match oracle.query(&render(marked, all, kept)) {
            None => return false,
            Some(a) if !a.detected => {
                removed = true;
                break;
            }
            Some(_) => {}
        }
    }
    if !removed {
        return false;
    }
    // Prune: drop each kept move whose absence still leaves no detection.
    for i in 0..all.len() {
        if !kept[i] {
            continue;
        }
        kept[i] = false;
        match oracle.query(&render(marked, all, kept)) {
            None => {
                kept[i] = true;
                break;
            }
            Some(a) if a.detected => kept[i] = true,
            Some(_) => {}
        }
    }
    true
}
