//! Attacks on provenance signals, the three sociotechnical scenarios, and an
//! oracle-attack simulation against the detection endpoints.
//!
//! Not modelled: corrupting a perceptible mark by stamping it over large
//! areas, and bypassing a device's secure enclave.

mod oracle;
mod scenarios;

pub use oracle::{oracle_attack_simulation, Endpoint, OracleAttackConfig, OracleAttackOutcome};
pub use scenarios::{
    low_confidence_viewer, scenario_ai_faked_as_authentic, scenario_authentic_faked_as_ai,
    scenario_manipulated_metadata, ScenarioResult, Viewer,
};

use ed25519_dalek::SigningKey;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingerprint::{compute_fingerprint, craft_collision, Algorithm, Fingerprint, FingerprintError};
use crate::manifest::{
    embed_manifest, hard_hash, sign_unchecked, Action, EditRegion, Ingredient, Manifest, ManifestError, SignedManifest,
};
use crate::media::{transform_image, MediaAsset, MediaError, Transformation};
use crate::registry::{FaultInjection, Registry};
use crate::trust::{SecurityLevel, TrustError};
use crate::watermark::{apply_perceptible_mark, forge_watermark, WatermarkError, WatermarkKey};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("attack needs {0} in its context")]
    MissingContext(&'static str),
    #[error("asset carries no readable manifest")]
    NoManifest,
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Watermark(#[from] WatermarkError),
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error("fingerprint attack failed: {0}")]
    Fingerprint(String),
}

impl From<FingerprintError> for AttackError {
    fn from(e: FingerprintError) -> Self {
        Self::Fingerprint(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "attack", rename_all = "snake_case")]
pub enum AttackKind {
    StripManifest,
    /// Replace the manifest with one signed by the context's key.
    ResignWithCert {
        signer_name: String,
        assertions: Vec<String>,
        #[serde(default)]
        actions: Vec<Action>,
        #[serde(default)]
        ingredients: Vec<Ingredient>,
        security_level: SecurityLevel,
    },
    ForgePerceptibleMark {
        text: String,
    },
    /// Paste the donor's `source` box at (`dest_left`, `dest_top`) without
    /// recording an edit.
    CopyPasteRegion {
        source: EditRegion,
        dest_left: u32,
        dest_top: u32,
    },
    /// Re-sign the existing manifest with an extra assertion, pixels untouched.
    RetroactiveFalseAssertion {
        assertion: String,
    },
    /// Overwrite an existing insecure metadata field; absent keys are left alone.
    TamperInsecureMetadata {
        key: String,
        value: String,
    },
    RemoveWatermark {
        recipe: Vec<Transformation>,
    },
    /// Copy the donor's watermark payload onto this asset.
    ForgeWatermark,
    /// Push the fingerprint more than `tau` bits away from the original.
    PerturbFingerprint {
        algorithm: Algorithm,
        tau: u32,
        budget: u32,
    },
    CraftHashCollision {
        target: Fingerprint,
        budget: u32,
    },
    /// Switch the registry's lookups into failure modes.
    RegistryDos {
        faults: FaultInjection,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    #[serde(flatten)]
    pub kind: AttackKind,
    #[serde(default)]
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, seed: u64) -> Self {
        Self { kind, seed }
    }
}

/// What the attacker has got hold of.
#[derive(Clone, Copy, Default)]
pub struct AttackContext<'a> {
    /// A signing key and the certificate id it is registered under.
    pub signing: Option<(&'a SigningKey, &'a str)>,
    pub watermark_key: Option<&'a WatermarkKey>,
    pub donor: Option<&'a MediaAsset>,
    pub registry: Option<&'a Registry>,
    pub now: u64,
}

pub fn run_attack(asset: &MediaAsset, spec: &AttackSpec, ctx: &AttackContext<'_>) -> Result<MediaAsset, AttackError> {
    let mut out = asset.clone();
    match &spec.kind {
        AttackKind::StripManifest => out.manifest_segment = None,
        AttackKind::ResignWithCert { signer_name, assertions, actions, ingredients, security_level } => {
            let (key, cert) = ctx.signing.ok_or(AttackError::MissingContext("a signing key"))?;
            let mut m = Manifest::for_image(&out.image, signer_name.clone(), *security_level, ctx.now);
            m.assertions = assertions.clone();
            m.actions = actions.clone();
            m.ingredients = ingredients.clone();
            m.validate()?;
            out = embed_manifest(&out, &sign_unchecked(m, key, cert))?;
        }
        AttackKind::ForgePerceptibleMark { text } => out.image = apply_perceptible_mark(&out.image, text)?,
        AttackKind::CopyPasteRegion { source, dest_left, dest_top } => {
            let donor = ctx.donor.ok_or(AttackError::MissingContext("a donor asset"))?;
            paste_region(&mut out, donor, *source, *dest_left, *dest_top)?;
        }
        AttackKind::RetroactiveFalseAssertion { assertion } => {
            let (key, cert) = ctx.signing.ok_or(AttackError::MissingContext("a signing key"))?;
            let segment = out.manifest_segment.as_deref().ok_or(AttackError::NoManifest)?;
            let mut m = SignedManifest::from_segment(segment).map_err(|_| AttackError::NoManifest)?.manifest;
            m.assertions.push(assertion.clone());
            m.issued_at = ctx.now;
            out.manifest_segment = Some(sign_unchecked(m, key, cert).to_segment());
        }
        AttackKind::TamperInsecureMetadata { key, value } => {
            if out.insecure_meta.get(key).is_some() {
                out.insecure_meta.insert(key.clone(), value.clone());
            }
        }
        AttackKind::RemoveWatermark { recipe } => {
            for (i, t) in recipe.iter().enumerate() {
                let seeded = Transformation { kind: t.kind.clone(), seed: t.seed ^ spec.seed.wrapping_add(i as u64) };
                out.image = transform_image(&out.image, &seeded)?;
            }
        }
        AttackKind::ForgeWatermark => {
            let donor = ctx.donor.ok_or(AttackError::MissingContext("a donor asset"))?;
            let key = ctx.watermark_key.ok_or(AttackError::MissingContext("a watermark key"))?;
            out.image = forge_watermark(&donor.image, &out.image, key)?;
        }
        AttackKind::PerturbFingerprint { algorithm, tau, budget } => {
            let original = compute_fingerprint(&out.image, *algorithm)?;
            let target = Fingerprint::new(*algorithm, flip_balanced(original.bits, tau + 1, spec.seed));
            out.image = match craft_collision(target, &out.image, *budget) {
                Ok(c) => c.image,
                Err(FingerprintError::BudgetExhausted { best, .. }) => *best,
                Err(e) => return Err(e.into()),
            };
        }
        AttackKind::CraftHashCollision { target, budget } => {
            out.image = craft_collision(*target, &out.image, *budget)?.image;
        }
        AttackKind::RegistryDos { faults } => {
            ctx.registry.ok_or(AttackError::MissingContext("a registry handle"))?.set_faults(*faults);
        }
    }
    Ok(out)
}

/// Flips at least `min_flips` bits, half of them ones and half zeros, so a
/// median-thresholded hash can still reach the result.
fn flip_balanced(bits: u64, min_flips: u32, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ones: Vec<u32> = (0..64).filter(|i| bits >> i & 1 == 1).collect();
    let mut zeros: Vec<u32> = (0..64).filter(|i| bits >> i & 1 == 0).collect();
    ones.shuffle(&mut rng);
    zeros.shuffle(&mut rng);
    let per_side = min_flips.div_ceil(2) as usize;
    let mut out = bits;
    for i in ones.iter().take(per_side).chain(zeros.iter().take(per_side)) {
        out ^= 1 << i;
    }
    out
}

fn paste_region(
    out: &mut MediaAsset,
    donor: &MediaAsset,
    source: EditRegion,
    dest_left: u32,
    dest_top: u32,
) -> Result<(), AttackError> {
    let (src, dst) = (&donor.image, &mut out.image);
    let w = source.right() - source.left();
    let h = source.bottom() - source.top();
    if src.channels() != dst.channels()
        || source.right() > src.width()
        || source.bottom() > src.height()
        || dest_left + w > dst.width()
        || dest_top + h > dst.height()
    {
        return Err(MediaError::BadTransformParams("paste region does not fit".into()).into());
    }
    let ch = usize::from(src.channels());
    for y in 0..h {
        for x in 0..w {
            let from = src.index(source.left() + x, source.top() + y, 0);
            let to = dst.index(dest_left + x, dest_top + y, 0);
            let pixel = src.samples()[from..from + ch].to_vec();
            dst.samples_mut()[to..to + ch].copy_from_slice(&pixel);
        }
    }
    Ok(())
}

/// True when the asset still carries a manifest whose hash matches its pixels.
pub fn manifest_hash_matches(asset: &MediaAsset) -> bool {
    asset
        .manifest_segment
        .as_deref()
        .and_then(|s| SignedManifest::from_segment(s).ok())
        .is_some_and(|s| s.manifest.content_hash == hard_hash(&asset.image))
}
