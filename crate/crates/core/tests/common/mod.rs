//! Builds an asset plus registry state that lands on a chosen outcome triple.
#![allow(dead_code)]

pub mod fp_oracle;

use ed25519_dalek::SigningKey;
use mediaseal::fingerprint::{compute_fingerprint, Algorithm, DEFAULT_THRESHOLD};
use mediaseal::fixtures;
use mediaseal::manifest::{embed_manifest, hard_hash, sign_manifest, Manifest, SignedManifest};
use mediaseal::media::{transform_image, MediaAsset, PixelImage, TransformKind, Transformation};
use mediaseal::registry::{FaultInjection, FaultMode, Registry, RegistryConfig, RegistryEntry};
use mediaseal::trust::{CertificateRecord, SecurityLevel, TrustList};
use mediaseal::validation::{C2paClass, FingerprintClass, OutcomeTriple, ValidationContext, WatermarkClass};
use mediaseal::watermark::{embed_watermark, WatermarkKey, WatermarkMode, WatermarkPayload};

pub const CERT: &str = "newsroom-1";
pub const WATERMARK_ID: u64 = 0x00c0_ffee_1234;

pub struct Synth {
    pub asset: MediaAsset,
    pub trust: TrustList,
    pub key: WatermarkKey,
    pub registry: Registry,
}

impl Synth {
    pub fn context(&self) -> ValidationContext<'_> {
        ValidationContext::new(&self.trust, &self.key, &self.registry)
            .with_fingerprint(Algorithm::DctWave, DEFAULT_THRESHOLD)
    }
}

pub fn signing_key() -> SigningKey {
    SigningKey::from_bytes(&[41; 32])
}

pub fn trust() -> TrustList {
    TrustList::new()
        .add(CertificateRecord::new(
            CERT,
            signing_key().verifying_key().to_bytes(),
            "Newsroom",
            SecurityLevel::CloudHigh,
        ))
        .unwrap()
}

fn sign_for(image: &PixelImage, trust: &TrustList, assertion: &str) -> SignedManifest {
    let mut m = Manifest::for_image(image, "Newsroom", SecurityLevel::CloudHigh, 1_700_000_000);
    m.assertions.push(assertion.into());
    sign_manifest(m, &signing_key(), CERT, trust).unwrap()
}

/// Every stage's state comes from the pixels, the registry contents and the
/// fault switches. The delivered image differs from the originally
/// registered one by a single flipped bit, so "no match" rows compare
/// against the original and "match" rows against the delivered pixels.
pub fn synthesize(triple: OutcomeTriple, seed: u64) -> Synth {
    let trust = trust();
    let key = WatermarkKey::from_seed(seed ^ 0x5eed, WatermarkMode::Robust);
    let base = fixtures::natural_image(128, 128, 3, seed);
    let original = if triple.watermark == WatermarkClass::Undetectable {
        base
    } else {
        embed_watermark(&base, WatermarkPayload::new(WATERMARK_ID), &key).unwrap()
    };
    let delivered =
        transform_image(&original, &Transformation::seeded(TransformKind::PixelFlip { count: 1 }, seed)).unwrap();
    assert_ne!(hard_hash(&original), hard_hash(&delivered));

    let mut asset = MediaAsset::new(original.clone());
    match triple.c2pa {
        C2paClass::NotPresent => {}
        C2paClass::PresentHashNoMatch => {
            asset = embed_manifest(&asset, &sign_for(&original, &trust, "camera-captured")).unwrap();
        }
        C2paClass::PresentHashMatch => {
            asset =
                embed_manifest(&MediaAsset::new(delivered.clone()), &sign_for(&delivered, &trust, "camera-captured"))
                    .unwrap();
        }
    }
    asset.image = delivered.clone();

    // (image the entry's hash is taken from, carries watermark id, carries fingerprint)
    let mut wanted: Vec<(&PixelImage, bool, bool)> = Vec::new();
    let mut faults = FaultInjection::default();
    match triple.watermark {
        WatermarkClass::DetectableMatch => wanted.push((&delivered, true, false)),
        WatermarkClass::DetectableNoMatch => wanted.push((&original, true, false)),
        WatermarkClass::DetectableMissing | WatermarkClass::Undetectable => {}
        WatermarkClass::NoAccess => faults.watermark_lookup = FaultMode::NoAccess,
    }
    match triple.fingerprint {
        FingerprintClass::ValidMatch => wanted.push((&delivered, false, true)),
        FingerprintClass::ValidNoMatch => wanted.push((&original, false, true)),
        FingerprintClass::ValidMissing => {
            wanted.push((&original, false, true));
            faults.fingerprint_lookup = FaultMode::MissingManifest;
        }
        FingerprintClass::NoAccess => faults.fingerprint_lookup = FaultMode::NoAccess,
        FingerprintClass::Invalid => {}
    }

    let registry = Registry::in_memory(RegistryConfig::default());
    for image in [&original, &delivered] {
        let parts: Vec<_> = wanted.iter().filter(|(i, _, _)| hard_hash(i) == hard_hash(image)).collect();
        if parts.is_empty() {
            continue;
        }
        let watermark = parts.iter().any(|p| p.1).then_some(WATERMARK_ID);
        let fingerprinted = parts.iter().any(|p| p.2);
        let entry = RegistryEntry::new(sign_for(image, &trust, "registered"), 1_700_000_100)
            .with_watermark_id(watermark)
            .with_fingerprints(
                fingerprinted
                    .then(|| compute_fingerprint(image, Algorithm::DctWave).unwrap())
                    .into_iter()
                    .collect::<Vec<_>>(),
            );
        registry.store_entry(entry).unwrap();
    }
    registry.set_faults(faults);
    Synth { asset, trust, key, registry }
}

pub fn all_triples() -> Vec<OutcomeTriple> {
    let mut out = Vec::new();
    for c2pa in C2paClass::ALL {
        for watermark in WatermarkClass::ALL {
            for fingerprint in FingerprintClass::ALL {
                out.push(OutcomeTriple { c2pa, watermark, fingerprint });
            }
        }
    }
    out
}
