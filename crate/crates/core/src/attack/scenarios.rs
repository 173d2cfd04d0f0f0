use ed25519_dalek::SigningKey;
use serde::Serialize;

use super::{run_attack, AttackContext, AttackError, AttackKind, AttackSpec};
use crate::fingerprint::{compute_fingerprint, Algorithm};
use crate::fixtures;
use crate::manifest::{embed_manifest, hard_hash, sign_manifest, Action, ActionKind, EditRegion, Ingredient, Manifest};
use crate::media::{InsecureMetadata, MediaAsset, PixelImage, TransformKind, Transformation};
use crate::registry::{Registry, RegistryConfig, RegistryEntry};
use crate::trust::{CertificateRecord, SecurityLevel, TrustList};
use crate::validation::{
    check_watermark, validate, C2paClass, C2paReport, Confidence, RegistryHash, ResultState, ValidationContext,
    ValidationMode, ValidationReport, WatermarkOutcome,
};
use crate::watermark::{embed_watermark, WatermarkKey, WatermarkMode, WatermarkPayload};
use crate::Digest;

/// How the result is presented to the person looking at the media.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Viewer {
    /// The full validation engine with display gating.
    #[default]
    HighConfidence,
    /// A watermark-only checker that shows no manifest context and echoes
    /// whatever metadata the file carries.
    LowConfidenceStub,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub seed: u64,
    pub viewer: Viewer,
    pub attacks: Vec<AttackSpec>,
    pub report_before: ValidationReport,
    pub report_after: ValidationReport,
    pub mitigated: bool,
}

impl ScenarioResult {
    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_string(self)
    }
}

const WATERMARK_ID: u64 = 0x0000_5ca1_ab1e;
const T0: u64 = 1_710_000_000;

fn signing_key(label: &str, seed: u64) -> SigningKey {
    let mut material = label.as_bytes().to_vec();
    material.extend_from_slice(&seed.to_be_bytes());
    SigningKey::from_bytes(Digest::of(&material).as_bytes())
}

fn cert(id: &str, key: &SigningKey, owner: &str, level: SecurityLevel) -> CertificateRecord {
    CertificateRecord::new(id, key.verifying_key().to_bytes(), owner, level)
}

struct World {
    trust: TrustList,
    key: WatermarkKey,
    registry: Registry,
}

impl World {
    fn view(&self, asset: &MediaAsset, viewer: Viewer) -> ValidationReport {
        let ctx = ValidationContext::new(&self.trust, &self.key, &self.registry);
        match viewer {
            Viewer::HighConfidence => validate(asset, &ctx, ValidationMode::Full),
            Viewer::LowConfidenceStub => low_confidence_viewer(asset, &ctx),
        }
    }
}

/// Checks the watermark only, never shows manifest context, and repeats the
/// file's metadata as if it were established fact.
pub fn low_confidence_viewer(asset: &MediaAsset, ctx: &ValidationContext<'_>) -> ValidationReport {
    let watermark = check_watermark(asset, ctx.key, ctx.registry);
    let (result, confidence) = match watermark {
        WatermarkOutcome::Detectable { .. } => (ResultState::PossibleMatch, Confidence::Low),
        _ => (ResultState::Indeterminate, Confidence::CannotBeAsserted),
    };
    let mut notes: Vec<String> = Vec::new();
    if let WatermarkOutcome::Detectable { registry_hash: RegistryHash::Match | RegistryHash::NoMatch, watermark_id } =
        watermark
    {
        if let Some(entry) = ctx.registry.lookup_by_watermark(watermark_id).found() {
            notes.extend(entry.signed_manifest.manifest.assertions.iter().map(|a| format!("label: {a}")));
        }
    }
    notes.extend(asset.insecure_meta.iter().map(|(k, v)| format!("{k}: {v}")));
    ValidationReport {
        mode: ValidationMode::Full,
        c2pa: C2paReport { status: C2paClass::NotPresent, concerns: Vec::new() },
        watermark: Some(watermark),
        fingerprint: None,
        result,
        confidence,
        concerns: Vec::new(),
        notes,
        row: None,
        extra_tabular: false,
        display: None,
        needs_human_review: result == ResultState::PossibleMatch,
    }
}

/// Erase-style fill: the region takes its own mean colour.
fn fill_region(image: &mut PixelImage, region: EditRegion) {
    let ch = usize::from(image.channels());
    let mut sums = vec![0u64; ch];
    let mut n = 0u64;
    for y in region.top()..region.bottom() {
        for x in region.left()..region.right() {
            for (c, s) in sums.iter_mut().enumerate() {
                *s += u64::from(image.sample(x, y, c));
            }
            n += 1;
        }
    }
    for y in region.top()..region.bottom() {
        for x in region.left()..region.right() {
            for (c, s) in sums.iter().enumerate() {
                let i = image.index(x, y, c);
                image.samples_mut()[i] = ((s + n / 2) / n) as u8;
            }
        }
    }
}

fn shows_edit_context(report: &ValidationReport, region: EditRegion, ingredient: Digest) -> bool {
    report.display.as_ref().is_some_and(|d| {
        d.actions.iter().any(|a| a.kind == ActionKind::AiInpainted && a.region == Some(region))
            && d.ingredients.iter().any(|i| i.thumbnail_hash == Some(ingredient))
    })
}

/// An authentic photo gets a small generative fill so it can be waved away
/// as "AI". Mitigated when the viewer shows where the edit happened and the
/// unedited ingredient.
pub fn scenario_authentic_faked_as_ai(
    seed: u64,
    viewer: Viewer,
    region: (u32, u32, u32, u32),
) -> Result<ScenarioResult, AttackError> {
    let region = EditRegion::new(region.0, region.1, region.2, region.3)?;
    let camera = signing_key("camera", seed);
    let editor = signing_key("editor", seed);
    let world = World {
        trust: TrustList::new()
            .add(cert("camera-1", &camera, "Camera Maker", SecurityLevel::DeviceSecure))?
            .add(cert("cloud-editor", &editor, "Cloud Editor", SecurityLevel::CloudHigh))?,
        key: WatermarkKey::from_seed(seed, WatermarkMode::Robust),
        registry: Registry::in_memory(RegistryConfig::default()),
    };

    let photo = fixtures::natural_image(128, 128, 3, seed);
    let mut m = Manifest::for_image(&photo, "Camera Maker", SecurityLevel::DeviceSecure, T0);
    m.assertions.push("camera-captured".into());
    m.actions.push(Action::new(ActionKind::Created, "camera firmware", T0));
    let original =
        embed_manifest(&MediaAsset::new(photo.clone()), &sign_manifest(m, &camera, "camera-1", &world.trust)?)?;
    let report_before = world.view(&original, viewer);

    let mut edited = original.clone();
    fill_region(&mut edited.image, region);
    edited.image = embed_watermark(&edited.image, WatermarkPayload::new(WATERMARK_ID), &world.key)?;
    let spec = AttackSpec::new(
        AttackKind::ResignWithCert {
            signer_name: "Cloud Editor".into(),
            assertions: vec!["ai-edited".into()],
            actions: vec![
                Action::new(ActionKind::Opened, "cloud editor", T0 + 60),
                Action::new(ActionKind::AiInpainted, "generative erase", T0 + 61).in_region(region),
            ],
            ingredients: vec![Ingredient {
                description: "original capture".into(),
                thumbnail_hash: Some(hard_hash(&photo)),
            }],
            security_level: SecurityLevel::CloudHigh,
        },
        seed,
    );
    let ctx = AttackContext { signing: Some((&editor, "cloud-editor")), now: T0 + 62, ..Default::default() };
    let edited = run_attack(&edited, &spec, &ctx)?;
    let signed =
        crate::manifest::SignedManifest::from_segment(edited.manifest_segment.as_deref().expect("just signed"))?;
    world
        .registry
        .store_entry(
            RegistryEntry::new(signed, T0 + 62)
                .with_fingerprints([compute_fingerprint(&edited.image, Algorithm::DctWave)?]),
        )
        .expect("in-memory store");

    let report_after = world.view(&edited, viewer);
    let mitigated = shows_edit_context(&report_after, region, hard_hash(&photo));
    Ok(ScenarioResult {
        scenario: "authentic_faked_as_ai".into(),
        seed,
        viewer,
        attacks: vec![spec],
        report_before,
        report_after,
        mitigated,
    })
}

fn rejects_revoked_signer(report: &ValidationReport) -> bool {
    report.c2pa.status == C2paClass::NotPresent
        && report.c2pa.concerns.contains(&crate::manifest::ManifestConcern::Revoked)
        && !(report.confidence == Confidence::High && report.display.is_some())
}

/// A generated image is screenshotted, its watermark washed out, and it is
/// re-signed as a camera capture with a stolen device certificate.
/// Mitigated when validation no longer vouches for it once that
/// certificate is revoked.
pub fn scenario_ai_faked_as_authentic(
    seed: u64,
    viewer: Viewer,
    revoke_stolen: bool,
    stolen_certificate_available: bool,
) -> Result<ScenarioResult, AttackError> {
    let generator = signing_key("generator", seed);
    let phone = signing_key("phone", seed);
    let mut world = World {
        trust: TrustList::new()
            .add(cert("genai-cloud", &generator, "GenAI Service", SecurityLevel::CloudHigh))?
            .add(cert("phone-77", &phone, "Phone Maker", SecurityLevel::DeviceSecure))?,
        key: WatermarkKey::from_seed(seed, WatermarkMode::Robust),
        registry: Registry::in_memory(RegistryConfig::default()),
    };

    let generated =
        embed_watermark(&fixtures::natural_image(128, 128, 3, seed), WatermarkPayload::new(WATERMARK_ID), &world.key)?;
    let mut m = Manifest::for_image(&generated, "GenAI Service", SecurityLevel::CloudHigh, T0);
    m.assertions.push("ai-generated".into());
    m.actions.push(Action::new(ActionKind::AiGenerated, "image model", T0));
    m.watermark_id = Some(WATERMARK_ID);
    let signed = sign_manifest(m, &generator, "genai-cloud", &world.trust)?;
    world
        .registry
        .store_entry(
            RegistryEntry::new(signed.clone(), T0)
                .with_fingerprints([compute_fingerprint(&generated, Algorithm::DctWave)?]),
        )
        .expect("in-memory store");
    let asset = embed_manifest(&MediaAsset::new(generated), &signed)?;
    let report_before = world.view(&asset, viewer);

    let attacks = vec![
        AttackSpec::new(AttackKind::StripManifest, seed),
        AttackSpec::new(
            AttackKind::RemoveWatermark {
                recipe: vec![Transformation::new(TransformKind::GaussianNoise { sigma: 32.0 })],
            },
            seed,
        ),
        AttackSpec::new(
            AttackKind::ResignWithCert {
                signer_name: "Phone Maker".into(),
                assertions: vec!["camera-captured".into()],
                actions: vec![Action::new(ActionKind::Created, "camera firmware", T0 + 3600)],
                ingredients: Vec::new(),
                security_level: SecurityLevel::DeviceSecure,
            },
            seed,
        ),
    ];
    let ctx = AttackContext {
        signing: stolen_certificate_available.then_some((&phone, "phone-77")),
        now: T0 + 3600,
        ..Default::default()
    };
    let mut attacked = asset.pixels_only();
    for spec in &attacks {
        attacked = run_attack(&attacked, spec, &ctx)?;
    }
    if revoke_stolen {
        world.trust = world.trust.revoke("phone-77", T0 + 7200)?;
    }
    let report_after = world.view(&attacked, viewer);
    let mitigated = rejects_revoked_signer(&report_after);
    Ok(ScenarioResult {
        scenario: "ai_faked_as_authentic".into(),
        seed,
        viewer,
        attacks,
        report_before,
        report_after,
        mitigated,
    })
}

/// A signed photo whose capture time lives only in insecure metadata has
/// that time rewritten. Mitigated when the outcome does not move and the
/// forged value is shown nowhere.
pub fn scenario_manipulated_metadata(
    seed: u64,
    viewer: Viewer,
    tamper_key: &str,
) -> Result<ScenarioResult, AttackError> {
    const FORGED: &str = "2019-11-05T22:10:00Z";
    let newsroom = signing_key("newsroom", seed);
    let world = World {
        trust: TrustList::new().add(cert("newsroom", &newsroom, "Newsroom", SecurityLevel::CloudHigh))?,
        key: WatermarkKey::from_seed(seed, WatermarkMode::Robust),
        registry: Registry::in_memory(RegistryConfig::default()),
    };
    let photo =
        embed_watermark(&fixtures::natural_image(128, 128, 3, seed), WatermarkPayload::new(WATERMARK_ID), &world.key)?;
    let mut m = Manifest::for_image(&photo, "Newsroom", SecurityLevel::CloudHigh, T0);
    m.assertions.push("camera-captured".into());
    m.watermark_id = Some(WATERMARK_ID);
    let signed = sign_manifest(m, &newsroom, "newsroom", &world.trust)?;
    world.registry.store_entry(RegistryEntry::new(signed.clone(), T0)).expect("in-memory store");
    let mut meta = InsecureMetadata::new();
    meta.insert("capture_time", "2024-03-01T09:30:00Z");
    meta.insert("camera", "ExampleCam X1");
    let asset = embed_manifest(&MediaAsset::new(photo), &signed)?.with_metadata(meta);
    let report_before = world.view(&asset, viewer);

    let spec =
        AttackSpec::new(AttackKind::TamperInsecureMetadata { key: tamper_key.into(), value: FORGED.into() }, seed);
    let attacked = run_attack(&asset, &spec, &AttackContext::default())?;
    let report_after = world.view(&attacked, viewer);
    let unchanged = (report_after.result, report_after.confidence, &report_after.display)
        == (report_before.result, report_before.confidence, &report_before.display);
    let mitigated = unchanged && !report_after.to_canonical_json().contains(FORGED);
    Ok(ScenarioResult {
        scenario: "manipulated_metadata".into(),
        seed,
        viewer,
        attacks: vec![spec],
        report_before,
        report_after,
        mitigated,
    })
}
