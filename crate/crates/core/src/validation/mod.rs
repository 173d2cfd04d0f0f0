//! Sequential C2PA, watermark and fingerprint checks mapped onto the outcome
//! table, plus the report handed to viewers.

mod table;

pub use table::{
    decide, decide_prefix, outcome_table, C2paClass, Confidence, Decision, FingerprintClass, OutcomeTriple,
    ResultState, TableRow, WatermarkClass, TABLE_JSON,
};

use serde::{Deserialize, Serialize};

use crate::fingerprint::{compute_fingerprint, Algorithm, DEFAULT_THRESHOLD};
use crate::manifest::{hard_hash, validate_manifest, Action, C2paOutcome, C2paStatus, ManifestConcern, SignedManifest};
use crate::media::MediaAsset;
use crate::registry::{Lookup, RegistryEntry, RegistryLookup};
use crate::trust::{SecurityLevel, TrustList, TrustLookup};
use crate::watermark::{decode_watermark, WatermarkKey};
use crate::Digest;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    #[default]
    ShortCircuit,
    Full,
}

impl std::str::FromStr for ValidationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "short_circuit" => Ok(Self::ShortCircuit),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown validation mode {other:?}")),
        }
    }
}

/// How the registry's manifest hash compares with the asset's pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegistryHash {
    Match,
    NoMatch,
    MissingFromRegistry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum WatermarkOutcome {
    Detectable { watermark_id: u64, registry_hash: RegistryHash },
    NoAccess,
    Undetectable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum FingerprintOutcome {
    Valid {
        registry_hash: RegistryHash,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance: Option<u32>,
    },
    NoAccess,
    Invalid,
}

impl WatermarkOutcome {
    pub fn class(self) -> WatermarkClass {
        match self {
            Self::Detectable { registry_hash: RegistryHash::Match, .. } => WatermarkClass::DetectableMatch,
            Self::Detectable { registry_hash: RegistryHash::NoMatch, .. } => WatermarkClass::DetectableNoMatch,
            Self::Detectable { registry_hash: RegistryHash::MissingFromRegistry, .. } => {
                WatermarkClass::DetectableMissing
            }
            Self::NoAccess => WatermarkClass::NoAccess,
            Self::Undetectable => WatermarkClass::Undetectable,
        }
    }
}

impl FingerprintOutcome {
    pub fn class(self) -> FingerprintClass {
        match self {
            Self::Valid { registry_hash: RegistryHash::Match, .. } => FingerprintClass::ValidMatch,
            Self::Valid { registry_hash: RegistryHash::NoMatch, .. } => FingerprintClass::ValidNoMatch,
            Self::Valid { registry_hash: RegistryHash::MissingFromRegistry, .. } => FingerprintClass::ValidMissing,
            Self::NoAccess => FingerprintClass::NoAccess,
            Self::Invalid => FingerprintClass::Invalid,
        }
    }
}

pub fn c2pa_class(outcome: &C2paOutcome) -> C2paClass {
    match outcome.status {
        C2paStatus::NotPresent => C2paClass::NotPresent,
        C2paStatus::PresentHashNoMatch(_) => C2paClass::PresentHashNoMatch,
        C2paStatus::PresentHashMatch(_) => C2paClass::PresentHashMatch,
    }
}

/// Everything validation reads besides the asset itself.
#[derive(Clone, Copy)]
pub struct ValidationContext<'a> {
    pub trust: &'a TrustList,
    pub key: &'a WatermarkKey,
    pub registry: &'a dyn RegistryLookup,
    pub algorithm: Algorithm,
    pub tau: u32,
}

impl<'a> ValidationContext<'a> {
    pub fn new(trust: &'a TrustList, key: &'a WatermarkKey, registry: &'a dyn RegistryLookup) -> Self {
        Self { trust, key, registry, algorithm: Algorithm::DctWave, tau: DEFAULT_THRESHOLD }
    }

    pub fn with_fingerprint(mut self, algorithm: Algorithm, tau: u32) -> Self {
        self.algorithm = algorithm;
        self.tau = tau;
        self
    }
}

pub fn check_c2pa(asset: &MediaAsset, trust: &TrustList) -> C2paOutcome {
    validate_manifest(asset, trust)
}

pub fn check_watermark(asset: &MediaAsset, key: &WatermarkKey, registry: &dyn RegistryLookup) -> WatermarkOutcome {
    watermark_stage(asset, key, registry).0
}

fn watermark_stage(
    asset: &MediaAsset,
    key: &WatermarkKey,
    registry: &dyn RegistryLookup,
) -> (WatermarkOutcome, Option<RegistryEntry>) {
    let Some(payload) = decode_watermark(&asset.image, key).payload() else {
        return (WatermarkOutcome::Undetectable, None);
    };
    let watermark_id = payload.id();
    match registry.lookup_by_watermark(watermark_id) {
        Lookup::NoAccess => (WatermarkOutcome::NoAccess, None),
        Lookup::Missing => {
            (WatermarkOutcome::Detectable { watermark_id, registry_hash: RegistryHash::MissingFromRegistry }, None)
        }
        Lookup::Found(entry) => {
            let registry_hash =
                if entry.content_hash == hard_hash(&asset.image) { RegistryHash::Match } else { RegistryHash::NoMatch };
            (WatermarkOutcome::Detectable { watermark_id, registry_hash }, Some(entry))
        }
    }
}

pub fn check_fingerprint(
    asset: &MediaAsset,
    registry: &dyn RegistryLookup,
    algorithm: Algorithm,
    tau: u32,
) -> FingerprintOutcome {
    let Ok(fingerprint) = compute_fingerprint(&asset.image, algorithm) else {
        return FingerprintOutcome::Invalid;
    };
    match registry.lookup_by_fingerprint(fingerprint, tau) {
        Lookup::NoAccess => FingerprintOutcome::NoAccess,
        Lookup::Missing => {
            FingerprintOutcome::Valid { registry_hash: RegistryHash::MissingFromRegistry, distance: None }
        }
        Lookup::Found(candidates) => match candidates.first() {
            None => FingerprintOutcome::Invalid,
            Some(best) => {
                let registry_hash = if best.entry.content_hash == hard_hash(&asset.image) {
                    RegistryHash::Match
                } else {
                    RegistryHash::NoMatch
                };
                FingerprintOutcome::Valid { registry_hash, distance: Some(best.distance) }
            }
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplaySource {
    EmbeddedManifest,
    Registry,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayIngredient {
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail_hash: Option<Digest>,
}

/// What a viewer may show. Only ever built for High-confidence reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayPayload {
    pub source: DisplaySource,
    pub signer: String,
    pub certificate_id: String,
    pub assertions: Vec<String>,
    /// Actions with their edit regions, in manifest order.
    pub actions: Vec<Action>,
    pub ingredients: Vec<DisplayIngredient>,
    pub content_hash: Digest,
    pub security_level: SecurityLevel,
    pub low_security_caveat: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct C2paReport {
    pub status: C2paClass,
    pub concerns: Vec<ManifestConcern>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub c2pa: C2paReport,
    /// `None` when the stage was skipped.
    pub watermark: Option<WatermarkOutcome>,
    pub fingerprint: Option<FingerprintOutcome>,
    pub result: ResultState,
    pub confidence: Confidence,
    /// The table's concern text for the outcome.
    pub concerns: Vec<String>,
    /// Annotations added by this implementation (manifest rejections,
    /// extra-tabular resolution, stage disagreement, low-security signer).
    pub notes: Vec<String>,
    pub row: Option<u8>,
    pub extra_tabular: bool,
    pub display: Option<DisplayPayload>,
    pub needs_human_review: bool,
}

impl ValidationReport {
    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_string(self)
    }

    pub fn triple(&self) -> (C2paClass, Option<WatermarkClass>, Option<FingerprintClass>) {
        (self.c2pa.status, self.watermark.map(WatermarkOutcome::class), self.fingerprint.map(FingerprintOutcome::class))
    }
}

/// The lower of the manifest's declared level and its certificate's level.
fn effective_security_level(signed: &SignedManifest, trust: &TrustList) -> SecurityLevel {
    let declared = signed.manifest.security_level;
    match trust.lookup(&signed.certificate_id) {
        TrustLookup::Trusted(record) | TrustLookup::Revoked(record) => declared.min(record.security_level),
        TrustLookup::Unknown => declared,
    }
}

fn display_for(signed: &SignedManifest, source: DisplaySource, trust: &TrustList) -> DisplayPayload {
    let m = &signed.manifest;
    let security_level = effective_security_level(signed, trust);
    DisplayPayload {
        source,
        signer: m.signer_name.clone(),
        certificate_id: signed.certificate_id.clone(),
        assertions: m.assertions.clone(),
        actions: m.actions.clone(),
        ingredients: m
            .ingredients
            .iter()
            .map(|i| DisplayIngredient { description: i.description.clone(), thumbnail_hash: i.thumbnail_hash })
            .collect(),
        content_hash: m.content_hash,
        security_level,
        low_security_caveat: security_level == SecurityLevel::DeviceLow,
    }
}

/// Runs the stages in order. Insecure metadata on the asset is never read.
pub fn validate(asset: &MediaAsset, ctx: &ValidationContext<'_>, mode: ValidationMode) -> ValidationReport {
    let c2pa = check_c2pa(asset, ctx.trust);
    let c_class = c2pa_class(&c2pa);

    let mut watermark = None;
    let mut wm_entry = None;
    let mut fingerprint = None;
    let decision = 'decide: {
        if mode == ValidationMode::ShortCircuit && c_class == C2paClass::PresentHashMatch {
            if let Some(d) = decide_prefix(c_class, None) {
                break 'decide d;
            }
        }
        let (wm, entry) = watermark_stage(asset, ctx.key, ctx.registry);
        watermark = Some(wm);
        wm_entry = entry;
        if mode == ValidationMode::ShortCircuit && wm.class() == WatermarkClass::DetectableMatch {
            if let Some(d) = decide_prefix(c_class, Some(wm.class())) {
                break 'decide d;
            }
        }
        let fp = check_fingerprint(asset, ctx.registry, ctx.algorithm, ctx.tau);
        fingerprint = Some(fp);
        decide(OutcomeTriple { c2pa: c_class, watermark: wm.class(), fingerprint: fp.class() })
    };

    let mut notes: Vec<String> = c2pa.concerns.iter().map(|c| format!("manifest rejected: {}", c.as_str())).collect();
    if decision.extra_tabular {
        notes.push("extra-tabular outcome resolved by precedence".into());
    }
    if c_class == C2paClass::PresentHashMatch {
        if watermark.is_some_and(|w| w.class() != WatermarkClass::DetectableMatch) {
            notes.push("watermark stage disagrees with the embedded manifest".into());
        }
        if fingerprint.is_some_and(|f| f.class() != FingerprintClass::ValidMatch) {
            notes.push("fingerprint stage disagrees with the embedded manifest".into());
        }
    }

    let display = if decision.confidence == Confidence::High {
        match (&c2pa.status, decision.result) {
            (C2paStatus::PresentHashMatch(signed), ResultState::MediaValidates) => {
                Some(display_for(signed, DisplaySource::EmbeddedManifest, ctx.trust))
            }
            _ => wm_entry
                .as_ref()
                .filter(|_| watermark.is_some_and(|w| w.class() == WatermarkClass::DetectableMatch))
                .map(|e| display_for(&e.signed_manifest, DisplaySource::Registry, ctx.trust)),
        }
    } else {
        None
    };
    if display.as_ref().is_some_and(|d| d.low_security_caveat) {
        notes.push("signed with a low security level".into());
    }

    // Any soft-hash candidate is an automated match that a person must confirm.
    let needs_human_review = decision.result == ResultState::PossibleMatch
        || (matches!(fingerprint, Some(FingerprintOutcome::Valid { .. })) && decision.confidence != Confidence::High);

    ValidationReport {
        mode,
        c2pa: C2paReport { status: c_class, concerns: c2pa.concerns.clone() },
        watermark,
        fingerprint,
        result: decision.result,
        confidence: decision.confidence,
        concerns: decision.concerns,
        notes,
        row: decision.row,
        extra_tabular: decision.extra_tabular,
        display,
        needs_human_review,
    }
}
