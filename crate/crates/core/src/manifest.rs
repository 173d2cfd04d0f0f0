//! Signed provenance manifests: data model, canonical bytes, the hard hash
//! over pixels, Ed25519 signing, embedding, and three-step validation
//! (presence, signature and trust, hash comparison).

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::digest::Digest;
use crate::media::{MediaAsset, PixelImage};
use crate::trust::{SecurityLevel, TrustList, TrustLookup};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ManifestError {
    #[error("signing key does not match certificate {0:?}")]
    KeyMismatch(String),
    #[error("unknown certificate {0:?}")]
    UnknownCertificate(String),
    #[error("manifest content hash does not match the asset pixels")]
    HashMismatch,
    #[error("malformed manifest segment: {0}")]
    MalformedManifestSegment(String),
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

/// Inclusive-exclusive pixel box marking where an edit happened.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRegion", into = "RawRegion")]
pub struct EditRegion {
    left: u32,
    top: u32,
    right: u32,
    bottom: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    left: u32,
    top: u32,
    right: u32,
    bottom: u32,
}

impl EditRegion {
    pub fn new(left: u32, top: u32, right: u32, bottom: u32) -> Result<Self, ManifestError> {
        if left >= right || top >= bottom {
            return Err(ManifestError::Invalid(format!(
                "edit region ({left},{top})-({right},{bottom}) has zero or negative area"
            )));
        }
        Ok(Self { left, top, right, bottom })
    }

    pub fn left(&self) -> u32 {
        self.left
    }
    pub fn top(&self) -> u32 {
        self.top
    }
    pub fn right(&self) -> u32 {
        self.right
    }
    pub fn bottom(&self) -> u32 {
        self.bottom
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.left..self.right).contains(&x) && (self.top..self.bottom).contains(&y)
    }
}

impl TryFrom<RawRegion> for EditRegion {
    type Error = ManifestError;
    fn try_from(r: RawRegion) -> Result<Self, Self::Error> {
        EditRegion::new(r.left, r.top, r.right, r.bottom)
    }
}

impl From<EditRegion> for RawRegion {
    fn from(r: EditRegion) -> Self {
        RawRegion { left: r.left, top: r.top, right: r.right, bottom: r.bottom }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Created,
    Opened,
    AiGenerated,
    AiInpainted,
    ColorEdit,
    DeletedContent,
    Imported,
}

impl ActionKind {
    pub fn requires_region(self) -> bool {
        matches!(self, Self::AiInpainted | Self::DeletedContent)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<EditRegion>,
    pub tool: String,
    pub timestamp: u64,
}

impl Action {
    pub fn new(kind: ActionKind, tool: impl Into<String>, timestamp: u64) -> Self {
        Self { kind, region: None, tool: tool.into(), timestamp }
    }

    pub fn in_region(mut self, region: EditRegion) -> Self {
        self.region = Some(region);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ingredient {
    pub description: String,
    /// Hard hash of the ingredient's PIXL segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail_hash: Option<Digest>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub signer_name: String,
    pub assertions: Vec<String>,
    pub actions: Vec<Action>,
    pub ingredients: Vec<Ingredient>,
    pub content_hash: Digest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watermark_id: Option<u64>,
    pub security_level: SecurityLevel,
    pub issued_at: u64,
}

impl Manifest {
    /// A manifest for `image` with no assertions, actions or ingredients yet.
    pub fn for_image(
        image: &PixelImage,
        signer_name: impl Into<String>,
        security_level: SecurityLevel,
        issued_at: u64,
    ) -> Self {
        Self {
            signer_name: signer_name.into(),
            assertions: Vec::new(),
            actions: Vec::new(),
            ingredients: Vec::new(),
            content_hash: hard_hash(image),
            watermark_id: None,
            security_level,
            issued_at,
        }
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.issued_at == 0 {
            return Err(ManifestError::Invalid("issued_at must be positive".into()));
        }
        for action in &self.actions {
            if action.kind.requires_region() && action.region.is_none() {
                return Err(ManifestError::Invalid(format!("{:?} action without an edit region", action.kind)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignedManifest {
    pub manifest: Manifest,
    pub certificate_id: String,
    #[serde(with = "crate::hexfmt")]
    pub signature: [u8; 64],
}

impl SignedManifest {
    /// The C2PM segment payload.
    pub fn to_segment(&self) -> Vec<u8> {
        canonical::to_vec(self)
    }

    /// Decodes a C2PM payload. Anything that is not byte-for-byte the
    /// canonical encoding of a valid signed manifest is rejected.
    pub fn from_segment(bytes: &[u8]) -> Result<Self, ManifestError> {
        let signed: SignedManifest =
            serde_json::from_slice(bytes).map_err(|e| ManifestError::MalformedManifestSegment(e.to_string()))?;
        signed.manifest.validate().map_err(|e| ManifestError::MalformedManifestSegment(e.to_string()))?;
        if signed.to_segment() != bytes {
            return Err(ManifestError::MalformedManifestSegment("payload is not in canonical form".into()));
        }
        Ok(signed)
    }

    pub fn verify_with(&self, public_key: &[u8; 32]) -> bool {
        let Ok(key) = ed25519_dalek::VerifyingKey::from_bytes(public_key) else {
            return false;
        };
        key.verify(&canonical_bytes(&self.manifest), &Signature::from_bytes(&self.signature)).is_ok()
    }
}

pub fn canonical_bytes(manifest: &Manifest) -> Vec<u8> {
    canonical::to_vec(manifest)
}

/// SHA-256 over the PIXL payload; the manifest and metadata are excluded.
pub fn hard_hash(image: &PixelImage) -> Digest {
    Digest::of(&image.pixl_payload())
}

pub fn sign_manifest(
    manifest: Manifest,
    signing_key: &SigningKey,
    certificate_id: &str,
    trust: &TrustList,
) -> Result<SignedManifest, ManifestError> {
    manifest.validate()?;
    let record =
        trust.get(certificate_id).ok_or_else(|| ManifestError::UnknownCertificate(certificate_id.to_owned()))?;
    if record.public_key != signing_key.verifying_key().to_bytes() {
        return Err(ManifestError::KeyMismatch(certificate_id.to_owned()));
    }
    Ok(sign_unchecked(manifest, signing_key, certificate_id))
}

/// Signs without consulting a trust list, e.g. for a self-issued certificate
/// that no validator knows about.
pub fn sign_unchecked(manifest: Manifest, signing_key: &SigningKey, certificate_id: &str) -> SignedManifest {
    let signature = signing_key.sign(&canonical_bytes(&manifest)).to_bytes();
    SignedManifest { manifest, certificate_id: certificate_id.to_owned(), signature }
}

pub fn embed_manifest(asset: &MediaAsset, signed: &SignedManifest) -> Result<MediaAsset, ManifestError> {
    if signed.manifest.content_hash != hard_hash(&asset.image) {
        return Err(ManifestError::HashMismatch);
    }
    let mut out = asset.clone();
    out.manifest_segment = Some(signed.to_segment());
    Ok(out)
}

/// Why a present manifest segment was demoted to "not present".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestConcern {
    BadSignature,
    UntrustedSigner,
    Revoked,
    Malformed,
}

impl ManifestConcern {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BadSignature => "bad_signature",
            Self::UntrustedSigner => "untrusted_signer",
            Self::Revoked => "revoked",
            Self::Malformed => "malformed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum C2paStatus {
    NotPresent,
    PresentHashNoMatch(SignedManifest),
    PresentHashMatch(SignedManifest),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct C2paOutcome {
    pub status: C2paStatus,
    /// Non-empty only when a segment existed but could not be accepted.
    pub concerns: Vec<ManifestConcern>,
}

impl C2paOutcome {
    fn not_present(mut concerns: Vec<ManifestConcern>) -> Self {
        concerns.sort();
        concerns.dedup();
        Self { status: C2paStatus::NotPresent, concerns }
    }

    pub fn has_concern(&self, concern: ManifestConcern) -> bool {
        self.concerns.contains(&concern)
    }

    pub fn manifest(&self) -> Option<&SignedManifest> {
        match &self.status {
            C2paStatus::NotPresent => None,
            C2paStatus::PresentHashNoMatch(m) | C2paStatus::PresentHashMatch(m) => Some(m),
        }
    }
}

/// Presence, then signature and trust, then hash comparison.
///
/// Segments that cannot be accepted are reported as not present, with the
/// reasons in `concerns`:
/// - undecodable or non-canonical payload: `malformed` and `bad_signature`
/// - certificate unknown: `untrusted_signer`, plus `bad_signature` when the
///   signature verifies under some other listed certificate (the claimed id
///   was altered after signing)
/// - certificate revoked: `revoked`, plus `bad_signature` if it also fails
/// - signature fails under the claimed certificate: `bad_signature`
pub fn validate_manifest(asset: &MediaAsset, trust: &TrustList) -> C2paOutcome {
    use ManifestConcern::*;

    let Some(segment) = &asset.manifest_segment else {
        return C2paOutcome::not_present(Vec::new());
    };
    let signed = match SignedManifest::from_segment(segment) {
        Ok(s) => s,
        Err(_) => return C2paOutcome::not_present(vec![Malformed, BadSignature]),
    };
    match trust.lookup(&signed.certificate_id) {
        TrustLookup::Unknown => {
            let rebound = trust.records().any(|r| signed.verify_with(&r.public_key));
            let mut concerns = vec![UntrustedSigner];
            if rebound {
                concerns.push(BadSignature);
            }
            C2paOutcome::not_present(concerns)
        }
        TrustLookup::Revoked(record) => {
            let mut concerns = vec![Revoked];
            if !signed.verify_with(&record.public_key) {
                concerns.push(BadSignature);
            }
            C2paOutcome::not_present(concerns)
        }
        TrustLookup::Trusted(record) => {
            if !signed.verify_with(&record.public_key) {
                return C2paOutcome::not_present(vec![BadSignature]);
            }
            let status = if signed.manifest.content_hash == hard_hash(&asset.image) {
                C2paStatus::PresentHashMatch(signed)
            } else {
                C2paStatus::PresentHashNoMatch(signed)
            };
            C2paOutcome { status, concerns: Vec::new() }
        }
    }
}
