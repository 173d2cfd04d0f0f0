//! Trusted-signer list: certificate records with security levels and
//! revocation, versioned so validators can tell when their copy is stale.

use std::collections::BTreeMap;

use ed25519_dalek::VerifyingKey;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;

/// Assurance of the environment a certificate signs from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecurityLevel {
    DeviceLow,
    DeviceSecure,
    CloudHigh,
}

impl SecurityLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DeviceLow => "device_low",
            Self::DeviceSecure => "device_secure",
            Self::CloudHigh => "cloud_high",
        }
    }
}

impl std::str::FromStr for SecurityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "device_low" => Ok(Self::DeviceLow),
            "device_secure" => Ok(Self::DeviceSecure),
            "cloud_high" => Ok(Self::CloudHigh),
            other => Err(format!("unknown security level {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateRecord {
    pub certificate_id: String,
    #[serde(with = "crate::hexfmt")]
    pub public_key: [u8; 32],
    pub owner_name: String,
    pub security_level: SecurityLevel,
    pub revoked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revoked_at: Option<u64>,
}

impl CertificateRecord {
    pub fn new(
        certificate_id: impl Into<String>,
        public_key: [u8; 32],
        owner_name: impl Into<String>,
        security_level: SecurityLevel,
    ) -> Self {
        Self {
            certificate_id: certificate_id.into(),
            public_key,
            owner_name: owner_name.into(),
            security_level,
            revoked: false,
            revoked_at: None,
        }
    }

    pub fn verifying_key(&self) -> Option<VerifyingKey> {
        VerifyingKey::from_bytes(&self.public_key).ok()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrustError {
    #[error("unknown certificate {0:?}")]
    UnknownCertificate(String),
    #[error("certificate {0:?} already present")]
    DuplicateCertificate(String),
    #[error("malformed trust list: {0}")]
    MalformedTrustList(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrustLookup<'a> {
    Trusted(&'a CertificateRecord),
    Revoked(&'a CertificateRecord),
    Unknown,
}

/// Immutable, versioned set of certificate records. Every mutation returns a
/// new list whose version is strictly greater.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrustList {
    version: u64,
    records: BTreeMap<String, CertificateRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrustListFile {
    version: u64,
    records: Vec<CertificateRecord>,
}

impl TrustList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &CertificateRecord> {
        self.records.values()
    }

    pub fn get(&self, certificate_id: &str) -> Option<&CertificateRecord> {
        self.records.get(certificate_id)
    }

    pub fn lookup(&self, certificate_id: &str) -> TrustLookup<'_> {
        match self.records.get(certificate_id) {
            None => TrustLookup::Unknown,
            Some(r) if r.revoked => TrustLookup::Revoked(r),
            Some(r) => TrustLookup::Trusted(r),
        }
    }

    pub fn add(&self, record: CertificateRecord) -> Result<TrustList, TrustError> {
        if self.records.contains_key(&record.certificate_id) {
            return Err(TrustError::DuplicateCertificate(record.certificate_id));
        }
        let mut next = self.clone();
        next.records.insert(record.certificate_id.clone(), record);
        next.version += 1;
        Ok(next)
    }

    /// Marks a certificate revoked as of `at`. Revoking an already revoked
    /// certificate keeps the original `revoked_at` but still bumps the version.
    pub fn revoke(&self, certificate_id: &str, at: u64) -> Result<TrustList, TrustError> {
        let mut next = self.clone();
        let record = next
            .records
            .get_mut(certificate_id)
            .ok_or_else(|| TrustError::UnknownCertificate(certificate_id.to_owned()))?;
        if !record.revoked {
            record.revoked = true;
            record.revoked_at = Some(at);
        }
        next.version += 1;
        Ok(next)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        save_trust_list(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TrustError> {
        load_trust_list(bytes)
    }
}

/// Canonical JSON `{"records":[...sorted by id...],"version":n}`.
pub fn save_trust_list(list: &TrustList) -> Vec<u8> {
    canonical::to_vec(&TrustListFile { version: list.version, records: list.records.values().cloned().collect() })
}

pub fn load_trust_list(bytes: &[u8]) -> Result<TrustList, TrustError> {
    let file: TrustListFile =
        serde_json::from_slice(bytes).map_err(|e| TrustError::MalformedTrustList(e.to_string()))?;
    let mut records = BTreeMap::new();
    for record in file.records {
        if record.revoked != record.revoked_at.is_some() {
            return Err(TrustError::MalformedTrustList(format!(
                "{}: revoked flag and revoked_at disagree",
                record.certificate_id
            )));
        }
        if record.verifying_key().is_none() {
            return Err(TrustError::MalformedTrustList(format!(
                "{}: public key is not a valid Ed25519 point",
                record.certificate_id
            )));
        }
        let id = record.certificate_id.clone();
        if records.insert(id.clone(), record).is_some() {
            return Err(TrustError::MalformedTrustList(format!("duplicate certificate id {id:?}")));
        }
    }
    Ok(TrustList { version: file.version, records })
}
