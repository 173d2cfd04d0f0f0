//! Manifest store: entries keyed by content hash, with watermark-id and
//! fingerprint indexes, backed by an append-only log of canonical JSON
//! lines.
//!
//! Writes go through a single writer lock and are fsynced before they are
//! acknowledged. Readers clone an `Arc` of the current snapshot and never
//! block on the log. On open the log is replayed; an unterminated last line
//! is a torn write from a crash and is cut off.

mod limiter;

pub use limiter::SlidingWindowLimiter;

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::fingerprint::{hamming_distance, Fingerprint};
use crate::manifest::SignedManifest;
use crate::Digest;

pub const LOG_FILE: &str = "registry.log";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("watermark id {id} is already bound to {existing}")]
    DuplicateWatermarkId { id: u64, existing: Digest },
    #[error("invalid entry: {0}")]
    InvariantViolation(String),
    #[error("corrupt registry log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Thumbnail: 8x8 luma block, serialized as 128 hex digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thumbnail(#[serde(with = "crate::hexfmt")] pub [u8; 64]);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryEntry {
    pub content_hash: Digest,
    pub signed_manifest: SignedManifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watermark_id: Option<u64>,
    #[serde(default)]
    pub fingerprints: Vec<Fingerprint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail: Option<Thumbnail>,
    pub stored_at: u64,
}

impl RegistryEntry {
    pub fn new(signed_manifest: SignedManifest, stored_at: u64) -> Self {
        Self {
            content_hash: signed_manifest.manifest.content_hash,
            watermark_id: signed_manifest.manifest.watermark_id,
            signed_manifest,
            fingerprints: Vec::new(),
            thumbnail: None,
            stored_at,
        }
    }

    pub fn with_fingerprints(mut self, fingerprints: impl IntoIterator<Item = Fingerprint>) -> Self {
        self.fingerprints = fingerprints.into_iter().collect();
        self
    }

    pub fn with_watermark_id(mut self, id: Option<u64>) -> Self {
        self.watermark_id = id;
        self
    }

    pub fn with_thumbnail(mut self, thumbnail: Option<[u8; 64]>) -> Self {
        self.thumbnail = thumbnail.map(Thumbnail);
        self
    }

    fn check(&self) -> Result<(), RegistryError> {
        if self.signed_manifest.manifest.content_hash != self.content_hash {
            return Err(RegistryError::InvariantViolation("manifest content_hash differs from entry key".into()));
        }
        Ok(())
    }
}

/// One log line (without the trailing newline).
pub fn encode_record(entry: &RegistryEntry) -> Vec<u8> {
    canonical::to_vec(entry)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultMode {
    #[default]
    Normal,
    NoAccess,
    MissingManifest,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultInjection {
    pub manifest_lookup: FaultMode,
    pub watermark_lookup: FaultMode,
    pub fingerprint_lookup: FaultMode,
}

/// Wire form: `{"status": "found", "result": ...}`, `{"status": "missing"}`
/// or `{"status": "no_access"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "result", rename_all = "snake_case")]
pub enum Lookup<T> {
    Found(T),
    Missing,
    NoAccess,
}

impl<T> Lookup<T> {
    pub fn found(self) -> Option<T> {
        match self {
            Lookup::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Lookup::Found(_) => "found",
            Lookup::Missing => "missing",
            Lookup::NoAccess => "no_access",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub entry: RegistryEntry,
    pub distance: u32,
    pub needs_human_review: bool,
}

#[derive(Clone, Debug, Default)]
struct Snapshot {
    entries: BTreeMap<Digest, RegistryEntry>,
    by_watermark: HashMap<u64, Digest>,
}

impl Snapshot {
    fn check(&self, entry: &RegistryEntry) -> Result<(), RegistryError> {
        entry.check()?;
        if let Some(id) = entry.watermark_id {
            if let Some(&existing) = self.by_watermark.get(&id) {
                if existing != entry.content_hash {
                    return Err(RegistryError::DuplicateWatermarkId { id, existing });
                }
            }
        }
        Ok(())
    }

    /// Upsert; the caller has already run [`check`](Self::check).
    fn apply(&mut self, entry: RegistryEntry) {
        if let Some(old) = self.entries.get(&entry.content_hash) {
            if let Some(id) = old.watermark_id {
                self.by_watermark.remove(&id);
            }
        }
        if let Some(id) = entry.watermark_id {
            self.by_watermark.insert(id, entry.content_hash);
        }
        self.entries.insert(entry.content_hash, entry);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegistryConfig {
    /// When false, thumbnails are dropped before storing.
    pub store_thumbnails: bool,
}

impl Default for RegistryConfig {
    fn default() -> Self {
        Self { store_thumbnails: true }
    }
}

/// The read side validation needs; a local [`Registry`] or a remote client.
pub trait RegistryLookup {
    fn lookup_by_hash(&self, hash: &Digest) -> Lookup<RegistryEntry>;
    fn lookup_by_watermark(&self, id: u64) -> Lookup<RegistryEntry>;
    fn lookup_by_fingerprint(&self, fingerprint: Fingerprint, tau: u32) -> Lookup<Vec<Candidate>>;
}

impl RegistryLookup for Registry {
    fn lookup_by_hash(&self, hash: &Digest) -> Lookup<RegistryEntry> {
        Registry::lookup_by_hash(self, hash)
    }

    fn lookup_by_watermark(&self, id: u64) -> Lookup<RegistryEntry> {
        Registry::lookup_by_watermark(self, id)
    }

    fn lookup_by_fingerprint(&self, fingerprint: Fingerprint, tau: u32) -> Lookup<Vec<Candidate>> {
        Registry::lookup_by_fingerprint(self, fingerprint, tau)
    }
}

pub struct Registry {
    snapshot: RwLock<Arc<Snapshot>>,
    writer: Mutex<Option<File>>,
    faults: RwLock<FaultInjection>,
    config: RegistryConfig,
    path: Option<PathBuf>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry").field("path", &self.path).field("entries", &self.len()).finish()
    }
}

impl Registry {
    /// A registry that lives only in memory.
    pub fn in_memory(config: RegistryConfig) -> Self {
        Self {
            snapshot: RwLock::new(Arc::default()),
            writer: Mutex::new(None),
            faults: RwLock::default(),
            config,
            path: None,
        }
    }

    /// Opens (creating if needed) `dir/registry.log` and replays it.
    pub fn open(dir: &Path, config: RegistryConfig) -> Result<Self, RegistryError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut snapshot = Snapshot::default();
        let mut good_len = 0u64;
        {
            let mut reader = BufReader::new(&mut file);
            let mut line = Vec::new();
            let mut number = 0;
            loop {
                line.clear();
                let n = reader.read_until(b'\n', &mut line)?;
                if n == 0 || line.last() != Some(&b'\n') {
                    break; // EOF, or a torn final write
                }
                number += 1;
                let entry: RegistryEntry = serde_json::from_slice(&line[..n - 1])
                    .map_err(|e| RegistryError::CorruptLog { line: number, reason: e.to_string() })?;
                snapshot
                    .check(&entry)
                    .map_err(|e| RegistryError::CorruptLog { line: number, reason: e.to_string() })?;
                snapshot.apply(entry);
                good_len += n as u64;
            }
        }
        if file.metadata()?.len() != good_len {
            file.set_len(good_len)?;
            file.sync_all()?;
        }
        file.seek(io::SeekFrom::End(0))?;
        Ok(Self {
            snapshot: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(Some(file)),
            faults: RwLock::default(),
            config,
            path: Some(path),
        })
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn current(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    pub fn len(&self) -> usize {
        self.current().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<RegistryEntry> {
        self.current().entries.values().cloned().collect()
    }

    /// Persists `entry` (replacing any entry with the same content hash) and
    /// updates all indexes in one step. Returns once the record is on disk.
    pub fn store_entry(&self, mut entry: RegistryEntry) -> Result<(), RegistryError> {
        if !self.config.store_thumbnails {
            entry.thumbnail = None;
        }
        let mut writer = self.writer.lock().expect("writer lock");
        self.current().check(&entry)?;
        if let Some(file) = writer.as_mut() {
            let mut record = encode_record(&entry);
            record.push(b'\n');
            file.write_all(&record)?;
            file.sync_data()?;
        }
        let mut guard = self.snapshot.write().expect("snapshot lock");
        Arc::make_mut(&mut guard).apply(entry);
        Ok(())
    }

    pub fn faults(&self) -> FaultInjection {
        *self.faults.read().expect("fault lock")
    }

    pub fn set_faults(&self, faults: FaultInjection) {
        *self.faults.write().expect("fault lock") = faults;
    }

    pub fn lookup_by_hash(&self, hash: &Digest) -> Lookup<RegistryEntry> {
        match self.faults().manifest_lookup {
            FaultMode::NoAccess => Lookup::NoAccess,
            FaultMode::MissingManifest => Lookup::Missing,
            FaultMode::Normal => self.current().entries.get(hash).cloned().map_or(Lookup::Missing, Lookup::Found),
        }
    }

    pub fn lookup_by_watermark(&self, id: u64) -> Lookup<RegistryEntry> {
        let mode = self.faults().watermark_lookup;
        if mode == FaultMode::NoAccess {
            return Lookup::NoAccess;
        }
        let snapshot = self.current();
        match snapshot.by_watermark.get(&id).and_then(|h| snapshot.entries.get(h)) {
            Some(entry) if mode == FaultMode::Normal => Lookup::Found(entry.clone()),
            _ => Lookup::Missing,
        }
    }

    /// All entries holding a same-algorithm fingerprint within `tau`, closest
    /// first, earlier `stored_at` first on ties. `Found(vec![])` means no
    /// candidate.
    pub fn lookup_by_fingerprint(&self, fingerprint: Fingerprint, tau: u32) -> Lookup<Vec<Candidate>> {
        let mode = self.faults().fingerprint_lookup;
        if mode == FaultMode::NoAccess {
            return Lookup::NoAccess;
        }
        let snapshot = self.current();
        let mut found: Vec<Candidate> = snapshot
            .entries
            .values()
            .filter_map(|entry| {
                let distance =
                    entry.fingerprints.iter().filter_map(|f| hamming_distance(*f, fingerprint).ok()).min()?;
                (distance <= tau).then(|| Candidate { entry: entry.clone(), distance, needs_human_review: true })
            })
            .collect();
        found.sort_by_key(|c| (c.distance, c.entry.stored_at, c.entry.content_hash));
        match mode {
            FaultMode::MissingManifest if !found.is_empty() => Lookup::Missing,
            _ => Lookup::Found(found),
        }
    }

    /// True when any stored entry carries at least one fingerprint of this
    /// algorithm (a fingerprint database to check against exists).
    pub fn has_fingerprints(&self, algorithm: crate::fingerprint::Algorithm) -> bool {
        self.current().entries.values().any(|e| e.fingerprints.iter().any(|f| f.algorithm == algorithm))
    }
}
