//! Where registry lookups and stores go: a local log directory or a running
//! registry server.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use mediaseal::canonical;
use mediaseal::fingerprint::Fingerprint;
use mediaseal::registry::{Candidate, FaultInjection, Lookup, Registry, RegistryEntry, RegistryLookup};
use mediaseal::trust::TrustList;
use mediaseal::Digest;

use crate::error::CliError;

pub struct RemoteRegistry {
    base: String,
    agent: ureq::Agent,
    token: Option<String>,
}

#[derive(Serialize)]
struct FingerprintQuery {
    fingerprint: Fingerprint,
    tau: u32,
}

impl RemoteRegistry {
    pub fn new(base: &str, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(10)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { base: base.trim_end_matches('/').to_owned(), agent, token }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// Status and body, or `None` when the server could not be reached.
    fn get(&self, path: &str) -> Option<(u16, String)> {
        let mut res = self.agent.get(self.url(path)).call().ok()?;
        let status = res.status().as_u16();
        Some((status, res.body_mut().read_to_string().ok()?))
    }

    fn post(&self, path: &str, body: String) -> Result<(u16, String), CliError> {
        let mut req = self.agent.post(self.url(path)).header("content-type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("authorization", format!("Bearer {token}"));
        }
        let mut res = req.send(body).map_err(|e| CliError::io(&self.base, e))?;
        let status = res.status().as_u16();
        let text = res.body_mut().read_to_string().map_err(|e| CliError::io(&self.base, e))?;
        Ok((status, text))
    }

    fn lookup<T: DeserializeOwned>(&self, answer: Option<(u16, String)>) -> Lookup<T> {
        match answer {
            Some((200, body)) => serde_json::from_str(&body).unwrap_or(Lookup::NoAccess),
            _ => Lookup::NoAccess,
        }
    }

    fn internal(&self, path: &str, body: String) -> Result<String, CliError> {
        match self.post(path, body)? {
            (200 | 201, text) => Ok(text),
            (401, _) => Err(CliError::Usage("registry refused the request: set MEDIASEAL_AUTH_TOKEN".into())),
            (409 | 422, text) => Err(CliError::Validation(server_message(&text))),
            (status, text) => Err(CliError::Io(format!("registry answered {status}: {}", server_message(&text)))),
        }
    }

    pub fn store(&self, entry: &RegistryEntry) -> Result<(), CliError> {
        self.internal("/entries", canonical::to_string(entry)).map(drop)
    }

    pub fn set_faults(&self, faults: FaultInjection) -> Result<(), CliError> {
        self.internal("/faults", canonical::to_string(&faults)).map(drop)
    }

    pub fn trust_list(&self) -> Result<TrustList, CliError> {
        match self.get("/trustlist") {
            Some((200, body)) => Ok(TrustList::from_bytes(body.as_bytes())?),
            Some((status, _)) => Err(CliError::Io(format!("registry answered {status} for the trust list"))),
            None => Err(CliError::Io(format!("cannot reach registry at {}", self.base))),
        }
    }
}

fn server_message(text: &str) -> String {
    serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_owned))
        .unwrap_or_else(|| text.to_owned())
}

/// Network failures and unexpected answers read as `no_access`, the same
/// outcome a timed-out registry produces.
impl RegistryLookup for RemoteRegistry {
    fn lookup_by_hash(&self, hash: &Digest) -> Lookup<RegistryEntry> {
        self.lookup(self.get(&format!("/entries/by-hash/{hash}")))
    }

    fn lookup_by_watermark(&self, id: u64) -> Lookup<RegistryEntry> {
        self.lookup(self.get(&format!("/entries/by-watermark/{id}")))
    }

    fn lookup_by_fingerprint(&self, fingerprint: Fingerprint, tau: u32) -> Lookup<Vec<Candidate>> {
        let body = canonical::to_string(&FingerprintQuery { fingerprint, tau });
        let mut res = match self.agent.post(self.url("/entries/by-fingerprint")).send(body) {
            Ok(res) => res,
            Err(_) => return Lookup::NoAccess,
        };
        let status = res.status().as_u16();
        self.lookup(res.body_mut().read_to_string().ok().map(|b| (status, b)))
    }
}

pub enum Backend {
    Local(Registry),
    Remote(RemoteRegistry),
}

impl Backend {
    pub fn store(&self, entry: RegistryEntry) -> Result<(), CliError> {
        match self {
            Self::Local(r) => Ok(r.store_entry(entry)?),
            Self::Remote(r) => r.store(&entry),
        }
    }

    fn inner(&self) -> &dyn RegistryLookup {
        match self {
            Self::Local(r) => r,
            Self::Remote(r) => r,
        }
    }
}

impl RegistryLookup for Backend {
    fn lookup_by_hash(&self, hash: &Digest) -> Lookup<RegistryEntry> {
        self.inner().lookup_by_hash(hash)
    }

    fn lookup_by_watermark(&self, id: u64) -> Lookup<RegistryEntry> {
        self.inner().lookup_by_watermark(id)
    }

    fn lookup_by_fingerprint(&self, fingerprint: Fingerprint, tau: u32) -> Lookup<Vec<Candidate>> {
        self.inner().lookup_by_fingerprint(fingerprint, tau)
    }
}
