//! HTTP front end for the manifest registry.
//!
//! Public routes answer lookups, serve the trust list and run the
//! rate-limited binary watermark detector. Routes that write, inject faults
//! or expose detector confidence need `Authorization: Bearer <token>`.

#![allow(clippy::result_large_err)] // handlers return axum `Response` as the error

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use mediaseal::canonical;
use mediaseal::fingerprint::Fingerprint;
use mediaseal::media::MediaAsset;
use mediaseal::registry::{
    FaultInjection, Registry, RegistryConfig, RegistryEntry, RegistryError, SlidingWindowLimiter,
};
use mediaseal::trust::TrustList;
use mediaseal::watermark::{decode_watermark, WatermarkKey};
use mediaseal::Digest;

pub const CLIENT_ID_HEADER: &str = "x-client-id";

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    pub trust_list: Option<PathBuf>,
    pub rate_limit: u32,
    pub rate_window_secs: u64,
    /// Required for internal routes; without it they always answer 401.
    pub auth_token: Option<String>,
    /// Needed by the detection routes; without it they answer 503.
    pub watermark_key: Option<WatermarkKey>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            port: 8700,
            data_dir: PathBuf::from("registry-data"),
            trust_list: None,
            rate_limit: 10,
            rate_window_secs: 60,
            auth_token: None,
            watermark_key: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot open registry: {0}")]
    Registry(#[from] RegistryError),
    #[error("cannot read trust list {path}: {reason}")]
    TrustList { path: PathBuf, reason: String },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    pub registry: Registry,
    pub trust: RwLock<TrustList>,
    limiter: SlidingWindowLimiter,
    auth_token: Option<String>,
    watermark_key: Option<WatermarkKey>,
    started: Instant,
}

impl AppState {
    pub fn new(registry: Registry, trust: TrustList, config: &ServerConfig) -> Self {
        Self {
            registry,
            trust: RwLock::new(trust),
            limiter: SlidingWindowLimiter::new(config.rate_limit, config.rate_window_secs.saturating_mul(1000)),
            auth_token: config.auth_token.clone(),
            watermark_key: config.watermark_key.clone(),
            started: Instant::now(),
        }
    }

    /// Opens the on-disk registry and trust list named in `config`.
    pub fn open(config: &ServerConfig) -> Result<Self, ServerError> {
        std::fs::create_dir_all(&config.data_dir)?;
        let registry = Registry::open(&config.data_dir, RegistryConfig::default())?;
        let trust = match &config.trust_list {
            None => TrustList::new(),
            Some(path) => {
                let err = |reason: String| ServerError::TrustList { path: path.clone(), reason };
                let bytes = std::fs::read(path).map_err(|e| err(e.to_string()))?;
                TrustList::from_bytes(&bytes).map_err(|e| err(e.to_string()))?
            }
        };
        Ok(Self::new(registry, trust, config))
    }

    fn now_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/entries", post(store_entry))
        .route("/entries/by-hash/{hex}", get(by_hash))
        .route("/entries/by-watermark/{id}", get(by_watermark))
        .route("/entries/by-fingerprint", post(by_fingerprint))
        .route("/trustlist", get(trust_list))
        .route("/detect", post(detect))
        .route("/internal/detect", post(internal_detect))
        .route("/faults", post(set_faults))
        .with_state(state)
}

pub async fn serve(config: ServerConfig) -> Result<(), ServerError> {
    let state = Arc::new(AppState::open(&config)?);
    let addr = SocketAddr::from(([127, 0, 0, 1], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServerError::Bind { addr, source })?;
    eprintln!("registry listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn json<T: Serialize + ?Sized>(status: StatusCode, body: &T) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], canonical::to_string(body)).into_response()
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
}

fn error(status: StatusCode, message: &str) -> Response {
    json(status, &ErrorBody { error: message })
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, Response> {
    serde_json::from_slice(body).map_err(|e| error(StatusCode::BAD_REQUEST, &e.to_string()))
}

fn authorize(state: &AppState, headers: &HeaderMap) -> Result<(), Response> {
    let presented =
        headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer "));
    match (&state.auth_token, presented) {
        (Some(expected), Some(got)) if constant_time_eq(expected.as_bytes(), got.as_bytes()) => Ok(()),
        _ => Err(error(StatusCode::UNAUTHORIZED, "missing or wrong bearer token")),
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[derive(Serialize)]
struct Stored {
    content_hash: Digest,
}

async fn store_entry(State(state): State<Arc<AppState>>, headers: HeaderMap, body: axum::body::Bytes) -> Response {
    if let Err(r) = authorize(&state, &headers) {
        return r;
    }
    let entry: RegistryEntry = match parse_body(&body) {
        Ok(e) => e,
        Err(r) => return r,
    };
    let content_hash = entry.content_hash;
    let result = {
        let state = state.clone();
        tokio::task::spawn_blocking(move || state.registry.store_entry(entry)).await
    };
    match result {
        Ok(Ok(())) => json(StatusCode::CREATED, &Stored { content_hash }),
        Ok(Err(e @ RegistryError::DuplicateWatermarkId { .. })) => error(StatusCode::CONFLICT, &e.to_string()),
        Ok(Err(e @ RegistryError::InvariantViolation(_))) => error(StatusCode::UNPROCESSABLE_ENTITY, &e.to_string()),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

async fn by_hash(State(state): State<Arc<AppState>>, Path(hex): Path<String>) -> Response {
    match hex.parse::<Digest>() {
        Ok(hash) => json(StatusCode::OK, &state.registry.lookup_by_hash(&hash)),
        Err(_) => error(StatusCode::BAD_REQUEST, "content hash must be 64 hex digits"),
    }
}

async fn by_watermark(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> Response {
    json(StatusCode::OK, &state.registry.lookup_by_watermark(id))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprintQuery {
    pub fingerprint: Fingerprint,
    pub tau: u32,
}

async fn by_fingerprint(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> Response {
    match parse_body::<FingerprintQuery>(&body) {
        Ok(q) if q.tau <= 64 => json(StatusCode::OK, &state.registry.lookup_by_fingerprint(q.fingerprint, q.tau)),
        Ok(_) => error(StatusCode::BAD_REQUEST, "tau must be at most 64"),
        Err(r) => r,
    }
}

async fn trust_list(State(state): State<Arc<AppState>>) -> Response {
    let bytes = state.trust.read().expect("trust lock").to_bytes();
    (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectRequest {
    /// MIAC bytes, standard base64.
    pub asset: String,
}

#[derive(Serialize)]
struct PublicDetection {
    watermark: &'static str,
}

fn decode_asset(state: &AppState, body: &[u8]) -> Result<(WatermarkKey, MediaAsset), Response> {
    let key = state
        .watermark_key
        .clone()
        .ok_or_else(|| error(StatusCode::SERVICE_UNAVAILABLE, "no watermark key configured"))?;
    let req: DetectRequest = parse_body(body)?;
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(req.asset.as_bytes())
        .map_err(|e| error(StatusCode::BAD_REQUEST, &format!("asset is not base64: {e}")))?;
    let asset = MediaAsset::from_bytes(&bytes).map_err(|e| error(StatusCode::BAD_REQUEST, &e.to_string()))?;
    Ok((key, asset))
}

/// Binary answer only: no payload, no agreement score.
async fn detect(State(state): State<Arc<AppState>>, headers: HeaderMap, body: axum::body::Bytes) -> Response {
    let client = headers.get(CLIENT_ID_HEADER).and_then(|v| v.to_str().ok()).unwrap_or("anonymous");
    if !state.limiter.try_acquire(client, state.now_ms()) {
        return error(StatusCode::TOO_MANY_REQUESTS, "rate limit exceeded");
    }
    let (key, asset) = match decode_asset(&state, &body) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let detected =
        tokio::task::spawn_blocking(move || decode_watermark(&asset.image, &key).is_detected()).await.unwrap_or(false);
    json(StatusCode::OK, &PublicDetection { watermark: if detected { "detected" } else { "undetectable" } })
}

async fn internal_detect(State(state): State<Arc<AppState>>, headers: HeaderMap, body: axum::body::Bytes) -> Response {
    if let Err(r) = authorize(&state, &headers) {
        return r;
    }
    let (key, asset) = match decode_asset(&state, &body) {
        Ok(v) => v,
        Err(r) => return r,
    };
    match tokio::task::spawn_blocking(move || decode_watermark(&asset.image, &key)).await {
        Ok(result) => json(StatusCode::OK, &result),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

async fn set_faults(State(state): State<Arc<AppState>>, headers: HeaderMap, body: axum::body::Bytes) -> Response {
    if let Err(r) = authorize(&state, &headers) {
        return r;
    }
    match parse_body::<FaultInjection>(&body) {
        Ok(faults) => {
            state.registry.set_faults(faults);
            json(StatusCode::OK, &faults)
        }
        Err(r) => r,
    }
}
