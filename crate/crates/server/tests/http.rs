use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use base64::Engine as _;
use http_body_util::BodyExt;
use tower::ServiceExt;

use mediaseal::fingerprint::{compute_fingerprint, Algorithm};
use mediaseal::fixtures;
use mediaseal::manifest::{sign_manifest, Manifest};
use mediaseal::media::MediaAsset;
use mediaseal::registry::{FaultInjection, FaultMode, Lookup, Registry, RegistryConfig, RegistryEntry};
use mediaseal::trust::{CertificateRecord, SecurityLevel, TrustList};
use mediaseal::watermark::{embed_watermark, DetectionResult, WatermarkKey, WatermarkMode, WatermarkPayload};
use mediaseal_server::{router, AppState, ServerConfig};

const TOKEN: &str = "s3cret";

fn key() -> WatermarkKey {
    WatermarkKey::from_seed(5, WatermarkMode::Robust)
}

fn app() -> (axum::Router, Arc<AppState>) {
    let config = ServerConfig { auth_token: Some(TOKEN.into()), watermark_key: Some(key()), ..Default::default() };
    let state = Arc::new(AppState::new(Registry::in_memory(RegistryConfig::default()), TrustList::new(), &config));
    (router(state.clone()), state)
}

fn entry(seed: u64, watermark: Option<u64>) -> RegistryEntry {
    let signer = ed25519_dalek::SigningKey::from_bytes(&[2; 32]);
    let trust = TrustList::new()
        .add(CertificateRecord::new("c", signer.verifying_key().to_bytes(), "C", SecurityLevel::CloudHigh))
        .unwrap();
    let image = fixtures::natural_image(32, 32, 1, seed);
    let mut m = Manifest::for_image(&image, "C", SecurityLevel::CloudHigh, 1);
    m.watermark_id = watermark;
    RegistryEntry::new(sign_manifest(m, &signer, "c", &trust).unwrap(), 2).with_fingerprints([compute_fingerprint(
        &image,
        Algorithm::BlockMean,
    )
    .unwrap()])
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, String) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let body = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(body.to_vec()).unwrap())
}

fn post(uri: &str, body: String, token: Option<&str>) -> Request<Body> {
    let mut b = Request::post(uri).header(header::CONTENT_TYPE, "application/json");
    if let Some(t) = token {
        b = b.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    b.body(Body::from(body)).unwrap()
}

fn detect_body(marked: bool) -> String {
    let mut image = fixtures::natural_image(96, 96, 3, 1);
    if marked {
        image = embed_watermark(&image, WatermarkPayload::new(4242), &key()).unwrap();
    }
    let b64 = base64::engine::general_purpose::STANDARD.encode(MediaAsset::new(image).to_bytes());
    format!(r#"{{"asset":"{b64}"}}"#)
}

#[tokio::test]
async fn store_requires_the_token_and_lookups_are_public() {
    let (app, _) = app();
    let e = entry(1, Some(7));
    let body = serde_json::to_string(&e).unwrap();
    assert_eq!(call(&app, post("/entries", body.clone(), None)).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&app, post("/entries", body.clone(), Some("wrong"))).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&app, post("/entries", body, Some(TOKEN))).await.0, StatusCode::CREATED);

    let (status, text) =
        call(&app, Request::get(format!("/entries/by-hash/{}", e.content_hash)).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_str::<Lookup<RegistryEntry>>(&text).unwrap(), Lookup::Found(e.clone()));

    let (_, text) = call(&app, Request::get("/entries/by-watermark/7").body(Body::empty()).unwrap()).await;
    assert_eq!(serde_json::from_str::<Lookup<RegistryEntry>>(&text).unwrap(), Lookup::Found(e.clone()));
    let (_, text) = call(&app, Request::get("/entries/by-watermark/8").body(Body::empty()).unwrap()).await;
    assert_eq!(text, r#"{"status":"missing"}"#);

    let q = format!(r#"{{"fingerprint":"{}","tau":10}}"#, e.fingerprints[0]);
    let (_, text) = call(&app, post("/entries/by-fingerprint", q, None)).await;
    let found = serde_json::from_str::<Lookup<Vec<mediaseal::registry::Candidate>>>(&text).unwrap().found().unwrap();
    assert_eq!(found.len(), 1);
    assert!(found[0].needs_human_review);

    let clash = entry(2, Some(7));
    let (status, _) = call(&app, post("/entries", serde_json::to_string(&clash).unwrap(), Some(TOKEN))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn public_detect_is_binary_and_rate_limited() {
    let (app, _) = app();
    let req = |body: String, client: &str| {
        Request::post("/detect").header("x-client-id", client.to_string()).body(Body::from(body)).unwrap()
    };
    let (status, text) = call(&app, req(detect_body(true), "alice")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text, r#"{"watermark":"detected"}"#);
    let (_, text) = call(&app, req(detect_body(false), "alice")).await;
    assert_eq!(text, r#"{"watermark":"undetectable"}"#);
    for _ in 2..10 {
        assert_eq!(call(&app, req("{}".into(), "alice")).await.0, StatusCode::BAD_REQUEST);
    }
    // eleventh request inside the window
    assert_eq!(call(&app, req(detect_body(true), "alice")).await.0, StatusCode::TOO_MANY_REQUESTS);
    assert_eq!(call(&app, req(detect_body(true), "bob")).await.0, StatusCode::OK);
}

#[tokio::test]
async fn internal_detect_reports_agreement() {
    let (app, _) = app();
    assert_eq!(call(&app, post("/internal/detect", detect_body(true), None)).await.0, StatusCode::UNAUTHORIZED);
    let (status, text) = call(&app, post("/internal/detect", detect_body(true), Some(TOKEN))).await;
    assert_eq!(status, StatusCode::OK);
    let r: DetectionResult = serde_json::from_str(&text).unwrap();
    assert_eq!(r.payload().unwrap().id(), 4242);
    assert!(r.raw_bit_agreement > 0.75, "{}", r.raw_bit_agreement);
}

#[tokio::test]
async fn faults_switch_lookup_outcomes() {
    let (app, state) = app();
    state.registry.store_entry(entry(3, Some(9))).unwrap();
    let faults = FaultInjection { watermark_lookup: FaultMode::NoAccess, ..Default::default() };
    let body = serde_json::to_string(&faults).unwrap();
    assert_eq!(call(&app, post("/faults", body.clone(), None)).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&app, post("/faults", body, Some(TOKEN))).await.0, StatusCode::OK);
    let (_, text) = call(&app, Request::get("/entries/by-watermark/9").body(Body::empty()).unwrap()).await;
    assert_eq!(text, r#"{"status":"no_access"}"#);
    assert_eq!(state.registry.len(), 1);
}

#[tokio::test]
async fn trust_list_and_bad_input() {
    let (app, _) = app();
    let (status, text) = call(&app, Request::get("/trustlist").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text, r#"{"records":[],"version":0}"#);
    let (status, _) = call(&app, Request::get("/entries/by-hash/zz").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn detect_without_a_key_is_unavailable() {
    let config = ServerConfig::default();
    let state = Arc::new(AppState::new(Registry::in_memory(RegistryConfig::default()), TrustList::new(), &config));
    let (status, _) = call(&router(state), post("/detect", detect_body(true), None)).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[test]
fn open_persists_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServerConfig { data_dir: dir.path().to_path_buf(), ..Default::default() };
    let e = entry(4, None);
    AppState::open(&config).unwrap().registry.store_entry(e.clone()).unwrap();
    let reopened = AppState::open(&config).unwrap();
    assert_eq!(reopened.registry.lookup_by_hash(&e.content_hash), Lookup::Found(e));
}
