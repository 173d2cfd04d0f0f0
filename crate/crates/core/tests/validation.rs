mod common;

use common::{all_triples, synthesize};
use mediaseal::fingerprint::Algorithm;
use mediaseal::fixtures;
use mediaseal::manifest::{embed_manifest, sign_manifest, Manifest};
use mediaseal::media::{InsecureMetadata, MediaAsset};
use mediaseal::registry::{Registry, RegistryConfig};
use mediaseal::trust::{CertificateRecord, SecurityLevel, TrustList};
use mediaseal::validation::{
    check_fingerprint, decide, outcome_table, validate, Confidence, DisplaySource, FingerprintOutcome, ResultState,
    ValidationContext, ValidationMode, ValidationReport,
};
use mediaseal::watermark::{WatermarkKey, WatermarkMode};

#[test]
fn every_table_row_is_reproduced_end_to_end() {
    for row in outcome_table() {
        let s = synthesize(row.triple(), u64::from(row.row));
        let report = validate(&s.asset, &s.context(), ValidationMode::Full);
        let (c, w, f) = report.triple();
        assert_eq!((c, w, f), (row.c2pa, Some(row.watermark), Some(row.fingerprint)), "row {}", row.row);
        assert_eq!((report.result, report.confidence), (row.result, row.confidence), "row {}", row.row);
        assert_eq!(report.concerns, row.concerns, "row {}", row.row);
        assert_eq!(report.row, Some(row.row));
        assert!(!report.extra_tabular);
    }
}

#[test]
fn sweep_holds_report_invariants_and_short_circuit_agrees() {
    for (i, triple) in all_triples().into_iter().enumerate() {
        let s = synthesize(triple, 500 + i as u64);
        let full = validate(&s.asset, &s.context(), ValidationMode::Full);
        let expected = decide(triple);
        assert_eq!(
            (full.result, full.confidence, full.extra_tabular),
            (expected.result, expected.confidence, expected.extra_tabular)
        );

        let short = validate(&s.asset, &s.context(), ValidationMode::ShortCircuit);
        if short.fingerprint.is_none() {
            assert_eq!((short.result, short.confidence), (full.result, full.confidence), "{triple:?}");
        } else {
            assert_eq!(short, ValidationReport { mode: ValidationMode::ShortCircuit, ..full.clone() });
        }

        for r in [&full, &short] {
            assert!(r.display.is_none() || r.confidence == Confidence::High);
            if r.result == ResultState::MediaValidates {
                assert_eq!(r.confidence, Confidence::High);
                assert_eq!(r.c2pa.status, mediaseal::validation::C2paClass::PresentHashMatch);
            }
            if r.result == ResultState::PossibleMatch {
                assert!(r.needs_human_review);
            }
            if r.confidence == Confidence::High {
                assert!(r.display.is_some(), "{triple:?}");
            }
        }
    }
}

#[test]
fn short_circuit_skips_later_stages() {
    use mediaseal::validation::{C2paClass as C, FingerprintClass as F, OutcomeTriple, WatermarkClass as W};
    let s = synthesize(
        OutcomeTriple { c2pa: C::PresentHashMatch, watermark: W::DetectableMatch, fingerprint: F::ValidMatch },
        7,
    );
    let r = validate(&s.asset, &s.context(), ValidationMode::ShortCircuit);
    assert_eq!((r.result, r.confidence), (ResultState::MediaValidates, Confidence::High));
    assert!(r.watermark.is_none() && r.fingerprint.is_none());
    assert_eq!(r.display.as_ref().unwrap().source, DisplaySource::EmbeddedManifest);
    assert_eq!(r.display.as_ref().unwrap().assertions, vec!["camera-captured".to_string()]);

    let s =
        synthesize(OutcomeTriple { c2pa: C::NotPresent, watermark: W::DetectableMatch, fingerprint: F::Invalid }, 8);
    let r = validate(&s.asset, &s.context(), ValidationMode::ShortCircuit);
    assert_eq!((r.result, r.confidence), (ResultState::Match, Confidence::High));
    assert!(r.watermark.is_some() && r.fingerprint.is_none());
    let display = r.display.unwrap();
    assert_eq!(display.source, DisplaySource::Registry);
    assert_eq!(display.assertions, vec!["registered".to_string()]);
}

#[test]
fn replacement_attack_row_displays_registry_manifest() {
    let row = &outcome_table()[27];
    assert_eq!(row.row, 28);
    let s = synthesize(row.triple(), 28);
    let r = validate(&s.asset, &s.context(), ValidationMode::Full);
    assert_eq!(r.concerns, vec!["C2PA replacement attack".to_string()]);
    assert_eq!(r.display.unwrap().source, DisplaySource::Registry);
}

#[test]
fn insecure_metadata_never_changes_a_report() {
    for (i, triple) in all_triples().into_iter().enumerate().step_by(4) {
        let mut s = synthesize(triple, 900 + i as u64);
        let before = validate(&s.asset, &s.context(), ValidationMode::Full);
        let mut meta = InsecureMetadata::new();
        meta.insert("capture_time", "1999-01-01T00:00:00Z");
        meta.insert("signer", "Somebody Else");
        s.asset = s.asset.clone().with_metadata(meta);
        let after = validate(&s.asset, &s.context(), ValidationMode::Full);
        assert_eq!(before, after);
        assert!(!after.to_canonical_json().contains("1999-01-01"));
    }
}

#[test]
fn low_security_signer_gets_a_caveat() {
    let key = ed25519_dalek::SigningKey::from_bytes(&[3; 32]);
    let trust = TrustList::new()
        .add(CertificateRecord::new("phone", key.verifying_key().to_bytes(), "Phone", SecurityLevel::DeviceLow))
        .unwrap();
    let asset = MediaAsset::new(fixtures::natural_image(64, 64, 3, 1));
    // declared higher than the certificate allows; the certificate wins
    let m = Manifest::for_image(&asset.image, "Phone", SecurityLevel::DeviceSecure, 1);
    let asset = embed_manifest(&asset, &sign_manifest(m, &key, "phone", &trust).unwrap()).unwrap();
    let registry = Registry::in_memory(RegistryConfig::default());
    let wm = WatermarkKey::from_seed(1, WatermarkMode::Robust);
    let r = validate(&asset, &ValidationContext::new(&trust, &wm, &registry), ValidationMode::ShortCircuit);
    assert_eq!(r.result, ResultState::MediaValidates);
    let d = r.display.unwrap();
    assert_eq!(d.security_level, SecurityLevel::DeviceLow);
    assert!(d.low_security_caveat);
    assert!(r.notes.iter().any(|n| n.contains("low security")));
}

#[test]
fn tiny_images_have_no_valid_fingerprint() {
    let asset = MediaAsset::new(fixtures::natural_image(7, 30, 1, 2));
    let registry = Registry::in_memory(RegistryConfig::default());
    assert_eq!(check_fingerprint(&asset, &registry, Algorithm::BlockMean, 10), FingerprintOutcome::Invalid);
}

#[test]
fn report_json_uses_table_strings() {
    let row = &outcome_table()[21];
    assert_eq!(row.row, 22);
    let s = synthesize(row.triple(), 22);
    let json = validate(&s.asset, &s.context(), ValidationMode::Full).to_canonical_json();
    assert!(json.contains(r#""confidence":"Cannot Be Asserted""#), "{json}");
    assert!(json.contains(r#""result":"Indeterminate""#));
    assert!(json.contains(r#""display":null"#));
}
