//! Human-readable output. JSON output never goes through here.

use std::fmt::Write as _;

use serde::Serialize;

use mediaseal::attack::{OracleAttackOutcome, ScenarioResult};
use mediaseal::fingerprint::{thumbnail, Fingerprint};
use mediaseal::media::MediaAsset;
use mediaseal::registry::{Candidate, Lookup};
use mediaseal::trust::TrustList;
use mediaseal::validation::{Confidence, FingerprintOutcome, ValidationReport, WatermarkOutcome};

/// The serde name of a unit-like value.
fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => "?".into(),
    }
}

fn list(out: &mut String, title: &str, items: &[String]) {
    if items.is_empty() {
        let _ = writeln!(out, "{title:<12} -");
        return;
    }
    let _ = writeln!(out, "{title}");
    for item in items {
        let _ = writeln!(out, "  - {item}");
    }
}

pub fn report(r: &ValidationReport, asset: &MediaAsset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {}", "Result", r.result.as_str());
    let _ = writeln!(out, "{:<12} {}", "Confidence", r.confidence.as_str());
    list(&mut out, "Concerns", &r.concerns);

    let c2pa = match r.c2pa.concerns.as_slice() {
        [] => label(&r.c2pa.status),
        concerns => format!(
            "{} ({})",
            label(&r.c2pa.status),
            concerns.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ")
        ),
    };
    let _ = writeln!(out, "{:<12} {c2pa}", "C2PA");
    let watermark = match r.watermark {
        None => "skipped".to_owned(),
        Some(WatermarkOutcome::Detectable { watermark_id, registry_hash }) => {
            format!("detectable, id {watermark_id}, registry hash {}", label(&registry_hash))
        }
        Some(other) => label(&other.class()),
    };
    let _ = writeln!(out, "{:<12} {watermark}", "Watermark");
    let fingerprint = match r.fingerprint {
        None => "skipped".to_owned(),
        Some(FingerprintOutcome::Valid { registry_hash, distance }) => match distance {
            Some(d) => format!("valid, registry hash {} at distance {d}", label(&registry_hash)),
            None => format!("valid, registry hash {}", label(&registry_hash)),
        },
        Some(other) => label(&other.class()),
    };
    let _ = writeln!(out, "{:<12} {fingerprint}", "Fingerprint");
    match r.row {
        Some(row) => {
            let _ = writeln!(out, "{:<12} {row}", "Table row");
        }
        None if r.extra_tabular => {
            let _ = writeln!(out, "{:<12} none (resolved by precedence)", "Table row");
        }
        None => {
            let _ = writeln!(out, "{:<12} none (later stages skipped)", "Table row");
        }
    }
    if r.needs_human_review {
        let _ = writeln!(out, "Needs human review");
    }
    if !r.notes.is_empty() {
        list(&mut out, "Notes", &r.notes);
    }

    if r.confidence != Confidence::High {
        return out;
    }
    let Some(d) = &r.display else { return out };
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<12} {} (certificate {})", "Signer", d.signer, d.certificate_id);
    let caveat = if d.low_security_caveat { ", signed on a low-security device" } else { "" };
    let _ = writeln!(out, "{:<12} {}{caveat}", "Security", d.security_level.as_str());
    let _ = writeln!(out, "{:<12} {}", "Source", label(&d.source));
    list(&mut out, "Assertions", &d.assertions);
    let actions: Vec<String> = d
        .actions
        .iter()
        .map(|a| {
            let mut s = format!("{} by {} at {}", label(&a.kind), a.tool, a.timestamp);
            if let Some(region) = a.region {
                let _ =
                    write!(s, ", region ({},{})-({},{})", region.left(), region.top(), region.right(), region.bottom());
            }
            s
        })
        .collect();
    list(&mut out, "Actions", &actions);
    let ingredients: Vec<String> = d
        .ingredients
        .iter()
        .map(|i| match i.thumbnail_hash {
            Some(h) => format!("{} [{h}]", i.description),
            None => i.description.clone(),
        })
        .collect();
    list(&mut out, "Ingredients", &ingredients);
    if let Ok(thumb) = thumbnail(&asset.image) {
        let _ = writeln!(out, "Thumbnail");
        for row in thumb.chunks(8) {
            let _ = writeln!(out, "  {}", row.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(" "));
        }
    }
    out
}

pub fn candidates(fp: Fingerprint, lookup: &Lookup<Vec<Candidate>>) -> String {
    match lookup {
        Lookup::Found(list) if !list.is_empty() => {
            let mut out = format!("{fp}\n");
            for c in list {
                let _ = writeln!(
                    out,
                    "  {} distance {} stored {}{}",
                    c.entry.content_hash,
                    c.distance,
                    c.entry.stored_at,
                    if c.needs_human_review { " (needs human review)" } else { "" }
                );
            }
            out
        }
        Lookup::Found(_) | Lookup::Missing => format!("{fp}\n  no registry entry within the threshold"),
        Lookup::NoAccess => format!("{fp}\n  registry not reachable"),
    }
}

pub fn scenarios(results: &[ScenarioResult]) -> String {
    let mut out = String::new();
    for r in results {
        let _ = writeln!(out, "{} seed {} viewer {}: mitigated {}", r.scenario, r.seed, label(&r.viewer), r.mitigated);
        for (when, rep) in [("before", &r.report_before), ("after", &r.report_after)] {
            let concerns: Vec<&str> = rep.c2pa.concerns.iter().map(|c| c.as_str()).collect();
            let c2pa = if concerns.is_empty() { String::new() } else { format!(" (C2PA: {})", concerns.join(", ")) };
            let _ = writeln!(out, "  {when:<7} {} / {}{c2pa}", rep.result.as_str(), rep.confidence.as_str());
        }
    }
    out
}

pub fn oracle(outcomes: &[OracleAttackOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let _ = writeln!(
            out,
            "{}: {} after {} queries ({} refused, {} ms simulated), {} moves kept, mse {:.2}, max {} grants per window",
            label(&o.endpoint),
            if o.succeeded { "mark removed" } else { "gave up" },
            o.queries,
            o.refused,
            o.elapsed_ms,
            o.moves_kept,
            o.mse,
            o.max_grants_per_window
        );
    }
    out
}

pub fn trust_list(list: &TrustList) -> String {
    let mut out = format!("trust list version {}\n", list.version());
    for r in list.records() {
        let status = match r.revoked_at {
            Some(t) => format!(" REVOKED at {t}"),
            None if r.revoked => " REVOKED".into(),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "  {} {} ({}) {}{status}",
            r.certificate_id,
            r.owner_name,
            r.security_level.as_str(),
            hex::encode(r.public_key)
        );
    }
    out
}
