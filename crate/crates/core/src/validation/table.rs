//! The 60-row outcome table and the decision function over it.

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

/// C2PA column class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C2paClass {
    NotPresent,
    PresentHashNoMatch,
    PresentHashMatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WatermarkClass {
    DetectableMatch,
    DetectableNoMatch,
    DetectableMissing,
    NoAccess,
    Undetectable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FingerprintClass {
    ValidMatch,
    ValidNoMatch,
    ValidMissing,
    NoAccess,
    Invalid,
}

impl C2paClass {
    pub const ALL: [Self; 3] = [Self::NotPresent, Self::PresentHashNoMatch, Self::PresentHashMatch];
}

impl WatermarkClass {
    pub const ALL: [Self; 5] =
        [Self::DetectableMatch, Self::DetectableNoMatch, Self::DetectableMissing, Self::NoAccess, Self::Undetectable];
}

impl FingerprintClass {
    pub const ALL: [Self; 5] =
        [Self::ValidMatch, Self::ValidNoMatch, Self::ValidMissing, Self::NoAccess, Self::Invalid];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeTriple {
    pub c2pa: C2paClass,
    pub watermark: WatermarkClass,
    pub fingerprint: FingerprintClass,
}

/// Declared from least to most favourable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResultState {
    #[serde(rename = "Indeterminate")]
    Indeterminate,
    #[serde(rename = "Media Modified")]
    MediaModified,
    #[serde(rename = "Possible Match")]
    PossibleMatch,
    #[serde(rename = "Match")]
    Match,
    #[serde(rename = "Media Validates")]
    MediaValidates,
}

/// Declared from least to most favourable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Confidence {
    #[serde(rename = "Cannot Be Asserted")]
    CannotBeAsserted,
    #[serde(rename = "Lowest")]
    Lowest,
    #[serde(rename = "Low")]
    Low,
    #[serde(rename = "High")]
    High,
}

impl ResultState {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Indeterminate => "Indeterminate",
            Self::MediaModified => "Media Modified",
            Self::PossibleMatch => "Possible Match",
            Self::Match => "Match",
            Self::MediaValidates => "Media Validates",
        }
    }
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CannotBeAsserted => "Cannot Be Asserted",
            Self::Lowest => "Lowest",
            Self::Low => "Low",
            Self::High => "High",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub row: u8,
    pub c2pa: C2paClass,
    pub watermark: WatermarkClass,
    pub fingerprint: FingerprintClass,
    pub result: ResultState,
    pub confidence: Confidence,
    pub concerns: Vec<String>,
}

impl TableRow {
    pub fn triple(&self) -> OutcomeTriple {
        OutcomeTriple { c2pa: self.c2pa, watermark: self.watermark, fingerprint: self.fingerprint }
    }
}

pub const TABLE_JSON: &str = include_str!("../../data/outcome_table.json");

static TABLE: LazyLock<Vec<TableRow>> = LazyLock::new(|| {
    let rows: Vec<TableRow> = serde_json::from_str(TABLE_JSON).expect("bundled outcome table parses");
    assert_eq!(rows.len(), 60);
    rows
});

pub fn outcome_table() -> &'static [TableRow] {
    &TABLE
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub result: ResultState,
    pub confidence: Confidence,
    pub concerns: Vec<String>,
    /// Table row number when exactly one row applies.
    pub row: Option<u8>,
    /// The triple is not listed in the table and was resolved by precedence.
    pub extra_tabular: bool,
}

fn union_concerns<'a>(rows: impl Iterator<Item = &'a TableRow>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in rows.flat_map(|r| r.concerns.iter()) {
        if !out.contains(c) {
            out.push(c.clone());
        }
    }
    out
}

/// Table lookup. Triples the table omits resolve by precedence: a matching
/// embedded manifest gives Media Validates/High; otherwise a watermark that
/// resolves to a matching manifest gives Match/High; otherwise the most
/// pessimistic row sharing the C2PA and watermark columns (falling back to
/// the C2PA column alone).
pub fn decide(triple: OutcomeTriple) -> Decision {
    let table = outcome_table();
    if let Some(row) = table.iter().find(|r| r.triple() == triple) {
        return Decision {
            result: row.result,
            confidence: row.confidence,
            concerns: row.concerns.clone(),
            row: Some(row.row),
            extra_tabular: false,
        };
    }
    let sharing = |f: &dyn Fn(&TableRow) -> bool| table.iter().filter(|r| f(r)).collect::<Vec<_>>();
    let prefix = sharing(&|r| r.c2pa == triple.c2pa && r.watermark == triple.watermark);
    if triple.c2pa == C2paClass::PresentHashMatch {
        return Decision {
            result: ResultState::MediaValidates,
            confidence: Confidence::High,
            concerns: Vec::new(),
            row: None,
            extra_tabular: true,
        };
    }
    if triple.watermark == WatermarkClass::DetectableMatch {
        return Decision {
            result: ResultState::Match,
            confidence: Confidence::High,
            concerns: union_concerns(prefix.into_iter()),
            row: None,
            extra_tabular: true,
        };
    }
    let pool = if prefix.is_empty() { sharing(&|r| r.c2pa == triple.c2pa) } else { prefix };
    let worst = pool.iter().min_by_key(|r| (r.result, r.confidence, r.row)).expect("every C2PA class has rows");
    Decision {
        result: worst.result,
        confidence: worst.confidence,
        concerns: worst.concerns.clone(),
        row: None,
        extra_tabular: true,
    }
}

/// Decision when later stages were skipped: the rows sharing the evaluated
/// prefix must agree on result and confidence; their concerns are merged.
pub fn decide_prefix(c2pa: C2paClass, watermark: Option<WatermarkClass>) -> Option<Decision> {
    let rows: Vec<&TableRow> =
        outcome_table().iter().filter(|r| r.c2pa == c2pa && watermark.is_none_or(|w| r.watermark == w)).collect();
    let first = rows.first()?;
    if rows.iter().any(|r| (r.result, r.confidence) != (first.result, first.confidence)) {
        return None;
    }
    let row = (rows.len() == 1).then_some(first.row);
    Some(Decision {
        result: first.result,
        confidence: first.confidence,
        concerns: union_concerns(rows.into_iter()),
        row,
        extra_tabular: false,
    })
}
