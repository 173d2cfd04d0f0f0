//! MIAC: `"MIA1"` followed by `tag(4) | length(u32 BE) | payload` segments.
//! PIXL comes first and exactly once; META and C2PM appear at most once each;
//! anything else is carried through untouched.

use std::collections::BTreeMap;

use super::{InsecureMetadata, MediaError, PixelImage};
use crate::canonical;

pub const MAGIC: &[u8; 4] = b"MIA1";

const TAG_PIXL: [u8; 4] = *b"PIXL";
const TAG_META: [u8; 4] = *b"META";
const TAG_C2PM: [u8; 4] = *b"C2PM";

/// A segment this crate does not interpret, kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RawSegment {
    pub tag: [u8; 4],
    pub payload: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MediaAsset {
    pub image: PixelImage,
    pub insecure_meta: InsecureMetadata,
    /// Serialized `SignedManifest`, if one is bound to the asset.
    pub manifest_segment: Option<Vec<u8>>,
    pub unknown_segments: Vec<RawSegment>,
}

impl MediaAsset {
    pub fn new(image: PixelImage) -> Self {
        Self { image, insecure_meta: InsecureMetadata::new(), manifest_segment: None, unknown_segments: Vec::new() }
    }

    pub fn with_metadata(mut self, meta: InsecureMetadata) -> Self {
        self.insecure_meta = meta;
        self
    }

    /// The same pixels with every other segment dropped: what a screenshot or
    /// a naive re-encode leaves behind.
    pub fn pixels_only(&self) -> Self {
        Self::new(self.image.clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serialize_asset(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MediaError> {
        parse_asset(bytes)
    }
}

fn push_segment(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    let len = u32::try_from(payload.len()).expect("segment payload exceeds u32 length field");
    out.extend_from_slice(tag);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
}

pub fn serialize_asset(asset: &MediaAsset) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 17 + asset.image.samples().len());
    out.extend_from_slice(MAGIC);
    push_segment(&mut out, &TAG_PIXL, &asset.image.pixl_payload());
    if !asset.insecure_meta.is_empty() {
        push_segment(&mut out, &TAG_META, &canonical::to_vec(&asset.insecure_meta));
    }
    if let Some(manifest) = &asset.manifest_segment {
        push_segment(&mut out, &TAG_C2PM, manifest);
    }
    for seg in &asset.unknown_segments {
        push_segment(&mut out, &seg.tag, &seg.payload);
    }
    out
}

fn malformed(msg: impl Into<String>) -> MediaError {
    MediaError::MalformedContainer(msg.into())
}

fn parse_pixl(payload: &[u8]) -> Result<PixelImage, MediaError> {
    if payload.len() < 9 {
        return Err(malformed("PIXL header shorter than 9 bytes"));
    }
    let width = u32::from_be_bytes(payload[0..4].try_into().unwrap());
    let height = u32::from_be_bytes(payload[4..8].try_into().unwrap());
    let channels = payload[8];
    PixelImage::new(width, height, channels, payload[9..].to_vec())
}

fn parse_meta(payload: &[u8]) -> Result<InsecureMetadata, MediaError> {
    let map: BTreeMap<String, String> =
        serde_json::from_slice(payload).map_err(|e| malformed(format!("META is not a JSON object of strings: {e}")))?;
    Ok(map.into_iter().collect())
}

pub fn parse_asset(bytes: &[u8]) -> Result<MediaAsset, MediaError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(malformed("bad magic"));
    }
    let mut rest = &bytes[4..];
    let mut image = None;
    let mut meta = None;
    let mut manifest = None;
    let mut unknown = Vec::new();

    while !rest.is_empty() {
        if rest.len() < 8 {
            return Err(malformed("truncated segment header"));
        }
        let tag: [u8; 4] = rest[..4].try_into().unwrap();
        let len = u32::from_be_bytes(rest[4..8].try_into().unwrap()) as usize;
        let body = &rest[8..];
        if len > body.len() {
            return Err(malformed(format!(
                "segment {} declares {len} bytes but only {} remain",
                String::from_utf8_lossy(&tag),
                body.len()
            )));
        }
        let payload = &body[..len];
        rest = &body[len..];

        if image.is_none() && tag != TAG_PIXL {
            return Err(malformed("first segment must be PIXL"));
        }
        match tag {
            TAG_PIXL if image.is_some() => return Err(malformed("duplicate PIXL segment")),
            TAG_PIXL => image = Some(parse_pixl(payload)?),
            TAG_META if meta.is_some() => return Err(malformed("duplicate META segment")),
            TAG_META => meta = Some(parse_meta(payload)?),
            TAG_C2PM if manifest.is_some() => return Err(malformed("duplicate C2PM segment")),
            TAG_C2PM => manifest = Some(payload.to_vec()),
            _ => unknown.push(RawSegment { tag, payload: payload.to_vec() }),
        }
    }

    let image = image.ok_or_else(|| malformed("missing PIXL segment"))?;
    Ok(MediaAsset {
        image,
        insecure_meta: meta.unwrap_or_default(),
        manifest_segment: manifest,
        unknown_segments: unknown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(w: u32, h: u32, samples: Vec<u8>) -> PixelImage {
        PixelImage::new(w, h, 1, samples).unwrap()
    }

    #[test]
    fn minimal_asset_layout() {
        let bytes = serialize_asset(&MediaAsset::new(gray(1, 1, vec![42])));
        let mut expected = b"MIA1PIXL".to_vec();
        expected.extend_from_slice(&10u32.to_be_bytes());
        expected.extend_from_slice(&[0, 0, 0, 1, 0, 0, 0, 1, 1, 42]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn manifest_segment_emitted_once() {
        let mut asset = MediaAsset::new(gray(1, 1, vec![0]));
        asset.manifest_segment = Some(b"{}".to_vec());
        let bytes = serialize_asset(&asset);
        assert_eq!(bytes.windows(4).filter(|w| *w == b"C2PM").count(), 1);
    }

    #[test]
    fn wrong_magic() {
        assert!(matches!(parse_asset(b"MIA2"), Err(MediaError::MalformedContainer(_))));
        assert!(matches!(parse_asset(b""), Err(MediaError::MalformedContainer(_))));
    }

    #[test]
    fn absent_manifest_parses_as_none() {
        let bytes = serialize_asset(&MediaAsset::new(gray(2, 2, vec![1, 2, 3, 4])));
        assert_eq!(parse_asset(&bytes).unwrap().manifest_segment, None);
    }

    #[test]
    fn sample_count_off_by_one() {
        let mut bytes = b"MIA1PIXL".to_vec();
        bytes.extend_from_slice(&(9u32 + 11).to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.push(3);
        bytes.extend_from_slice(&[0; 11]);
        assert!(matches!(parse_asset(&bytes), Err(MediaError::InvariantViolation(_))));
    }

    #[test]
    fn truncated_and_overflowing_segments() {
        let bytes = serialize_asset(&MediaAsset::new(gray(2, 2, vec![1, 2, 3, 4])));
        for cut in 5..bytes.len() {
            assert!(matches!(parse_asset(&bytes[..cut]), Err(MediaError::MalformedContainer(_))), "cut at {cut}");
        }
        let mut long = bytes.clone();
        long[8..12].copy_from_slice(&u32::MAX.to_be_bytes());
        assert!(matches!(parse_asset(&long), Err(MediaError::MalformedContainer(_))));
    }

    #[test]
    fn pixl_must_come_first() {
        let mut bytes = b"MIA1".to_vec();
        push_segment(&mut bytes, b"META", b"{}");
        push_segment(&mut bytes, b"PIXL", &gray(1, 1, vec![0]).pixl_payload());
        assert!(matches!(parse_asset(&bytes), Err(MediaError::MalformedContainer(_))));
    }

    #[test]
    fn unknown_segments_kept_in_order() {
        let mut asset = MediaAsset::new(gray(1, 1, vec![0]));
        asset.unknown_segments =
            vec![RawSegment { tag: *b"ZZZZ", payload: vec![1, 2] }, RawSegment { tag: *b"AAAA", payload: vec![] }];
        let bytes = serialize_asset(&asset);
        assert_eq!(parse_asset(&bytes).unwrap(), asset);
    }

    fn arb_asset() -> impl Strategy<Value = MediaAsset> {
        let image = (1u32..6, 1u32..6, prop_oneof![Just(1u8), Just(3u8)]).prop_flat_map(|(w, h, c)| {
            proptest::collection::vec(any::<u8>(), (w * h * c as u32) as usize)
                .prop_map(move |s| PixelImage::new(w, h, c, s).unwrap())
        });
        let meta = proptest::collection::btree_map("[a-z_]{1,8}", "\\PC{0,12}", 0..4);
        let manifest = proptest::option::of(proptest::collection::vec(any::<u8>(), 0..64));
        let unknown = proptest::collection::vec(
            ("[A-Z]{4}", proptest::collection::vec(any::<u8>(), 0..16)).prop_filter_map(
                "reserved tag",
                |(tag, payload)| {
                    let tag: [u8; 4] = tag.as_bytes().try_into().ok()?;
                    (![TAG_PIXL, TAG_META, TAG_C2PM].contains(&tag)).then_some(RawSegment { tag, payload })
                },
            ),
            0..3,
        );
        (image, meta, manifest, unknown).prop_map(|(image, meta, manifest_segment, unknown_segments)| MediaAsset {
            image,
            insecure_meta: meta.into_iter().collect(),
            manifest_segment,
            unknown_segments,
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn container_round_trip(asset in arb_asset()) {
            let bytes = serialize_asset(&asset);
            let parsed = parse_asset(&bytes).unwrap();
            prop_assert_eq!(&parsed, &asset);
            prop_assert_eq!(serialize_asset(&parsed), bytes);
        }
    }
}
