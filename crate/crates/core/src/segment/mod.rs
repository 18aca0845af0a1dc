//! Splitting documents into `front`, `chapter{i}`, `references` and
//! `appendix` page ranges.
//!
//! Human-authored manifests are authoritative. Heading detection only
//! proposes a manifest when none is supplied.

mod detect;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::DocumentRecord;

pub use detect::{detect_back_matter, detect_chapter_starts, detect_manifest, BackMatter, HEADING_WINDOW};
pub use manifest::{
    load_manifests, parse_manifests, segments_from_detection, write_manifests_csv, ManifestEntry,
    ManifestIssue, SegmentManifest,
};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("invalid segment manifest for '{doc_id}': {}", format_issues(.issues))]
    InvalidManifest {
        doc_id: String,
        issues: Vec<ManifestIssue>,
    },
    #[error("invalid segment boundaries: {0}")]
    Boundaries(String),
    #[error("manifest is for '{manifest}' but document is '{document}'")]
    DocumentMismatch { manifest: String, document: String },
    #[error("{got} page texts supplied for a {expected}-page document")]
    PageTextCount { expected: u32, got: usize },
}

fn format_issues(issues: &[ManifestIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentLabel {
    Front,
    Chapter(u32),
    References,
    Appendix,
}

impl fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentLabel::Front => f.write_str("front"),
            SegmentLabel::Chapter(i) => write!(f, "chapter{i}"),
            SegmentLabel::References => f.write_str("references"),
            SegmentLabel::Appendix => f.write_str("appendix"),
        }
    }
}

impl FromStr for SegmentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "front" => Ok(SegmentLabel::Front),
            "references" => Ok(SegmentLabel::References),
            "appendix" => Ok(SegmentLabel::Appendix),
            _ => {
                let digits = s
                    .strip_prefix("chapter")
                    .ok_or_else(|| format!("unknown segment label '{s}'"))?;
                match digits.parse::<u32>() {
                    Ok(i) if i >= 1 && i.to_string() == digits => Ok(SegmentLabel::Chapter(i)),
                    _ => Err(format!("bad chapter label '{s}'")),
                }
            }
        }
    }
}

impl Serialize for SegmentLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SegmentLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A labeled contiguous page range with its text (pages joined by form feed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: SegmentLabel,
    pub page_start: u32,
    pub page_end: u32,
    pub text: String,
}

/// Cuts a document into segments following a validated manifest.
pub fn apply_manifest(
    doc: &DocumentRecord,
    manifest: &SegmentManifest,
    page_texts: &[String],
) -> Result<Vec<Segment>, SegmentError> {
    if manifest.doc_id != doc.doc_id() {
        return Err(SegmentError::DocumentMismatch {
            manifest: manifest.doc_id.clone(),
            document: doc.doc_id().to_string(),
        });
    }
    if page_texts.len() != doc.page_count() as usize {
        return Err(SegmentError::PageTextCount {
            expected: doc.page_count(),
            got: page_texts.len(),
        });
    }
    manifest.validate(doc.page_count())?;
    let sep = crate::layout::PAGE_SEPARATOR.to_string();
    Ok(manifest
        .entries
        .iter()
        .map(|e| Segment {
            label: e.label,
            page_start: e.page_start,
            page_end: e.page_end,
            text: page_texts[e.page_start as usize - 1..e.page_end as usize].join(&sep),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentSource {
    Manual,
    Detected,
}

/// Uses the manual manifest when one is given, otherwise heading detection.
pub fn resolve_segments(
    doc: &DocumentRecord,
    manual: Option<&SegmentManifest>,
    page_texts: &[String],
) -> Result<(Vec<Segment>, SegmentSource), SegmentError> {
    match manual {
        Some(m) => Ok((apply_manifest(doc, m, page_texts)?, SegmentSource::Manual)),
        None => {
            let detected = detect_manifest(doc.doc_id(), page_texts)?;
            Ok((apply_manifest(doc, &detected, page_texts)?, SegmentSource::Detected))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PageDims;
    use std::collections::BTreeMap;

    fn doc(n: u32) -> DocumentRecord {
        let dims = vec![
            PageDims {
                width: 612.0,
                height: 792.0
            };
            n as usize
        ];
        DocumentRecord::new("etd", n, dims, BTreeMap::new()).unwrap()
    }

    fn entry(label: &str, s: u32, e: u32) -> ManifestEntry {
        ManifestEntry {
            label: label.parse().unwrap(),
            page_start: s,
            page_end: e,
        }
    }

    #[test]
    fn label_parsing() {
        assert_eq!("chapter12".parse::<SegmentLabel>().unwrap(), SegmentLabel::Chapter(12));
        assert!("chapter0".parse::<SegmentLabel>().is_err());
        assert!("chapter01".parse::<SegmentLabel>().is_err());
        assert!("Chapter1".parse::<SegmentLabel>().is_err());
        assert!("intro".parse::<SegmentLabel>().is_err());
        assert_eq!(SegmentLabel::Chapter(3).to_string(), "chapter3");
    }

    #[test]
    fn sgt_style_manifest() {
        let m = SegmentManifest {
            doc_id: "etd".into(),
            entries: vec![
                entry("front", 1, 4),
                entry("chapter1", 5, 10),
                entry("chapter2", 11, 20),
                entry("chapter3", 21, 28),
                entry("chapter4", 29, 35),
                entry("chapter5", 36, 40),
                entry("references", 41, 45),
                entry("appendix", 46, 50),
            ],
        };
        let pages: Vec<String> = (1..=50).map(|p| format!("page {p}")).collect();
        let segs = apply_manifest(&doc(50), &m, &pages).unwrap();
        assert_eq!(segs.len(), 8);
        let spans: Vec<(u32, u32)> = segs.iter().map(|s| (s.page_start, s.page_end)).collect();
        assert_eq!(
            spans,
            [(1, 4), (5, 10), (11, 20), (21, 28), (29, 35), (36, 40), (41, 45), (46, 50)]
        );
        assert_eq!(segs[6].label, SegmentLabel::References);
        assert_eq!(segs[1].text, "page 5\u{c}page 6\u{c}page 7\u{c}page 8\u{c}page 9\u{c}page 10");
    }

    #[test]
    fn gap_names_page() {
        let m = SegmentManifest {
            doc_id: "etd".into(),
            entries: vec![entry("front", 1, 3), entry("chapter1", 4, 6), entry("chapter2", 8, 10)],
        };
        let pages: Vec<String> = (1..=10).map(|p| p.to_string()).collect();
        let err = apply_manifest(&doc(10), &m, &pages).unwrap_err();
        match &err {
            SegmentError::InvalidManifest { issues, .. } => {
                assert!(issues.contains(&ManifestIssue::Gap { pages: vec![7] }), "{issues:?}")
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("page 7"), "{err}");
    }

    #[test]
    fn manual_overrides_detection() {
        let mut pages: Vec<String> = (1..=6).map(|p| format!("text {p}")).collect();
        pages[2] = "CHAPTER 1\nIntroduction".into();
        let manual = SegmentManifest {
            doc_id: "etd".into(),
            entries: vec![entry("front", 1, 1), entry("chapter1", 2, 6)],
        };
        let (segs, source) = resolve_segments(&doc(6), Some(&manual), &pages).unwrap();
        assert_eq!(source, SegmentSource::Manual);
        assert_eq!(segs, apply_manifest(&doc(6), &manual, &pages).unwrap());

        let (segs, source) = resolve_segments(&doc(6), None, &pages).unwrap();
        assert_eq!(source, SegmentSource::Detected);
        assert_eq!(segs[1].page_start, 3);
    }

    #[test]
    fn mismatches() {
        let m = SegmentManifest {
            doc_id: "other".into(),
            entries: vec![entry("front", 1, 2)],
        };
        let pages = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            apply_manifest(&doc(2), &m, &pages),
            Err(SegmentError::DocumentMismatch { .. })
        ));
        let m = SegmentManifest {
            doc_id: "etd".into(),
            entries: vec![entry("front", 1, 2)],
        };
        assert!(matches!(
            apply_manifest(&doc(2), &m, &pages[..1]),
            Err(SegmentError::PageTextCount { .. })
        ));
    }
}
