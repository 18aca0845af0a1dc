use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SegmentError, SegmentLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: SegmentLabel,
    pub page_start: u32,
    pub page_end: u32,
}

/// Ordered page-range labeling for one document. Structural checks happen in
/// [`SegmentManifest::validate`] since they depend on the page count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentManifest {
    pub doc_id: String,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ManifestIssue {
    Empty,
    BadRange { entry: usize, start: u32, end: u32 },
    OutOfRange { entry: usize, end: u32, page_count: u32 },
    Gap { pages: Vec<u32> },
    Overlap { pages: Vec<u32> },
    Unordered { entry: usize },
    FrontCount(usize),
    FrontNotFirst,
    ChapterSequence { entry: usize, expected: u32, found: u32 },
    Repeated(SegmentLabel),
    MisplacedBackMatter { entry: usize, label: SegmentLabel },
}

fn page_list(pages: &[u32]) -> String {
    let mut runs: Vec<String> = Vec::new();
    let mut i = 0;
    while i < pages.len() {
        let start = pages[i];
        let mut end = start;
        while i + 1 < pages.len() && pages[i + 1] == end + 1 {
            i += 1;
            end = pages[i];
        }
        runs.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
        i += 1;
    }
    let noun = if pages.len() == 1 { "page" } else { "pages" };
    format!("{noun} {}", runs.join(", "))
}

impl fmt::Display for ManifestIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifestIssue::Empty => f.write_str("no entries"),
            ManifestIssue::BadRange { entry, start, end } => {
                write!(f, "entry {} has invalid range {start}-{end}", entry + 1)
            }
            ManifestIssue::OutOfRange { entry, end, page_count } => write!(
                f,
                "entry {} ends at page {end}, beyond the last page {page_count}",
                entry + 1
            ),
            ManifestIssue::Gap { pages } => write!(f, "gap: {} not covered", page_list(pages)),
            ManifestIssue::Overlap { pages } => write!(f, "overlap: {} covered more than once", page_list(pages)),
            ManifestIssue::Unordered { entry } => {
                write!(f, "entry {} starts before the previous entry ends", entry + 1)
            }
            ManifestIssue::FrontCount(n) => write!(f, "expected exactly one front entry, found {n}"),
            ManifestIssue::FrontNotFirst => f.write_str("front must be the first entry"),
            ManifestIssue::ChapterSequence { entry, expected, found } => write!(
                f,
                "entry {} is chapter{found}, expected chapter{expected}",
                entry + 1
            ),
            ManifestIssue::Repeated(label) => write!(f, "{label} appears more than once"),
            ManifestIssue::MisplacedBackMatter { entry, label } => write!(
                f,
                "entry {} ({label}) is out of order; references and appendix follow all chapters, references first",
                entry + 1
            ),
        }
    }
}

impl SegmentManifest {
    /// Every problem found, empty when the manifest is valid.
    pub fn issues(&self, page_count: u32) -> Vec<ManifestIssue> {
        let mut issues = Vec::new();
        if self.entries.is_empty() {
            issues.push(ManifestIssue::Empty);
            return issues;
        }

        // page coverage
        let mut cover = vec![0u32; page_count as usize + 1];
        for (i, e) in self.entries.iter().enumerate() {
            if e.page_start == 0 || e.page_start > e.page_end {
                issues.push(ManifestIssue::BadRange {
                    entry: i,
                    start: e.page_start,
                    end: e.page_end,
                });
                continue;
            }
            if e.page_end > page_count {
                issues.push(ManifestIssue::OutOfRange {
                    entry: i,
                    end: e.page_end,
                    page_count,
                });
            }
            for p in e.page_start..=e.page_end.min(page_count) {
                cover[p as usize] += 1;
            }
        }
        let gaps: Vec<u32> = (1..=page_count).filter(|&p| cover[p as usize] == 0).collect();
        if !gaps.is_empty() {
            issues.push(ManifestIssue::Gap { pages: gaps });
        }
        let overlaps: Vec<u32> = (1..=page_count).filter(|&p| cover[p as usize] > 1).collect();
        if !overlaps.is_empty() {
            issues.push(ManifestIssue::Overlap { pages: overlaps });
        }
        for (i, pair) in self.entries.windows(2).enumerate() {
            if pair[1].page_start <= pair[0].page_end {
                issues.push(ManifestIssue::Unordered { entry: i + 1 });
            }
        }

        // label sequence: front, chapter1..n, references?, appendix?
        let fronts = self
            .entries
            .iter()
            .filter(|e| e.label == SegmentLabel::Front)
            .count();
        if fronts != 1 {
            issues.push(ManifestIssue::FrontCount(fronts));
        } else if self.entries[0].label != SegmentLabel::Front {
            issues.push(ManifestIssue::FrontNotFirst);
        }
        let mut next_chapter = 1;
        let mut seen_refs = false;
        let mut seen_appendix = false;
        for (i, e) in self.entries.iter().enumerate() {
            match e.label {
                SegmentLabel::Front => {}
                SegmentLabel::Chapter(n) => {
                    if seen_refs || seen_appendix {
                        issues.push(ManifestIssue::MisplacedBackMatter {
                            entry: i,
                            label: e.label,
                        });
                    }
                    if n != next_chapter {
                        issues.push(ManifestIssue::ChapterSequence {
                            entry: i,
                            expected: next_chapter,
                            found: n,
                        });
                    }
                    next_chapter = n.saturating_add(1);
                }
                SegmentLabel::References => {
                    if seen_refs {
                        issues.push(ManifestIssue::Repeated(e.label));
                    } else if seen_appendix {
                        issues.push(ManifestIssue::MisplacedBackMatter {
                            entry: i,
                            label: e.label,
                        });
                    }
                    seen_refs = true;
                }
                SegmentLabel::Appendix => {
                    if seen_appendix {
                        issues.push(ManifestIssue::Repeated(e.label));
                    }
                    seen_appendix = true;
                }
            }
        }
        issues
    }

    pub fn validate(&self, page_count: u32) -> Result<(), SegmentError> {
        let issues = self.issues(page_count);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(SegmentError::InvalidManifest {
                doc_id: self.doc_id.clone(),
                issues,
            })
        }
    }
}

/// Builds the manifest implied by detected boundaries (1-based pages).
/// Front covers everything before the first boundary; each chapter runs to
/// the page before the next boundary; references and appendix close the
/// document in that order.
pub fn segments_from_detection(
    doc_id: &str,
    starts: &[u32],
    page_count: u32,
    references: Option<u32>,
    appendix: Option<u32>,
) -> Result<SegmentManifest, SegmentError> {
    let bad = |m: String| Err(SegmentError::Boundaries(m));
    if page_count == 0 {
        return bad("page count must be positive".into());
    }
    if let Some(w) = starts.windows(2).find(|w| w[0] >= w[1]) {
        return bad(format!("chapter starts not strictly ascending at {} -> {}", w[0], w[1]));
    }
    if let Some(&s) = starts.iter().find(|&&s| s < 2 || s > page_count) {
        return bad(format!("chapter start {s} outside 2..={page_count}"));
    }
    let last_start = starts.last().copied().unwrap_or(1);
    if let Some(r) = references {
        if r <= last_start || r > page_count {
            return bad(format!("references start {r} must fall in {}..={page_count}", last_start + 1));
        }
    }
    if let Some(a) = appendix {
        let floor = references.unwrap_or(last_start);
        if a <= floor || a > page_count {
            return bad(format!("appendix start {a} must fall in {}..={page_count}", floor + 1));
        }
    }

    let mut boundaries: Vec<(SegmentLabel, u32)> = starts
        .iter()
        .enumerate()
        .map(|(i, &s)| (SegmentLabel::Chapter(i as u32 + 1), s))
        .collect();
    boundaries.extend(references.map(|r| (SegmentLabel::References, r)));
    boundaries.extend(appendix.map(|a| (SegmentLabel::Appendix, a)));

    let first = boundaries.first().map_or(page_count + 1, |b| b.1);
    let mut entries = vec![ManifestEntry {
        label: SegmentLabel::Front,
        page_start: 1,
        page_end: first - 1,
    }];
    for (i, &(label, start)) in boundaries.iter().enumerate() {
        let next = boundaries.get(i + 1).map_or(page_count + 1, |b| b.1);
        entries.push(ManifestEntry {
            label,
            page_start: start,
            page_end: next - 1,
        });
    }
    let manifest = SegmentManifest {
        doc_id: doc_id.to_string(),
        entries,
    };
    manifest.validate(page_count)?;
    Ok(manifest)
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    doc_id: String,
    label: String,
    page_start: u32,
    page_end: u32,
}

/// Reads `doc_id,label,page_start,page_end` rows, grouped per document in
/// first-appearance order.
pub fn parse_manifests<R: Read>(reader: R, source_name: &str) -> Result<Vec<SegmentManifest>, SegmentError> {
    let parse_err = |line: usize, message: String| SegmentError::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["doc_id", "label", "page_start", "page_end"] {
        return Err(parse_err(1, "expected header `doc_id,label,page_start,page_end`".into()));
    }
    let mut manifests: Vec<SegmentManifest> = Vec::new();
    for (i, row) in rdr.deserialize::<ManifestRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let label: SegmentLabel = row.label.parse().map_err(|m| parse_err(line, m))?;
        let entry = ManifestEntry {
            label,
            page_start: row.page_start,
            page_end: row.page_end,
        };
        match manifests.iter_mut().find(|m| m.doc_id == row.doc_id) {
            Some(m) => m.entries.push(entry),
            None => manifests.push(SegmentManifest {
                doc_id: row.doc_id,
                entries: vec![entry],
            }),
        }
    }
    Ok(manifests)
}

pub fn load_manifests(path: impl AsRef<Path>) -> Result<Vec<SegmentManifest>, SegmentError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SegmentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifests(file, &path.display().to_string())
}

pub fn write_manifests_csv(manifests: &[SegmentManifest]) -> String {
    let mut out = String::from("doc_id,label,page_start,page_end\n");
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for m in manifests {
        for e in &m.entries {
            wtr.serialize(ManifestRow {
                doc_id: m.doc_id.clone(),
                label: e.label.to_string(),
                page_start: e.page_start,
                page_end: e.page_end,
            })
            .expect("writing to memory");
        }
    }
    out.push_str(&String::from_utf8(wtr.into_inner().expect("in-memory writer")).expect("utf-8 csv"));
    out
}
