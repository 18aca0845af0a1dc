use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BBox, LayoutError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    Paragraph,
    ChapterTitle,
    SectionHeader,
    PageHeader,
    PageFooter,
    Caption,
    Figure,
    Table,
    Equation,
    Footnote,
    ReferenceEntry,
    Other,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 12] = [
        RegionLabel::Paragraph,
        RegionLabel::ChapterTitle,
        RegionLabel::SectionHeader,
        RegionLabel::PageHeader,
        RegionLabel::PageFooter,
        RegionLabel::Caption,
        RegionLabel::Figure,
        RegionLabel::Table,
        RegionLabel::Equation,
        RegionLabel::Footnote,
        RegionLabel::ReferenceEntry,
        RegionLabel::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::Paragraph => "paragraph",
            RegionLabel::ChapterTitle => "chapter_title",
            RegionLabel::SectionHeader => "section_header",
            RegionLabel::PageHeader => "page_header",
            RegionLabel::PageFooter => "page_footer",
            RegionLabel::Caption => "caption",
            RegionLabel::Figure => "figure",
            RegionLabel::Table => "table",
            RegionLabel::Equation => "equation",
            RegionLabel::Footnote => "footnote",
            RegionLabel::ReferenceEntry => "reference_entry",
            RegionLabel::Other => "other",
        }
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegionLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown region label '{s}'"))
    }
}

/// A labeled detector region. `bbox` is in detector pixels as read from the
/// file and fractional after [`super::normalize_regions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRegion {
    pub label: RegionLabel,
    pub bbox: BBox,
    pub page: u32,
    pub score: f64,
}

pub fn parse_layout_file(path: impl AsRef<Path>) -> Result<Vec<LayoutRegion>, LayoutError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LayoutError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_layout_text(&text, &path.display().to_string())
}

/// Parses `page label x0 y0 x1 y1 score` lines. Blank lines are skipped.
pub fn parse_layout_text(text: &str, source_name: &str) -> Result<Vec<LayoutRegion>, LayoutError> {
    let mut regions = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| LayoutError::Line {
            source_name: source_name.to_string(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", fields.len())));
        }
        let page: u32 = fields[0]
            .parse()
            .ok()
            .filter(|&p| p >= 1)
            .ok_or_else(|| err(format!("bad page '{}'", fields[0])))?;
        let label: RegionLabel = fields[1].parse().map_err(err)?;
        let mut coords = [0.0f64; 5];
        for (slot, field) in coords.iter_mut().zip(&fields[2..]) {
            *slot = field
                .parse()
                .map_err(|_| err(format!("bad number '{field}'")))?;
        }
        let [x0, y0, x1, y1, score] = coords;
        let bbox = BBox::new(x0, y0, x1, y1).map_err(|e| err(e.to_string()))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(err(format!("score {score} outside [0, 1]")));
        }
        regions.push(LayoutRegion {
            label,
            bbox,
            page,
            score,
        });
    }
    Ok(regions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let r = parse_layout_text("2 page_header 50 30 550 60 0.98\n", "t").unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].page, 2);
        assert_eq!(r[0].label, RegionLabel::PageHeader);
        assert_eq!(r[0].bbox.x1(), 550.0);
    }

    #[test]
    fn inverted_box_rejected() {
        let err = parse_layout_text("1 figure 10 10 300 300 0.9\n1 caption 500 30 400 60 0.9\n", "t")
            .unwrap_err();
        assert!(matches!(err, LayoutError::Line { line: 2, .. }));
    }

    #[test]
    fn bad_label_names_line() {
        let err = parse_layout_text("\n1 sidebar 0 0 1 1 0.5\n", "regions.txt").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("regions.txt:2"), "{msg}");
        assert!(msg.contains("sidebar"), "{msg}");
    }

    #[test]
    fn label_round_trip() {
        for l in RegionLabel::ALL {
            assert_eq!(l.as_str().parse::<RegionLabel>().unwrap(), l);
        }
    }
}
