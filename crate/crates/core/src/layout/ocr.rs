use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BBox, LayoutError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BlockType {
    Page,
    Line,
    Word,
}

impl BlockType {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "PAGE" => Some(BlockType::Page),
            "LINE" => Some(BlockType::Line),
            "WORD" => Some(BlockType::Word),
            _ => None,
        }
    }
}

/// A positional block from an OCR dump, box in fractional page coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrBlock {
    pub block_id: String,
    pub block_type: BlockType,
    pub text: String,
    pub bbox: BBox,
    pub confidence: f64,
    pub page: u32,
    pub children: Vec<String>,
}

#[derive(Deserialize)]
#[serde(rename_all = "PascalCase")]
struct RawBlock {
    id: String,
    block_type: String,
    #[serde(default)]
    text: Option<String>,
    page: Option<i64>,
    #[serde(default)]
    confidence: Option<f64>,
    geometry: Option<RawGeometry>,
    #[serde(default)]
    relationships: Option<Vec<RawRelationship>>,
}

#[derive(Deserialize)]
#[serde(rename_all = "PascalCase")]
struct RawGeometry {
    bounding_box: RawBox,
}

#[derive(Deserialize)]
#[serde(rename_all = "PascalCase")]
struct RawBox {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "PascalCase")]
struct RawRelationship {
    #[serde(rename = "Type")]
    kind: String,
    #[serde(default)]
    ids: Vec<String>,
}

const PAGE_BOX_TOLERANCE: f64 = 1e-6;
// small overshoot past the page edge is clamped; anything beyond is rejected
const EDGE_SLACK: f64 = 0.05;

pub fn parse_ocr_dump(path: impl AsRef<Path>) -> Result<Vec<OcrBlock>, LayoutError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LayoutError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_ocr_json(&text)
}

/// Parses and validates the JSON array form of an OCR dump.
pub fn parse_ocr_json(json: &str) -> Result<Vec<OcrBlock>, LayoutError> {
    let raw: Vec<RawBlock> =
        serde_json::from_str(json).map_err(|e| LayoutError::Schema(e.to_string()))?;
    let mut blocks = Vec::with_capacity(raw.len());
    let mut seen = HashSet::new();
    for r in raw {
        if !seen.insert(r.id.clone()) {
            return Err(LayoutError::Schema(format!("duplicate block id '{}'", r.id)));
        }
        blocks.push(convert(r)?);
    }

    let types: HashMap<&str, (BlockType, u32)> = blocks
        .iter()
        .map(|b| (b.block_id.as_str(), (b.block_type, b.page)))
        .collect();
    for b in &blocks {
        for child in &b.children {
            let Some(&(child_type, child_page)) = types.get(child.as_str()) else {
                return Err(LayoutError::DanglingChild {
                    block: b.block_id.clone(),
                    child: child.clone(),
                });
            };
            if b.block_type == BlockType::Line && child_type != BlockType::Word {
                return Err(LayoutError::Schema(format!(
                    "LINE '{}' has non-WORD child '{}'",
                    b.block_id, child
                )));
            }
            if b.block_type == BlockType::Word {
                return Err(LayoutError::Schema(format!(
                    "WORD '{}' cannot have children",
                    b.block_id
                )));
            }
            if child_page != b.page {
                return Err(LayoutError::Schema(format!(
                    "block '{}' on page {} has child '{}' on page {}",
                    b.block_id, b.page, child, child_page
                )));
            }
        }
    }
    Ok(blocks)
}

fn convert(r: RawBlock) -> Result<OcrBlock, LayoutError> {
    let schema = |msg: String| LayoutError::Schema(format!("block '{}': {msg}", r.id));
    let block_type = BlockType::parse(&r.block_type)
        .ok_or_else(|| schema(format!("unknown BlockType '{}'", r.block_type)))?;
    let page = match r.page {
        Some(p) if p >= 1 && p <= u32::MAX as i64 => p as u32,
        Some(p) => return Err(schema(format!("page {p} is not a positive integer"))),
        None => return Err(schema("missing Page".into())),
    };
    let confidence = match (r.confidence, block_type) {
        (Some(c), _) => c,
        (None, BlockType::Page) => 100.0,
        (None, _) => return Err(schema("missing Confidence".into())),
    };
    if !(0.0..=100.0).contains(&confidence) {
        return Err(schema(format!("confidence {confidence} outside [0, 100]")));
    }
    let geometry = r.geometry.as_ref().ok_or_else(|| schema("missing Geometry".into()))?;
    let g = &geometry.bounding_box;
    let corners = [g.left, g.top, g.left + g.width, g.top + g.height];
    if corners
        .iter()
        .any(|v| !v.is_finite() || *v < -EDGE_SLACK || *v > 1.0 + EDGE_SLACK)
    {
        return Err(schema(format!("bounding box {corners:?} is not fractional")));
    }
    let c = corners.map(|v| v.clamp(0.0, 1.0));
    let bbox = BBox::new(c[0], c[1], c[2], c[3]).map_err(|e| schema(e.to_string()))?;
    if block_type == BlockType::Page {
        let full = [0.0, 0.0, 1.0, 1.0];
        if c.iter().zip(full).any(|(v, f)| (v - f).abs() > PAGE_BOX_TOLERANCE) {
            return Err(schema("PAGE bounding box must cover the full page".into()));
        }
    }
    let children = r
        .relationships
        .unwrap_or_default()
        .into_iter()
        .filter(|rel| rel.kind == "CHILD")
        .flat_map(|rel| rel.ids)
        .collect();
    let text = match block_type {
        BlockType::Page => String::new(),
        _ => r.text.unwrap_or_default(),
    };
    Ok(OcrBlock {
        block_id: r.id,
        block_type,
        text,
        bbox,
        confidence,
        page,
        children,
    })
}
