use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::geometry::normalize_to_page;
use super::{containment, BlockType, LayoutError, LayoutRegion, OcrBlock, RegionLabel};
use crate::corpus::PageDims;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    drop_labels: BTreeSet<RegionLabel>,
    containment_threshold: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            drop_labels: [
                RegionLabel::PageHeader,
                RegionLabel::PageFooter,
                RegionLabel::Caption,
                RegionLabel::Figure,
                RegionLabel::Equation,
            ]
            .into_iter()
            .collect(),
            containment_threshold: 0.5,
        }
    }
}

impl FilterPolicy {
    pub fn new(
        drop_labels: impl IntoIterator<Item = RegionLabel>,
        containment_threshold: f64,
    ) -> Result<Self, LayoutError> {
        if !(containment_threshold > 0.0 && containment_threshold <= 1.0) {
            return Err(LayoutError::Policy(format!(
                "containment threshold {containment_threshold} outside (0, 1]"
            )));
        }
        Ok(FilterPolicy {
            drop_labels: drop_labels.into_iter().collect(),
            containment_threshold,
        })
    }

    /// Policy that drops nothing.
    pub fn keep_all() -> Self {
        FilterPolicy {
            drop_labels: BTreeSet::new(),
            containment_threshold: 0.5,
        }
    }

    pub fn drop_labels(&self) -> &BTreeSet<RegionLabel> {
        &self.drop_labels
    }

    pub fn containment_threshold(&self) -> f64 {
        self.containment_threshold
    }

    pub fn drops(&self, label: RegionLabel) -> bool {
        self.drop_labels.contains(&label)
    }
}

/// Converts pixel-space regions to fractional page space using per-page
/// dimensions (`dims[page - 1]`).
pub fn normalize_regions(
    regions: &[LayoutRegion],
    dims: &[PageDims],
) -> Result<Vec<LayoutRegion>, LayoutError> {
    regions
        .iter()
        .map(|r| {
            let page_dims = dims
                .get((r.page as usize).wrapping_sub(1))
                .ok_or(LayoutError::PageOutOfRange {
                    page: r.page,
                    pages: dims.len(),
                })?;
            Ok(LayoutRegion {
                bbox: normalize_to_page(&r.bbox, *page_dims)?,
                ..r.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub blocks: Vec<OcrBlock>,
    /// Dropped LINE blocks keyed by the label of the first matching region.
    pub dropped_lines: BTreeMap<RegionLabel, usize>,
}

/// Drops LINE blocks covered by drop-labeled regions; WORDs follow their
/// parent LINE. `dims` converts pixel regions first; pass `None` when the
/// regions are already fractional.
pub fn filter_blocks_with_stats(
    blocks: &[OcrBlock],
    regions: &[LayoutRegion],
    dims: Option<&[PageDims]>,
    policy: &FilterPolicy,
) -> Result<FilterOutcome, LayoutError> {
    let normalized;
    let regions = match dims {
        Some(dims) => {
            normalized = normalize_regions(regions, dims)?;
            &normalized[..]
        }
        None => regions,
    };

    let mut by_page: HashMap<u32, Vec<&LayoutRegion>> = HashMap::new();
    for r in regions.iter().filter(|r| policy.drops(r.label)) {
        by_page.entry(r.page).or_default().push(r);
    }
    let hit = |b: &OcrBlock| -> Option<RegionLabel> {
        by_page.get(&b.page).and_then(|rs| {
            rs.iter()
                .find(|r| containment(&b.bbox, &r.bbox) >= policy.containment_threshold)
                .map(|r| r.label)
        })
    };

    let mut parent_of: HashMap<&str, &str> = HashMap::new();
    for b in blocks.iter().filter(|b| b.block_type == BlockType::Line) {
        for c in &b.children {
            parent_of.insert(c.as_str(), b.block_id.as_str());
        }
    }

    let mut dropped_lines = BTreeMap::new();
    let mut dropped_ids: HashSet<&str> = HashSet::new();
    for b in blocks.iter().filter(|b| b.block_type == BlockType::Line) {
        if let Some(label) = hit(b) {
            *dropped_lines.entry(label).or_insert(0) += 1;
            dropped_ids.insert(b.block_id.as_str());
        }
    }

    let kept = blocks
        .iter()
        .filter(|b| match b.block_type {
            BlockType::Page => true,
            BlockType::Line => !dropped_ids.contains(b.block_id.as_str()),
            BlockType::Word => match parent_of.get(b.block_id.as_str()) {
                Some(parent) => !dropped_ids.contains(parent),
                None => hit(b).is_none(),
            },
        })
        .cloned()
        .collect();
    Ok(FilterOutcome {
        blocks: kept,
        dropped_lines,
    })
}

pub fn filter_blocks(
    blocks: &[OcrBlock],
    regions: &[LayoutRegion],
    dims: Option<&[PageDims]>,
    policy: &FilterPolicy,
) -> Result<Vec<OcrBlock>, LayoutError> {
    filter_blocks_with_stats(blocks, regions, dims, policy).map(|o| o.blocks)
}
