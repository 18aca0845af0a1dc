//! Fusion of OCR block dumps with layout-detector regions.
//!
//! Both sources are brought into fractional, top-left-origin page space.
//! OCR dumps are already fractional; detector regions are in pixels and are
//! divided by the page dimensions. A LINE block is dropped when enough of its
//! area lies inside a region whose label is in the drop set, and the
//! surviving lines are assembled in `(page, y0, x0)` order. Reading order
//! assumes a single text column.

mod assemble;
mod filter;
mod geometry;
mod ocr;
mod regions;

use std::path::PathBuf;

use thiserror::Error;

pub use assemble::{assemble_pages, assemble_text, PAGE_SEPARATOR};
pub use filter::{filter_blocks, filter_blocks_with_stats, normalize_regions, FilterOutcome, FilterPolicy};
pub use geometry::{containment, normalize_bbox, BBox};
pub use ocr::{parse_ocr_dump, parse_ocr_json, BlockType, OcrBlock};
pub use regions::{parse_layout_file, parse_layout_text, LayoutRegion, RegionLabel};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid bounding box ({x0}, {y0}, {x1}, {y1}): need x0 < x1 and y0 < y1")]
    InvalidBBox { x0: f64, y0: f64, x1: f64, y1: f64 },
    #[error("page dimensions must be positive, got {width} x {height}")]
    InvalidDimensions { width: f64, height: f64 },
    #[error("OCR dump schema error: {0}")]
    Schema(String),
    #[error("block '{block}' references missing child '{child}'")]
    DanglingChild { block: String, child: String },
    #[error("{source_name}:{line}: {message}")]
    Line {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("region on page {page} but only {pages} page dimension entries")]
    PageOutOfRange { page: u32, pages: usize },
    #[error("invalid filter policy: {0}")]
    Policy(String),
}
