use serde::{Deserialize, Serialize};

use super::LayoutError;
use crate::corpus::PageDims;

/// Axis-aligned box, origin top-left, y growing downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, LayoutError> {
        let finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !finite || x0 >= x1 || y0 >= y1 {
            return Err(LayoutError::InvalidBBox { x0, y0, x1, y1 });
        }
        Ok(BBox { x0, y0, x1, y1 })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn scaled(&self, sx: f64, sy: f64) -> Result<BBox, LayoutError> {
        BBox::new(self.x0 * sx, self.y0 * sy, self.x1 * sx, self.y1 * sy)
    }
}

/// Divides pixel coordinates by the page size. Coordinates falling outside
/// `[0, 1]` are clamped (and logged); a box that collapses after clamping is
/// an error.
pub fn normalize_bbox(b: &BBox, page_width: f64, page_height: f64) -> Result<BBox, LayoutError> {
    if !(page_width > 0.0 && page_height > 0.0 && page_width.is_finite() && page_height.is_finite()) {
        return Err(LayoutError::InvalidDimensions {
            width: page_width,
            height: page_height,
        });
    }
    let raw = [
        b.x0 / page_width,
        b.y0 / page_height,
        b.x1 / page_width,
        b.y1 / page_height,
    ];
    let clamped = raw.map(|v| v.clamp(0.0, 1.0));
    if clamped != raw {
        log::debug!("clamped box {raw:?} to page bounds");
    }
    BBox::new(clamped[0], clamped[1], clamped[2], clamped[3])
}

pub(crate) fn normalize_to_page(b: &BBox, dims: PageDims) -> Result<BBox, LayoutError> {
    normalize_bbox(b, dims.width, dims.height)
}

/// Fraction of `inner`'s area that lies inside `outer`.
pub fn containment(inner: &BBox, outer: &BBox) -> f64 {
    (inner.intersection_area(outer) / inner.area()).clamp(0.0, 1.0)
}
