use std::collections::BTreeMap;

use super::{BlockType, OcrBlock};

pub const PAGE_SEPARATOR: char = '\u{000C}';

fn ordered_lines(blocks: &[OcrBlock]) -> Vec<&OcrBlock> {
    let mut lines: Vec<&OcrBlock> = blocks
        .iter()
        .filter(|b| b.block_type == BlockType::Line)
        .collect();
    // text and id only break exact geometric ties, keeping the result
    // independent of input order
    lines.sort_by(|a, b| {
        a.page
            .cmp(&b.page)
            .then(a.bbox.y0().total_cmp(&b.bbox.y0()))
            .then(a.bbox.x0().total_cmp(&b.bbox.x0()))
            .then_with(|| a.text.cmp(&b.text))
            .then_with(|| a.block_id.cmp(&b.block_id))
    });
    lines
}

/// Per-page text: trimmed LINE texts in `(y0, x0)` order joined by `\n`.
/// Pages without any nonempty line are absent.
pub fn assemble_pages(blocks: &[OcrBlock]) -> BTreeMap<u32, String> {
    let mut pages: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for line in ordered_lines(blocks) {
        let text = line.text.trim();
        if !text.is_empty() {
            pages.entry(line.page).or_default().push(text);
        }
    }
    pages
        .into_iter()
        .map(|(page, lines)| (page, lines.join("\n")))
        .collect()
}

/// Reading-ordered text; pages are separated by a form feed.
pub fn assemble_text(blocks: &[OcrBlock]) -> String {
    let sep = PAGE_SEPARATOR.to_string();
    assemble_pages(blocks)
        .into_values()
        .collect::<Vec<_>>()
        .join(&sep)
}
