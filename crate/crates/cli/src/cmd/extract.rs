use std::collections::BTreeMap;

use anyhow::{Context as _, Result};
use etdchap::layout::RegionLabel;
use etdchap::segment::{resolve_segments, SegmentSource};
use serde::Serialize;

use crate::output::{write_atomic, write_json, RunLog};
use crate::pipeline::{csv_bytes, Context, SegmentRef, INDEX_FILE};

#[derive(Debug, Serialize)]
struct DocExtraction {
    doc_id: String,
    source: SegmentSource,
    segments: usize,
    dropped_lines: BTreeMap<RegionLabel, usize>,
}

/// Filters OCR blocks against layout regions, segments each document and
/// writes one `doc_id.label.txt` per segment.
pub fn run(ctx: &Context) -> Result<()> {
    let mut log = RunLog::new("extract");
    let manual = ctx.manual_manifests()?;
    let policy = ctx.cfg.filter.policy()?;
    if ctx.cfg.paths.layout_dir.is_none() {
        log::warn!("paths.layout_dir is not set; text is extracted unfiltered");
    }
    let dir = ctx.cfg.out_dir("text")?;

    let results = ctx.par_map(&ctx.docs, |doc| -> Result<(Vec<SegmentRef>, DocExtraction)> {
        let pages = ctx.page_texts(doc, Some(&policy))?;
        let (segments, source) = resolve_segments(doc, manual.get(doc.doc_id()), &pages.texts)
            .with_context(|| format!("document '{}'", doc.doc_id()))?;
        let source_name = match source {
            SegmentSource::Manual => "manual",
            SegmentSource::Detected => "detected",
        };
        let mut refs = Vec::new();
        for s in &segments {
            let file = format!("{}.{}.txt", doc.doc_id(), s.label);
            write_atomic(&dir.join(&file), s.text.as_bytes())?;
            refs.push(SegmentRef {
                doc_id: doc.doc_id().to_string(),
                segment: s.label.to_string(),
                page_start: s.page_start,
                page_end: s.page_end,
                source: source_name.to_string(),
                file,
            });
        }
        let summary = DocExtraction {
            doc_id: doc.doc_id().to_string(),
            source,
            segments: segments.len(),
            dropped_lines: pages.dropped_lines,
        };
        Ok((refs, summary))
    });

    let mut index = Vec::new();
    let mut summaries = Vec::new();
    for r in results {
        let (refs, summary) = r?;
        index.extend(refs);
        summaries.push(summary);
    }
    write_atomic(&ctx.output(INDEX_FILE), &csv_bytes(&index)?)?;
    write_json(&dir.join("extraction.json"), &summaries)?;
    let dropped: usize = summaries.iter().flat_map(|s| s.dropped_lines.values()).sum();
    log.event("extracted", serde_json::json!({"segments": index.len(), "dropped_lines": dropped}));
    log.finish(&ctx.cfg.paths.output_dir)?;
    println!(
        "extract: {} documents, {} segments, {dropped} lines dropped by the layout filter",
        summaries.len(),
        index.len()
    );
    Ok(())
}
