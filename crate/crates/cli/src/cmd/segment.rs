use anyhow::Result;
use etdchap::segment::{detect_manifest, write_manifests_csv, SegmentManifest};
use serde::Serialize;

use crate::failure::{fail, Failure};
use crate::output::{write_atomic, write_json, RunLog};
use crate::pipeline::Context;

#[derive(Debug, Serialize)]
struct ManifestErrors {
    doc_id: String,
    issues: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    documents: usize,
    manual_manifests: usize,
    valid: usize,
    invalid: usize,
    detected: usize,
    errors: Vec<ManifestErrors>,
}

/// Proposes a manifest per document from heading detection and validates any
/// human-authored manifests. Fails when a human manifest is invalid.
pub fn run(ctx: &Context) -> Result<()> {
    let mut log = RunLog::new("segment");
    let manual = ctx.manual_manifests()?;
    let policy = ctx.cfg.filter.policy()?;

    let detected = ctx.par_map(&ctx.docs, |doc| -> Result<SegmentManifest> {
        let pages = ctx.page_texts(doc, Some(&policy))?;
        Ok(detect_manifest(doc.doc_id(), &pages.texts)?)
    });
    let detected = detected.into_iter().collect::<Result<Vec<_>>>()?;

    let mut errors = Vec::new();
    for (doc_id, m) in &manual {
        let issues = match ctx.doc(doc_id) {
            Some(doc) => m.issues(doc.page_count()).iter().map(ToString::to_string).collect(),
            None => vec!["document is not in the corpus manifest".to_string()],
        };
        if !issues.is_empty() {
            errors.push(ManifestErrors {
                doc_id: doc_id.clone(),
                issues,
            });
        }
    }

    let resolved: Vec<SegmentManifest> = detected
        .iter()
        .map(|d| manual.get(&d.doc_id).cloned().unwrap_or_else(|| d.clone()))
        .collect();
    let dir = ctx.cfg.out_dir("segments")?;
    write_atomic(&dir.join("detected.csv"), write_manifests_csv(&detected).as_bytes())?;
    write_atomic(&dir.join("manifests.csv"), write_manifests_csv(&resolved).as_bytes())?;
    let report = ValidationReport {
        documents: ctx.docs.len(),
        manual_manifests: manual.len(),
        valid: manual.len() - errors.len(),
        invalid: errors.len(),
        detected: ctx.docs.iter().filter(|d| !manual.contains_key(d.doc_id())).count(),
        errors,
    };
    write_json(&dir.join("validation.json"), &report)?;
    log.event("validated", serde_json::json!({"valid": report.valid, "invalid": report.invalid}));
    log.finish(&ctx.cfg.paths.output_dir)?;

    println!(
        "segment: {} documents, {} manual manifests ({} valid, {} invalid), {} detected",
        report.documents, report.manual_manifests, report.valid, report.invalid, report.detected
    );
    if report.errors.is_empty() {
        return Ok(());
    }
    let listing: Vec<String> = report
        .errors
        .iter()
        .map(|e| format!("{}: {}", e.doc_id, e.issues.join("; ")))
        .collect();
    Err(fail(
        Failure::Validation,
        format!("{} invalid segment manifests\n  {}", report.invalid, listing.join("\n  ")),
    ))
}
