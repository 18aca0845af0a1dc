use std::collections::{BTreeMap, HashSet};
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::Args;
use etdchap::classify::{PredictionKind, TextClassifier};
use etdchap::corpus::LabelSet;
use etdchap::eval::{
    auc, confusion_from_labels, cosine, roc_curve, similarity_histogram, topk_accuracy,
    write_class_csv, write_histogram_csv, write_roc_csv, MetricsReport, RunMetadata, TopkSummary,
};
use etdchap::records::{read_records, PredictionRecord};
use serde::{Deserialize, Serialize};

use crate::output::{write_atomic, write_json, RunLog};
use crate::pipeline::{Context, MODEL_FILE};

pub const UNMAPPED: &str = "(unmapped)";

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// JSON-lines prediction file written by `classify`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Report directory name under `eval/`; defaults to the file stem.
    #[arg(long)]
    pub name: Option<String>,
}

/// One evaluated run, collected by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub name: String,
    pub kind: PredictionKind,
    pub n_instances: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub topk_accuracy: Option<f64>,
    pub similarity_at_or_above_cut: Option<f64>,
    pub model_id: Option<String>,
    pub prompt_id: Option<String>,
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Label inventory for scoring: taxonomy leaves seen in truth or predictions,
/// in taxonomy order, plus a catch-all for labels outside the taxonomy.
fn scoring_labels(taxonomy: &LabelSet, truth: &[String], predicted: &[String]) -> Result<(Arc<LabelSet>, Vec<String>)> {
    let seen: HashSet<&str> = truth.iter().chain(predicted).map(String::as_str).collect();
    let mut labels: Vec<String> = taxonomy.iter().filter(|l| seen.contains(l)).map(str::to_string).collect();
    let mapped: Vec<String> = predicted
        .iter()
        .map(|p| if taxonomy.index_of(p).is_some() { p.clone() } else { UNMAPPED.to_string() })
        .collect();
    if mapped.iter().any(|p| p == UNMAPPED) {
        labels.push(UNMAPPED.to_string());
    }
    Ok((Arc::new(LabelSet::new(labels)?), mapped))
}

pub fn run(ctx: &Context, args: &EvaluateArgs) -> Result<()> {
    let mut log = RunLog::new("evaluate");
    let path = &args.predictions;
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let records = read_records(BufReader::new(file), &path.display().to_string())?;
    if records.is_empty() {
        bail!("{} holds no predictions", path.display());
    }
    let kind = records[0].kind;
    if let Some(r) = records.iter().find(|r| r.kind != kind) {
        bail!("mixed prediction kinds: {kind} and {} ({}/{})", r.kind, r.doc_id, r.segment);
    }
    let keys: Vec<(String, String)> = records.iter().map(|r| (r.doc_id.clone(), r.segment.clone())).collect();
    let mut seen = HashSet::new();
    if let Some(k) = keys.iter().find(|k| !seen.insert(*k)) {
        bail!("duplicate prediction for {}/{}", k.0, k.1);
    }
    let truth_map = ctx.truth(&keys)?;
    let truth: Vec<String> = keys
        .iter()
        .map(|k| {
            truth_map
                .get(k)
                .cloned()
                .ok_or_else(|| anyhow!("no ground truth for prediction {}/{}", k.0, k.1))
        })
        .collect::<Result<_>>()?;

    let name = match &args.name {
        Some(n) => n.clone(),
        None => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| anyhow!("cannot derive a run name from {}", path.display()))?,
    };
    let dir = ctx.cfg.out_dir(&format!("eval/{name}"))?;
    let run = RunMetadata {
        model_id: records[0].model_id.clone(),
        prompt_id: records[0].prompt_id.clone(),
        seed: Some(ctx.cfg.seed),
        timestamp: None,
    };
    let taxonomy = ctx.label_set()?;

    let predictions = records
        .iter()
        .map(PredictionRecord::prediction)
        .collect::<Result<Vec<_>, String>>()
        .map_err(|e| anyhow!(e))?;
    let predicted: Vec<String> = match kind {
        PredictionKind::TwoLevel => records
            .iter()
            .map(|r| r.canonical.clone().unwrap_or_else(|| UNMAPPED.to_string()))
            .collect(),
        _ => predictions
            .iter()
            .map(|p| p.top_label().unwrap_or(UNMAPPED).to_string())
            .collect(),
    };
    let (labels, mapped) = scoring_labels(&taxonomy, &truth, &predicted)?;
    let counts = confusion_from_labels(&mapped, &truth, &labels)?;
    let mut report = MetricsReport::new(&counts, run);
    let mut summary = EvalSummary {
        name: name.clone(),
        kind,
        n_instances: records.len(),
        accuracy: report.accuracy,
        macro_f1: report.macro_avg.f1,
        micro_f1: report.micro_avg.f1,
        topk_accuracy: None,
        similarity_at_or_above_cut: None,
        model_id: report.run.model_id.clone(),
        prompt_id: report.run.prompt_id.clone(),
    };

    if kind == PredictionKind::Topk {
        let accuracy = topk_accuracy(&predictions, &truth)?;
        report.topk = Some(TopkSummary {
            k: records[0].labels.len(),
            accuracy,
        });
        summary.topk_accuracy = Some(accuracy);
    }

    if kind == PredictionKind::TwoLevel {
        let provider = ctx.embedding_provider();
        let mut sims = Vec::with_capacity(records.len());
        for (r, t) in records.iter().zip(&truth) {
            let answer = match r.subcategory.as_deref() {
                Some(s) if !s.trim().is_empty() => s,
                _ => r.category.as_deref().unwrap_or_default(),
            };
            let a = provider.embed(answer)?;
            let b = provider.embed(t)?;
            sims.push(cosine(&a, &b)?.max(0.0));
        }
        let hist = similarity_histogram(&sims)?;
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &hist)?;
        write_atomic(&dir.join("histogram.csv"), &buf)?;
        write_json(&dir.join("similarity.json"), &hist)?;
        summary.similarity_at_or_above_cut = Some(hist.fraction_at_or_above_cut);
    }

    if records.iter().all(|r| r.scores.is_some()) {
        write_roc(ctx, &dir, &records, &truth, &taxonomy)?;
    }

    write_atomic(&dir.join("metrics.json"), report.to_json().as_bytes())?;
    let mut buf = Vec::new();
    write_class_csv(&mut buf, &report.metrics())?;
    write_atomic(&dir.join("per_class.csv"), &buf)?;
    write_json(&dir.join("summary.json"), &summary)?;
    log.event("evaluated", serde_json::json!({"name": name, "instances": records.len()}));
    log.finish(&ctx.cfg.paths.output_dir)?;

    print!(
        "evaluate {name}: {} {kind} predictions, accuracy {:.4}, macro-F1 {:.4}, micro-F1 {:.4}",
        summary.n_instances, summary.accuracy, summary.macro_f1, summary.micro_f1
    );
    if let Some(a) = summary.topk_accuracy {
        print!(", top-k accuracy {a:.4}");
    }
    if let Some(f) = summary.similarity_at_or_above_cut {
        print!(", similarity >= 0.6 for {:.1}%", f * 100.0);
    }
    println!();
    Ok(())
}

/// One-vs-rest ROC per class that has both positive and negative
/// instances, plus an `auc.csv` summary.
fn write_roc(
    ctx: &Context,
    dir: &std::path::Path,
    records: &[PredictionRecord],
    truth: &[String],
    taxonomy: &Arc<LabelSet>,
) -> Result<()> {
    let width = records[0].scores.as_ref().map_or(0, Vec::len);
    if records.iter().any(|r| r.scores.as_ref().map_or(0, Vec::len) != width) {
        bail!("score vectors differ in length");
    }
    let model_path = ctx.output(MODEL_FILE);
    let model_labels = if model_path.exists() {
        Some(Arc::clone(TextClassifier::load(&model_path)?.model.label_set()))
    } else {
        None
    };
    let Some(labels) = model_labels
        .into_iter()
        .chain([Arc::clone(taxonomy)])
        .find(|l| l.len() == width)
    else {
        log::warn!("no known label set has {width} labels; skipping ROC");
        return Ok(());
    };

    let mut aucs: BTreeMap<usize, (String, f64, usize)> = BTreeMap::new();
    for (c, label) in labels.iter().enumerate() {
        let is_pos: Vec<bool> = truth.iter().map(|t| t == label).collect();
        let positives = is_pos.iter().filter(|&&p| p).count();
        if positives == 0 || positives == is_pos.len() {
            continue;
        }
        let scores: Vec<f64> = records.iter().map(|r| r.scores.as_ref().expect("checked")[c]).collect();
        let mut curve = roc_curve(&scores, &is_pos)?;
        curve.label = label.to_string();
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &curve)?;
        write_atomic(&dir.join("roc").join(format!("{}.csv", file_safe(label))), &buf)?;
        aucs.insert(c, (label.to_string(), auc(&curve), positives));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "auc", "positives"])?;
    for (label, a, n) in aucs.values() {
        w.write_record([label.clone(), a.to_string(), n.to_string()])?;
    }
    write_atomic(&dir.join("roc").join("auc.csv"), &w.into_inner().map_err(|e| anyhow!("{e}"))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_predictions_collapse_to_one_class() {
        let tax = LabelSet::new(["a", "b", "c"]).unwrap();
        let (ls, mapped) = scoring_labels(
            &tax,
            &["c".to_string(), "a".to_string()],
            &["zzz".to_string(), "a".to_string()],
        )
        .unwrap();
        assert_eq!(ls.as_slice(), ["a", "c", UNMAPPED]);
        assert_eq!(mapped, [UNMAPPED, "a"]);
        assert_eq!(file_safe("Political Science"), "political_science");
    }
}
