use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use etdchap::classify::{build_vocabulary, featurize, train_linear_ovr, TextClassifier};
use etdchap::corpus::{stratified_split_by, LabelSet};

use crate::output::{write_atomic, RunLog};
use crate::pipeline::{csv_bytes, Context, SplitRow, MODEL_FILE, SPLIT_FILE};

/// Splits chapters 80/20 per label, then fits the tf-idf one-vs-rest model on
/// the training part.
pub fn run(ctx: &Context) -> Result<()> {
    let mut log = RunLog::new("train");
    let chapters = ctx.chapters()?;
    if chapters.is_empty() {
        bail!("no chapter segments to train on");
    }
    let keys: Vec<(String, String)> = chapters.iter().map(|(r, _)| r.key()).collect();
    let truth = ctx.truth(&keys)?;
    let rows: Vec<(usize, String)> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| {
            truth
                .get(k)
                .map(|l| (i, l.clone()))
                .with_context(|| format!("no ground truth for {}/{}", k.0, k.1))
        })
        .collect::<Result<_>>()?;

    let c = &ctx.cfg.classifier;
    let split = stratified_split_by(&rows, |r| r.1.as_str(), c.train_fraction, ctx.cfg.seed)
        .context("splitting chapters")?;

    let taxonomy_labels = ctx.label_set()?;
    let present: Vec<&str> = taxonomy_labels
        .iter()
        .filter(|l| split.train.iter().any(|r| r.1 == *l))
        .collect();
    let label_set = Arc::new(LabelSet::new(present.iter().copied())?);

    let texts: Vec<&str> = split.train.iter().map(|r| chapters[r.0].1.as_str()).collect();
    let labels: Vec<&str> = split.train.iter().map(|r| r.1.as_str()).collect();
    let vocab = build_vocabulary(&texts, c.min_df, c.max_features)?;
    let features: Vec<_> = ctx.par_map(&texts, |t| featurize(t, &vocab));
    let model = train_linear_ovr(&features, &labels, label_set, &c.train_config(ctx.cfg.seed))?;
    let classifier = TextClassifier::new(vocab, model)?;

    let mut split_rows: Vec<(usize, SplitRow)> = Vec::new();
    for (part, members) in [("train", &split.train), ("test", &split.test)] {
        for (i, label) in members {
            split_rows.push((
                *i,
                SplitRow {
                    doc_id: keys[*i].0.clone(),
                    segment: keys[*i].1.clone(),
                    label: label.clone(),
                    part: part.to_string(),
                },
            ));
        }
    }
    split_rows.sort_by_key(|r| r.0);
    let split_rows: Vec<SplitRow> = split_rows.into_iter().map(|r| r.1).collect();

    write_atomic(&ctx.output(MODEL_FILE), classifier.to_json().as_bytes())?;
    write_atomic(&ctx.output(SPLIT_FILE), &csv_bytes(&split_rows)?)?;
    log.event(
        "trained",
        serde_json::json!({"train": split.train.len(), "test": split.test.len(), "classes": present.len()}),
    );
    log.finish(&ctx.cfg.paths.output_dir)?;
    println!(
        "train: {} training / {} held-out chapters, {} classes, {} terms",
        split.train.len(),
        split.test.len(),
        present.len(),
        classifier.vocabulary.len()
    );
    Ok(())
}
