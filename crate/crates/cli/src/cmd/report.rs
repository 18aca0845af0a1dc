use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context as _, Result};
use etdchap::eval::run_stddev;

use super::evaluate::EvalSummary;
use crate::output::{write_atomic, write_json, RunLog};
use crate::pipeline::{csv_bytes, Context};

#[derive(serde::Serialize)]
struct Spread {
    kind: String,
    runs: usize,
    mean_macro_f1: f64,
    stddev_macro_f1: f64,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

pub fn run(ctx: &Context) -> Result<()> {
    let mut log = RunLog::new("report");
    let eval_dir = ctx.output("eval");
    let mut summaries = Vec::new();
    if eval_dir.is_dir() {
        let mut dirs: Vec<_> = std::fs::read_dir(&eval_dir)
            .with_context(|| format!("listing {}", eval_dir.display()))?
            .collect::<Result<_, _>>()?;
        dirs.sort_by_key(|e| e.file_name());
        for entry in dirs {
            let path = entry.path().join("summary.json");
            if !path.is_file() {
                continue;
            }
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let s: EvalSummary =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            summaries.push(s);
        }
    }
    if summaries.is_empty() {
        bail!("no evaluation outputs under {} (run `evaluate` first)", eval_dir.display());
    }

    let mut by_kind: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in &summaries {
        by_kind.entry(s.kind.to_string()).or_default().push(s.macro_f1);
    }
    let mut spreads = Vec::new();
    for (kind, f1s) in &by_kind {
        if f1s.len() < 2 {
            continue;
        }
        spreads.push(Spread {
            kind: kind.clone(),
            runs: f1s.len(),
            mean_macro_f1: f1s.iter().sum::<f64>() / f1s.len() as f64,
            stddev_macro_f1: run_stddev(f1s)?,
        });
    }

    let dir = ctx.cfg.out_dir("report")?;
    #[derive(serde::Serialize)]
    struct Row<'a> {
        name: &'a str,
        kind: String,
        n_instances: usize,
        accuracy: f64,
        macro_f1: f64,
        micro_f1: f64,
        topk_accuracy: Option<f64>,
        similarity_at_or_above_cut: Option<f64>,
        model_id: Option<&'a str>,
        prompt_id: Option<&'a str>,
    }
    let rows: Vec<Row> = summaries
        .iter()
        .map(|s| Row {
            name: &s.name,
            kind: s.kind.to_string(),
            n_instances: s.n_instances,
            accuracy: s.accuracy,
            macro_f1: s.macro_f1,
            micro_f1: s.micro_f1,
            topk_accuracy: s.topk_accuracy,
            similarity_at_or_above_cut: s.similarity_at_or_above_cut,
            model_id: s.model_id.as_deref(),
            prompt_id: s.prompt_id.as_deref(),
        })
        .collect();
    write_atomic(&dir.join("summary.csv"), &csv_bytes(&rows)?)?;
    write_json(&dir.join("spread.json"), &spreads)?;

    let mut md = String::from("# Classification runs\n\n");
    md.push_str("| run | kind | n | accuracy | macro-F1 | micro-F1 | top-k | sim >= 0.6 | model | prompt |\n");
    md.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for s in &summaries {
        writeln!(
            md,
            "| {} | {} | {} | {:.4} | {:.4} | {:.4} | {} | {} | {} | {} |",
            s.name,
            s.kind,
            s.n_instances,
            s.accuracy,
            s.macro_f1,
            s.micro_f1,
            fmt_opt(s.topk_accuracy),
            fmt_opt(s.similarity_at_or_above_cut),
            s.model_id.as_deref().unwrap_or("-"),
            s.prompt_id.as_deref().unwrap_or("-"),
        )?;
    }
    if !spreads.is_empty() {
        md.push_str("\n## Run-to-run spread\n\n| kind | runs | mean macro-F1 | stddev |\n|---|---|---|---|\n");
        for s in &spreads {
            writeln!(md, "| {} | {} | {:.4} | {:.4} |", s.kind, s.runs, s.mean_macro_f1, s.stddev_macro_f1)?;
        }
    }
    write_atomic(&dir.join("report.md"), md.as_bytes())?;
    log.event("report", serde_json::json!({"runs": summaries.len()}));
    log.finish(&ctx.cfg.paths.output_dir)?;
    println!("report: {} runs -> {}", summaries.len(), dir.display());
    Ok(())
}
