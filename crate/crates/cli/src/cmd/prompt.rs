use std::collections::HashSet;

use anyhow::{bail, Result};
use clap::Args;
use etdchap::llm::{
    instruction_record, render_prompt, PromptExample, PromptMode, PromptSpec, PromptTemplate,
    SINGLE_LABEL_DIRECTIVE, TWO_LEVEL_DIRECTIVE,
};

use super::{select, LabelKind, Subset};
use crate::failure::{Failure, TagExt};
use crate::output::{write_atomic, RunLog};
use crate::pipeline::{Context, SegmentRef};

#[derive(Debug, Clone, Args)]
pub struct PromptArgs {
    /// Answer format requested from the model.
    #[arg(long, value_enum, default_value_t = LabelKind::TwoLevel)]
    pub kind: LabelKind,
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub subset: Subset,
    /// Also write instruction-format prompt/response pairs for the
    /// training chapters.
    #[arg(long)]
    pub instructions: bool,
}

/// Prompt spec from the configured template, with few-shot examples drawn
/// from training chapters.
pub fn build_spec(ctx: &Context, kind: LabelKind, chapters: &[(SegmentRef, String)]) -> Result<PromptSpec> {
    let p = &ctx.cfg.prompt;
    let template = match (&p.template_file, p.mode) {
        (Some(path), Some(mode)) => PromptTemplate::load(path, mode),
        _ => PromptTemplate::builtin(&p.template),
    }
    .tag(Failure::Config, "invalid prompt template")?;
    let mut spec = PromptSpec::new(template, ctx.label_set()?);
    spec.max_context_tokens = p.max_context_tokens;
    spec.response_format_directive = match kind {
        LabelKind::Single => SINGLE_LABEL_DIRECTIVE,
        LabelKind::TwoLevel => TWO_LEVEL_DIRECTIVE,
    }
    .to_string();

    if p.few_shot_examples > 0 && spec.mode() == PromptMode::FewShot {
        let train = training_chapters(ctx, chapters)?;
        let keys: Vec<(String, String)> = train.iter().map(|(r, _)| r.key()).collect();
        let truth = ctx.truth(&keys)?;
        let mut used = HashSet::new();
        for (r, text) in train {
            if spec.examples.len() == p.few_shot_examples {
                break;
            }
            let label = &truth[&r.key()];
            if text.trim().is_empty() || !used.insert(label.clone()) {
                continue;
            }
            spec.examples.push(PromptExample {
                text: text.chars().take(p.example_chars).collect(),
                label: label.clone(),
            });
        }
    }
    Ok(spec)
}

/// Training chapters when a split exists, otherwise all of them.
fn training_chapters<'a>(
    ctx: &Context,
    chapters: &'a [(SegmentRef, String)],
) -> Result<Vec<&'a (SegmentRef, String)>> {
    Ok(match ctx.split_rows()? {
        Some(rows) => {
            let train: HashSet<(String, String)> = rows
                .into_iter()
                .filter(|r| r.part == "train")
                .map(|r| (r.doc_id, r.segment))
                .collect();
            chapters.iter().filter(|(r, _)| train.contains(&r.key())).collect()
        }
        None => chapters.iter().collect(),
    })
}

pub fn run(ctx: &Context, args: &PromptArgs) -> Result<()> {
    let mut log = RunLog::new("prompt");
    let chapters = ctx.chapters()?;
    let spec = build_spec(ctx, args.kind, &chapters)?;
    let selected = select(ctx, &chapters, args.subset)?;
    if selected.is_empty() {
        bail!("no chapters selected");
    }
    let dir = ctx.cfg.out_dir("prompts")?;
    let rendered = ctx.par_map(&selected, |(r, text)| render_prompt(&spec, text).map(|p| (r, p)));
    for item in rendered {
        let (r, prompt) = item?;
        write_atomic(&dir.join(format!("{}.{}.txt", r.doc_id, r.segment)), prompt.as_bytes())?;
    }

    let mut n_instructions = 0;
    if args.instructions {
        let train = training_chapters(ctx, &chapters)?;
        let keys: Vec<(String, String)> = train.iter().map(|(r, _)| r.key()).collect();
        let truth = ctx.truth(&keys)?;
        let mut lines = String::new();
        for (r, text) in train {
            let rec = instruction_record(&spec, text, &truth[&r.key()])?;
            lines.push_str(&serde_json::to_string(&rec)?);
            lines.push('\n');
            n_instructions += 1;
        }
        write_atomic(&dir.join("instructions.jsonl"), lines.as_bytes())?;
    }
    log.event(
        "rendered",
        serde_json::json!({"prompts": selected.len(), "instructions": n_instructions, "template": spec.template.id()}),
    );
    log.finish(&ctx.cfg.paths.output_dir)?;
    println!(
        "prompt: {} prompts with template {} ({} examples), {n_instructions} instruction records",
        selected.len(),
        spec.template.id(),
        spec.examples.len()
    );
    Ok(())
}
