use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use clap::{Args, ValueEnum};
use etdchap::classify::{
    calibrate, remote_scores, to_single, to_topk, Calibration, HttpScoreBackend, Prediction,
    ScoreVector, ScoredLabel, TextClassifier,
};
use etdchap::llm::{
    generate, map_two_level, normalize_label, parse_single_label, parse_two_level,
    GenerationBackend, GenerationRecord, HttpGenerationBackend, NormalizedLabel, PromptSpec,
    SingleLabel, TokenBucket,
};
use etdchap::records::{write_records, PredictionRecord};

use super::{select, LabelKind, Subset};
use crate::failure::{fail, Failure};
use crate::output::{write_atomic, RunLog};
use crate::pipeline::{Context, SegmentRef, MODEL_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Single,
    Topk,
    #[value(name = "two_level")]
    TwoLevel,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Single => "single",
            Kind::Topk => "topk",
            Kind::TwoLevel => "two_level",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    /// The model written by `train`.
    Native,
    /// A remote scoring endpoint.
    Remote,
    /// A text-generation endpoint driven by prompts.
    Llm,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Native => "native",
            Source::Remote => "remote",
            Source::Llm => "llm",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Defaults to `native` for single/topk and `llm` for two_level.
    #[arg(long, value_enum)]
    pub source: Option<Source>,
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub subset: Subset,
    /// Defaults to `predictions/<kind>_<source>.jsonl` under the output dir.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

enum Scorer {
    Native(TextClassifier),
    Remote(HttpScoreBackend, Arc<etdchap::corpus::LabelSet>),
    Llm {
        backend: HttpGenerationBackend,
        retry: etdchap::backend::RetryPolicy,
        spec: Box<PromptSpec>,
    },
}

struct Outcome {
    record: Option<PredictionRecord>,
    generations: Vec<GenerationRecord>,
    unparsed: Option<String>,
}

fn scored(kind: Kind, scores: &ScoreVector, k: usize) -> Result<Prediction> {
    let sig = match scores.calibration() {
        Calibration::RawMargin => calibrate(scores, Calibration::Sigmoid)?,
        _ => scores.clone(),
    };
    Ok(match kind {
        Kind::Single => to_single(&sig)?,
        Kind::Topk => {
            if sig.calibration() != Calibration::Sigmoid {
                bail!("top-k labels need independent sigmoid scores, backend sent {:?}", sig.calibration());
            }
            to_topk(&sig, k.min(sig.len()))?
        }
        Kind::TwoLevel => unreachable!("two-level labels come from generation"),
    })
}

fn record_with_scores(r: &SegmentRef, p: &Prediction, scores: &ScoreVector) -> PredictionRecord {
    let mut rec = PredictionRecord::new(&r.doc_id, &r.segment, p);
    let sig = match scores.calibration() {
        Calibration::RawMargin => calibrate(scores, Calibration::Sigmoid).ok(),
        _ => Some(scores.clone()),
    };
    rec.scores = sig.map(|s| s.scores().to_vec());
    rec
}

pub fn run(ctx: &Context, args: &ClassifyArgs) -> Result<()> {
    let mut log = RunLog::new("classify");
    let source = args.source.unwrap_or(match args.kind {
        Kind::TwoLevel => Source::Llm,
        _ => Source::Native,
    });
    match (args.kind, source) {
        (Kind::TwoLevel, Source::Native | Source::Remote) => {
            return Err(fail(Failure::Config, "two_level predictions need --source llm"))
        }
        (Kind::Topk, Source::Llm) => {
            return Err(fail(Failure::Config, "topk predictions need --source native or remote"))
        }
        _ => {}
    }
    let chapters = ctx.chapters()?;
    let selected = select(ctx, &chapters, args.subset)?;
    if selected.is_empty() {
        bail!("no chapters selected");
    }

    let scorer = match source {
        Source::Native => {
            let path = ctx.output(MODEL_FILE);
            Scorer::Native(
                TextClassifier::load(&path).with_context(|| format!("loading {} (run `train` first)", path.display()))?,
            )
        }
        Source::Remote => {
            let e = ctx
                .cfg
                .backends
                .scores
                .as_ref()
                .ok_or_else(|| fail(Failure::Config, "backends.scores is not configured"))?;
            Scorer::Remote(
                HttpScoreBackend {
                    endpoint: e.http(),
                    retry: e.retry,
                },
                ctx.label_set()?,
            )
        }
        Source::Llm => {
            let g = ctx
                .cfg
                .backends
                .generation
                .as_ref()
                .ok_or_else(|| fail(Failure::Config, "backends.generation is not configured"))?;
            let label_kind = if args.kind == Kind::TwoLevel {
                LabelKind::TwoLevel
            } else {
                LabelKind::Single
            };
            Scorer::Llm {
                backend: HttpGenerationBackend {
                    endpoint: g.endpoint.http(),
                    model_id: g.model_id.clone(),
                    limiter: g
                        .requests_per_sec
                        .map(|r| Arc::new(TokenBucket::new(r.max(1.0), r))),
                },
                retry: g.endpoint.retry,
                spec: Box::new(super::prompt::build_spec(ctx, label_kind, &chapters)?),
            }
        }
    };
    let provider = ctx.embedding_provider();
    let threshold = ctx.cfg.prompt.accept_threshold;
    let top_k = ctx.cfg.classifier.top_k;

    let outcomes = ctx.par_map(&selected, |(r, text)| -> Result<Outcome> {
        let done = |record: PredictionRecord| Outcome {
            record: Some(record),
            generations: Vec::new(),
            unparsed: None,
        };
        match &scorer {
            Scorer::Native(clf) => {
                let scores = clf.scores(text)?;
                let p = scored(args.kind, &scores, top_k)?;
                let mut rec = record_with_scores(r, &p, &scores);
                rec.model_id = Some(format!("linear-ovr-{}", clf.model.label_set().fingerprint()));
                Ok(done(rec))
            }
            Scorer::Remote(backend, labels) => {
                let scores = remote_scores(backend, text, labels)?;
                let p = scored(args.kind, &scores, top_k)?;
                let mut rec = record_with_scores(r, &p, &scores);
                rec.model_id = Some("remote-scores".into());
                Ok(done(rec))
            }
            Scorer::Llm { backend, retry, spec } => {
                let prompt = etdchap::llm::render_prompt(spec, text)?;
                let generations = generate(backend, &prompt, &ctx.cfg.generation, retry)?;
                let response = &generations[0].response;
                let prediction = match args.kind {
                    Kind::TwoLevel => parse_two_level(response).and_then(|mut t| {
                        map_two_level(&mut t, &ctx.taxonomy, provider.as_ref(), threshold)?;
                        Ok(Prediction::TwoLevel(t))
                    }),
                    _ => parse_single_label(response, &spec.label_inventory).and_then(|s| {
                        Ok(Prediction::Single(match s {
                            SingleLabel::Canonical(label) => ScoredLabel { label, score: 1.0 },
                            SingleLabel::FreeText(t) => {
                                match normalize_label(&t, &spec.label_inventory, provider.as_ref(), threshold)? {
                                    NormalizedLabel::Mapped { label, score } => ScoredLabel { label, score },
                                    NormalizedLabel::Unmapped { score, .. } => ScoredLabel { label: t, score },
                                }
                            }
                        }))
                    }),
                };
                let (record, unparsed) = match prediction {
                    Ok(p) => {
                        let mut rec = PredictionRecord::new(&r.doc_id, &r.segment, &p);
                        rec.prompt_id = Some(spec.template.id().to_string());
                        rec.model_id = Some(backend.model_id().to_string());
                        (Some(rec), None)
                    }
                    Err(etdchap::llm::LlmError::Parse { message, .. }) => (None, Some(message)),
                    Err(e) => return Err(e.into()),
                };
                Ok(Outcome {
                    record,
                    generations,
                    unparsed,
                })
            }
        }
    });

    let mut records = Vec::new();
    let mut unparsed = 0;
    for ((r, _), outcome) in selected.iter().zip(outcomes) {
        let outcome = outcome.with_context(|| format!("classifying {}/{}", r.doc_id, r.segment))?;
        for g in &outcome.generations {
            log.event(
                "generation",
                serde_json::json!({
                    "doc_id": r.doc_id, "segment": r.segment, "repeat": g.repeat, "model_id": g.model_id,
                    "requested_at_ms": g.requested_at_ms, "responded_at_ms": g.responded_at_ms,
                    "response": g.response,
                }),
            );
        }
        if let Some(message) = outcome.unparsed {
            log::warn!("{}/{}: unparseable response: {message}", r.doc_id, r.segment);
            log.event("unparsed", serde_json::json!({"doc_id": r.doc_id, "segment": r.segment, "message": message}));
            unparsed += 1;
        }
        records.extend(outcome.record);
    }

    let path = args.output.clone().unwrap_or_else(|| {
        ctx.output(&format!("predictions/{}_{}.jsonl", args.kind.name(), source.name()))
    });
    let mut buf = Vec::new();
    write_records(&mut buf, &records)?;
    write_atomic(&path, &buf)?;
    log.finish(&ctx.cfg.paths.output_dir)?;
    println!(
        "classify: {} {} predictions from {} ({} unparseable) -> {}",
        records.len(),
        args.kind.name(),
        source.name(),
        unparsed,
        path.display()
    );
    Ok(())
}
