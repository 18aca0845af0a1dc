use std::path::{Path, PathBuf};

use anyhow::Result;
use etdchap::backend::{HttpEndpoint, RetryPolicy};
use etdchap::classify::TrainConfig;
use etdchap::layout::{FilterPolicy, RegionLabel};
use etdchap::llm::{GenerationConfig, PromptMode, DEFAULT_ACCEPT_THRESHOLD};
use serde::Deserialize;

use crate::failure::{fail, Failure, TagExt};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub prompt: PromptSection,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub backends: Backends,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// `doc_id,department,page_count` CSV with sibling `.dims` files.
    pub corpus: PathBuf,
    pub taxonomy: PathBuf,
    pub aliases: Option<PathBuf>,
    /// `<doc_id>.json` OCR dumps.
    pub ocr_dir: Option<PathBuf>,
    /// `<doc_id>.txt` layout-detector output.
    pub layout_dir: Option<PathBuf>,
    /// Human-authored `doc_id,label,page_start,page_end` manifests.
    pub segments: Option<PathBuf>,
    /// Optional `doc_id,segment,label` ground truth overriding departments.
    pub truth: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub drop_labels: Vec<RegionLabel>,
    pub containment_threshold: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        let policy = FilterPolicy::default();
        FilterSection {
            drop_labels: policy.drop_labels().iter().copied().collect(),
            containment_threshold: policy.containment_threshold(),
        }
    }
}

impl FilterSection {
    pub fn policy(&self) -> Result<FilterPolicy> {
        FilterPolicy::new(self.drop_labels.iter().copied(), self.containment_threshold)
            .tag(Failure::Config, "invalid [filter] section")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub epochs: u32,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_df: u32,
    pub max_features: usize,
    pub train_fraction: f64,
    pub top_k: usize,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        ClassifierSection {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            lambda: t.lambda,
            min_df: 1,
            max_features: 50_000,
            train_fraction: 0.8,
            top_k: etdchap::classify::DEFAULT_TOP_K,
        }
    }
}

impl ClassifierSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            lambda: self.lambda,
            seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSection {
    /// Built-in template id, or the id given to `template_file`.
    pub template: String,
    pub template_file: Option<PathBuf>,
    /// Required with `template_file`.
    pub mode: Option<PromptMode>,
    pub max_context_tokens: usize,
    pub few_shot_examples: usize,
    pub example_chars: usize,
    pub accept_threshold: f64,
}

impl Default for PromptSection {
    fn default() -> Self {
        PromptSection {
            template: "two_level_v1".into(),
            template_file: None,
            mode: None,
            max_context_tokens: 4096,
            few_shot_examples: 3,
            example_chars: 600,
            accept_threshold: DEFAULT_ACCEPT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Backends {
    pub generation: Option<GenerationEndpoint>,
    pub scores: Option<Endpoint>,
    pub embedding: Option<EmbeddingEndpoint>,
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationEndpoint {
    #[serde(flatten)]
    pub endpoint: Endpoint,
    pub model_id: String,
    /// Client-side request rate; unlimited when absent.
    pub requests_per_sec: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingEndpoint {
    #[serde(flatten)]
    pub endpoint: Endpoint,
    pub provider_id: String,
}

/// Connection settings for one HTTP backend.
#[derive(Debug, Clone, Deserialize)]
pub struct Endpoint {
    pub url: String,
    pub token_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl Endpoint {
    pub fn http(&self) -> HttpEndpoint {
        HttpEndpoint {
            url: self.url.clone(),
            token_env: self.token_env.clone(),
            timeout_secs: self.timeout_secs,
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .tag(Failure::Config, format!("cannot read config {}", path.display()))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).tag(Failure::Config, format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        resolve(base, &mut p.corpus);
        resolve(base, &mut p.taxonomy);
        resolve(base, &mut p.output_dir);
        for path in [
            &mut p.aliases,
            &mut p.ocr_dir,
            &mut p.layout_dir,
            &mut p.segments,
            &mut p.truth,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, path);
        }
        if let Some(t) = &mut self.prompt.template_file {
            resolve(base, t);
        }
    }

    fn validate(&self) -> Result<()> {
        let p = &self.paths;
        let inputs = [
            ("paths.corpus", Some(&p.corpus)),
            ("paths.taxonomy", Some(&p.taxonomy)),
            ("paths.aliases", p.aliases.as_ref()),
            ("paths.ocr_dir", p.ocr_dir.as_ref()),
            ("paths.layout_dir", p.layout_dir.as_ref()),
            ("paths.segments", p.segments.as_ref()),
            ("paths.truth", p.truth.as_ref()),
            ("prompt.template_file", self.prompt.template_file.as_ref()),
        ];
        for (key, path) in inputs {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(fail(
                        Failure::Config,
                        format!("{key}: {} does not exist", path.display()),
                    ));
                }
            }
        }
        self.filter.policy()?;
        let c = &self.classifier;
        if !(c.train_fraction > 0.0 && c.train_fraction < 1.0) {
            return Err(fail(Failure::Config, "classifier.train_fraction must lie in (0, 1)"));
        }
        if c.top_k == 0 {
            return Err(fail(Failure::Config, "classifier.top_k must be at least 1"));
        }
        if self.prompt.template_file.is_some() && self.prompt.mode.is_none() {
            return Err(fail(Failure::Config, "prompt.template_file needs prompt.mode"));
        }
        if let Some(g) = &self.backends.generation {
            if g.requests_per_sec.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
                return Err(fail(Failure::Config, "backends.generation.requests_per_sec must be positive"));
            }
        }
        self.generation
            .validate()
            .tag(Failure::Config, "invalid [generation] section")?;
        Ok(())
    }

    /// Directory for a stage's outputs, created on demand.
    pub fn out_dir(&self, stage: &str) -> Result<PathBuf> {
        let dir = self.paths.output_dir.join(stage);
        std::fs::create_dir_all(&dir).tag(Failure::Config, format!("cannot create {}", dir.display()))?;
        Ok(dir)
    }
}
