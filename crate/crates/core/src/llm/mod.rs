//! Prompting text-generation models and turning their free-text answers into
//! canonical labels.

mod embed;
mod generate;
mod normalize;
mod parse;
mod prompt;
mod ratelimit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendError;
use crate::corpus::CategoryPath;

pub use embed::{
    EmbeddingProvider, EmbeddingVector, HttpEmbeddingProvider, LocalTrigramProvider,
    LOCAL_EMBEDDING_DIM,
};
pub use generate::{
    generate, GenerationBackend, GenerationConfig, GenerationRecord, GenerationRequest,
    HttpGenerationBackend,
};
pub use normalize::{
    map_two_level, normalize_label, LabelIndex, NormalizedLabel, DEFAULT_ACCEPT_THRESHOLD,
};
pub use parse::{parse_single_label, parse_two_level, SingleLabel};
pub use prompt::{
    instruction_record, render_prompt, InstructionRecord, PromptExample, PromptMode, PromptSpec,
    PromptTemplate, CHARS_PER_TOKEN, SINGLE_LABEL_DIRECTIVE, TWO_LEVEL_DIRECTIVE,
};
pub use ratelimit::TokenBucket;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("text is empty")]
    EmptyText,
    #[error("invalid prompt template '{id}': {message}")]
    Template { id: String, message: String },
    #[error("unknown prompt template '{0}'")]
    UnknownTemplate(String),
    #[error("invalid prompt spec: {0}")]
    Spec(String),
    #[error("prompt budget cannot be satisfied: {0}")]
    UnsatisfiableBudget(String),
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("cannot parse response: {message} (raw: {raw:?})")]
    Parse { message: String, raw: String },
    #[error("embedding error: {0}")]
    Embedding(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// A (category, subcategory) answer from a generative model, optionally
/// aligned with the canonical taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelLabel {
    pub category: String,
    pub subcategory: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_category: Option<CategoryPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_score: Option<f64>,
}

impl TwoLevelLabel {
    pub fn new(category: impl Into<String>, subcategory: impl Into<String>) -> Self {
        TwoLevelLabel {
            category: category.into(),
            subcategory: subcategory.into(),
            canonical_category: None,
            match_score: None,
        }
    }
}
