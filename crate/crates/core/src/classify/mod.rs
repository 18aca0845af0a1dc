//! Chapter classification: tf-idf features, a one-vs-rest max-margin linear
//! model, score calibration, single / top-k predictions and a remote scorer
//! adapter.

mod features;
mod linear;
mod prediction;
mod remote;
mod scores;

use std::path::PathBuf;

use thiserror::Error;

use crate::backend::BackendError;

pub use features::{build_vocabulary, featurize, tokenize, SparseVector, Vocabulary};
pub use linear::{
    predict_scores, train_linear_ovr, LinearModel, TextClassifier, TrainConfig, MODEL_FORMAT,
    MODEL_VERSION,
};
pub use prediction::{to_single, to_topk, Prediction, PredictionKind, ScoredLabel, DEFAULT_TOP_K};
pub use remote::{remote_scores, HttpScoreBackend, RemoteScores, ScoreBackend};
pub use scores::{calibrate, Calibration, ScoreVector};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("no tokens found in any training text")]
    EmptyCorpus,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),
    #[error("label '{0}' is not in the label set")]
    UnknownLabel(String),
    #[error("class '{0}' has no training examples")]
    MissingClass(String),
    #[error("invalid scores: {0}")]
    InvalidScores(String),
    #[error("invalid prediction: {0}")]
    InvalidPrediction(String),
    #[error("backend contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("invalid model file: {0}")]
    ModelFormat(String),
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
