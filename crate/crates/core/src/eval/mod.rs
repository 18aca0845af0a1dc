//! Evaluation: confusion counts, precision / recall / F1, top-k accuracy,
//! ROC curves and AUC, cosine similarity histograms and run-to-run spread.

mod export;
mod metrics;
mod roc;
mod similarity;

use thiserror::Error;

use crate::classify::PredictionKind;

pub use export::{write_class_csv, write_histogram_csv, write_roc_csv};
pub use metrics::{
    confusion, confusion_from_labels, precision_recall_f1, topk_accuracy, Averages, ClassCounts,
    ClassMetrics, ConfusionCounts, Metrics, MetricsReport, RunMetadata, TopkSummary,
};
pub use roc::{auc, one_vs_rest_roc, roc_curve, RocCurve, RocPoint};
pub use similarity::{
    cosine, cosine_slices, run_stddev, similarity_histogram, SimilarityHistogram, HISTOGRAM_EDGES,
    SIMILARITY_CUT,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predictions} predictions but {truth} truth labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("expected {expected} predictions, found {found}")]
    KindMismatch {
        expected: PredictionKind,
        found: PredictionKind,
    },
    #[error("label '{0}' is not in the label set")]
    UnknownLabel(String),
    #[error("top-k predictions mix k = {0} and k = {1}")]
    MixedK(usize, usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid score {0}")]
    InvalidScore(f64),
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("similarity {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("standard deviation needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
