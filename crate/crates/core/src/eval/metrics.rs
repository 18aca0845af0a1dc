use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::classify::{Prediction, PredictionKind};
use crate::corpus::LabelSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub true_negative: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }
}

/// One-vs-rest counts per label.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionCounts {
    pub label_set: Arc<LabelSet>,
    pub counts: Vec<ClassCounts>,
    pub n_instances: usize,
}

/// Counts from predicted and true label names.
pub fn confusion_from_labels<P: AsRef<str>, T: AsRef<str>>(
    predicted: &[P],
    truth: &[T],
    label_set: &Arc<LabelSet>,
) -> Result<ConfusionCounts, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predicted.len(),
            truth: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvalError::Empty);
    }
    let index = |l: &str| {
        label_set
            .index_of(l)
            .ok_or_else(|| EvalError::UnknownLabel(l.to_string()))
    };
    let n = predicted.len() as u64;
    let mut counts = vec![ClassCounts::default(); label_set.len()];
    for (p, t) in predicted.iter().zip(truth) {
        let (p, t) = (index(p.as_ref())?, index(t.as_ref())?);
        if p == t {
            counts[p].true_positive += 1;
        } else {
            counts[p].false_positive += 1;
            counts[t].false_negative += 1;
        }
    }
    for c in &mut counts {
        c.true_negative = n - c.true_positive - c.false_positive - c.false_negative;
    }
    Ok(ConfusionCounts {
        label_set: Arc::clone(label_set),
        counts,
        n_instances: predicted.len(),
    })
}

/// Counts from single-label predictions.
pub fn confusion<T: AsRef<str>>(
    predictions: &[Prediction],
    truth: &[T],
    label_set: &Arc<LabelSet>,
) -> Result<ConfusionCounts, EvalError> {
    let labels = predictions
        .iter()
        .map(|p| match p {
            Prediction::Single(l) => Ok(l.label.as_str()),
            other => Err(EvalError::KindMismatch {
                expected: PredictionKind::Single,
                found: other.kind(),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    confusion_from_labels(&labels, truth, label_set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub micro_avg: Averages,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class, macro and micro precision / recall / F1. A zero denominator
/// yields 0.
pub fn precision_recall_f1(c: &ConfusionCounts) -> Metrics {
    let per_class: Vec<ClassMetrics> = c
        .label_set
        .iter()
        .zip(&c.counts)
        .map(|(label, k)| {
            let precision = ratio(k.true_positive, k.true_positive + k.false_positive);
            let recall = ratio(k.true_positive, k.true_positive + k.false_negative);
            ClassMetrics {
                label: label.to_string(),
                precision,
                recall,
                f1: f1(precision, recall),
                support: k.true_positive + k.false_negative,
            }
        })
        .collect();
    let n = per_class.len().max(1) as f64;
    let macro_avg = Averages {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
    };
    let tp: u64 = c.counts.iter().map(|k| k.true_positive).sum();
    let fp: u64 = c.counts.iter().map(|k| k.false_positive).sum();
    let fneg: u64 = c.counts.iter().map(|k| k.false_negative).sum();
    let (mp, mr) = (ratio(tp, tp + fp), ratio(tp, tp + fneg));
    Metrics {
        accuracy: ratio(tp, c.n_instances as u64),
        macro_avg,
        micro_avg: Averages {
            precision: mp,
            recall: mr,
            f1: f1(mp, mr),
        },
        per_class,
    }
}

/// Fraction of instances whose true label is among the top-k labels.
pub fn topk_accuracy<T: AsRef<str>>(predictions: &[Prediction], truth: &[T]) -> Result<f64, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut k: Option<usize> = None;
    let mut hits = 0usize;
    for (p, t) in predictions.iter().zip(truth) {
        let labels = match p {
            Prediction::Topk { labels } => labels,
            other => {
                return Err(EvalError::KindMismatch {
                    expected: PredictionKind::Topk,
                    found: other.kind(),
                })
            }
        };
        match k {
            None => k = Some(labels.len()),
            Some(k0) if k0 != labels.len() => return Err(EvalError::MixedK(k0, labels.len())),
            Some(_) => {}
        }
        if labels.iter().any(|l| l.label == t.as_ref()) {
            hits += 1;
        }
    }
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopkSummary {
    pub k: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model_id: Option<String>,
    pub prompt_id: Option<String>,
    pub seed: Option<u64>,
    /// Left empty by default so reports stay byte-identical across reruns.
    pub timestamp: Option<String>,
}

/// Serialized with a fixed key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label_set_id: String,
    pub n_instances: usize,
    pub default_average: String,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub micro_avg: Averages,
    pub per_class: Vec<ClassMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topk: Option<TopkSummary>,
    pub run: RunMetadata,
}

impl MetricsReport {
    pub fn new(counts: &ConfusionCounts, run: RunMetadata) -> Self {
        let m = precision_recall_f1(counts);
        MetricsReport {
            label_set_id: counts.label_set.fingerprint(),
            n_instances: counts.n_instances,
            default_average: "macro".into(),
            accuracy: m.accuracy,
            macro_avg: m.macro_avg,
            micro_avg: m.micro_avg,
            per_class: m.per_class,
            topk: None,
            run,
        }
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            accuracy: self.accuracy,
            macro_avg: self.macro_avg,
            micro_avg: self.micro_avg,
            per_class: self.per_class.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
