use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::classify::ScoreVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores ≥ threshold count as positive; the first point uses +inf.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub label: String,
    pub points: Vec<RocPoint>,
}

/// Threshold sweep over the distinct scores in descending order, starting
/// at (0, 0). Tied scores move together.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: scores.len(),
            truth: truth.len(),
        });
    }
    if let Some(&bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(EvalError::InvalidScore(bad));
    }
    let positives = truth.iter().filter(|&&t| t).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::Degenerate(
            "ROC needs at least one positive and one negative instance".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold,
        });
    }
    Ok(RocCurve {
        label: String::new(),
        points,
    })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// One curve per label, treating that label as positive.
pub fn one_vs_rest_roc<T: AsRef<str>>(scores: &[ScoreVector], truth: &[T]) -> Result<Vec<RocCurve>, EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: scores.len(),
            truth: truth.len(),
        });
    }
    let first = scores.first().ok_or(EvalError::Empty)?;
    let labels = first.label_set();
    if scores.iter().any(|s| s.label_set() != labels) {
        return Err(EvalError::Degenerate("score vectors use different label sets".into()));
    }
    let truth_idx = truth
        .iter()
        .map(|t| {
            labels
                .index_of(t.as_ref())
                .ok_or_else(|| EvalError::UnknownLabel(t.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    labels
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let col: Vec<f64> = scores.iter().map(|s| s.scores()[c]).collect();
            let bin: Vec<bool> = truth_idx.iter().map(|&t| t == c).collect();
            let mut curve = roc_curve(&col, &bin)?;
            curve.label = name.to_string();
            Ok(curve)
        })
        .collect()
}
