use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::corpus::LabelSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    RawMargin,
    Sigmoid,
    Softmax,
}

/// One score per label of a shared label set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    label_set: Arc<LabelSet>,
    scores: Vec<f64>,
    calibration: Calibration,
}

const SOFTMAX_SUM_TOLERANCE: f64 = 1e-9;

impl ScoreVector {
    /// Validates length, finiteness and the range implied by `calibration`.
    /// Sigmoid and softmax scores may touch 0 or 1 when the margin saturates
    /// double precision.
    pub fn new(
        label_set: Arc<LabelSet>,
        scores: Vec<f64>,
        calibration: Calibration,
    ) -> Result<Self, ClassifyError> {
        if scores.len() != label_set.len() {
            return Err(ClassifyError::InvalidScores(format!(
                "{} scores for {} labels",
                scores.len(),
                label_set.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(ClassifyError::InvalidScores(format!("non-finite score {bad}")));
        }
        match calibration {
            Calibration::RawMargin => {}
            Calibration::Sigmoid | Calibration::Softmax => {
                if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                    return Err(ClassifyError::InvalidScores(format!(
                        "{calibration:?} score {bad} outside [0, 1]"
                    )));
                }
            }
        }
        if calibration == Calibration::Softmax {
            let sum: f64 = scores.iter().sum();
            if (sum - 1.0).abs() > SOFTMAX_SUM_TOLERANCE {
                return Err(ClassifyError::InvalidScores(format!(
                    "softmax scores sum to {sum}"
                )));
            }
        }
        Ok(ScoreVector {
            label_set,
            scores,
            calibration,
        })
    }

    pub fn label_set(&self) -> &Arc<LabelSet> {
        &self.label_set
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn calibration(&self) -> Calibration {
        self.calibration
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Index of the highest score; ties go to the lower index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &s) in self.scores.iter().enumerate() {
            if best.is_none_or(|b| s > self.scores[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// Indices sorted by descending score, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Maps raw margins to per-class sigmoid probabilities or a softmax
/// distribution.
pub fn calibrate(scores: &ScoreVector, mode: Calibration) -> Result<ScoreVector, ClassifyError> {
    if scores.calibration != Calibration::RawMargin {
        return Err(ClassifyError::InvalidScores(format!(
            "calibration expects raw margins, got {:?}",
            scores.calibration
        )));
    }
    let values = match mode {
        Calibration::RawMargin => scores.scores.clone(),
        Calibration::Sigmoid => scores.scores.iter().map(|&s| sigmoid(s)).collect(),
        Calibration::Softmax => {
            let max = scores.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.scores.iter().map(|&s| (s - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / total).collect()
        }
    };
    ScoreVector::new(Arc::clone(&scores.label_set), values, mode)
}
