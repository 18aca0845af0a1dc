use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Calibration, ClassifyError, ScoreVector};
use crate::llm::TwoLevelLabel;

pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Single,
    Topk,
    TwoLevel,
}

impl std::fmt::Display for PredictionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredictionKind::Single => "single",
            PredictionKind::Topk => "topk",
            PredictionKind::TwoLevel => "two_level",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prediction {
    Single(ScoredLabel),
    Topk { labels: Vec<ScoredLabel> },
    TwoLevel(TwoLevelLabel),
}

impl Prediction {
    /// A top-k prediction; labels must be distinct with nonincreasing scores.
    pub fn topk(labels: Vec<ScoredLabel>) -> Result<Self, ClassifyError> {
        if labels.is_empty() {
            return Err(ClassifyError::InvalidPrediction("empty top-k list".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.label.as_str())) {
            return Err(ClassifyError::InvalidPrediction(format!(
                "label '{}' repeated",
                dup.label
            )));
        }
        if labels.windows(2).any(|w| w[1].score > w[0].score) {
            return Err(ClassifyError::InvalidPrediction(
                "top-k scores must be nonincreasing".into(),
            ));
        }
        Ok(Prediction::Topk { labels })
    }

    pub fn kind(&self) -> PredictionKind {
        match self {
            Prediction::Single(_) => PredictionKind::Single,
            Prediction::Topk { .. } => PredictionKind::Topk,
            Prediction::TwoLevel(_) => PredictionKind::TwoLevel,
        }
    }

    /// Highest-ranked label, if the prediction carries canonical labels.
    pub fn top_label(&self) -> Option<&str> {
        match self {
            Prediction::Single(l) => Some(&l.label),
            Prediction::Topk { labels } => labels.first().map(|l| l.label.as_str()),
            Prediction::TwoLevel(_) => None,
        }
    }
}

/// Argmax label; ties go to the lower label index.
pub fn to_single(scores: &ScoreVector) -> Result<Prediction, ClassifyError> {
    let i = scores
        .argmax()
        .ok_or_else(|| ClassifyError::InvalidScores("empty score vector".into()))?;
    Ok(Prediction::Single(ScoredLabel {
        label: scores.label_set().as_slice()[i].clone(),
        score: scores.scores()[i],
    }))
}

/// The `k` highest sigmoid scores in descending order, ties by lower index.
pub fn to_topk(scores: &ScoreVector, k: usize) -> Result<Prediction, ClassifyError> {
    if scores.calibration() != Calibration::Sigmoid {
        return Err(ClassifyError::InvalidScores(format!(
            "top-k expects sigmoid scores, got {:?}",
            scores.calibration()
        )));
    }
    if k == 0 || k > scores.len() {
        return Err(ClassifyError::InvalidParameter(format!(
            "k = {k} must lie in 1..={}",
            scores.len()
        )));
    }
    let names = scores.label_set().as_slice();
    let labels = scores
        .ranking()
        .into_iter()
        .take(k)
        .map(|i| ScoredLabel {
            label: names[i].clone(),
            score: scores.scores()[i],
        })
        .collect();
    Prediction::topk(labels)
}
