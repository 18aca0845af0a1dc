//! JSON-lines prediction records exchanged between `classify` and `evaluate`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{Prediction, PredictionKind, ScoredLabel};
use crate::llm::TwoLevelLabel;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// One prediction for one document segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub segment: String,
    pub kind: PredictionKind,
    pub labels: Vec<ScoredLabel>,
    pub category: Option<String>,
    pub subcategory: Option<String>,
    pub prompt_id: Option<String>,
    pub model_id: Option<String>,
    /// Canonical leaf matched to a two-level answer, with its cosine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_score: Option<f64>,
    /// Full score vector in label-set order, kept for ROC analysis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl PredictionRecord {
    pub fn new(doc_id: &str, segment: &str, prediction: &Prediction) -> Self {
        let mut r = PredictionRecord {
            doc_id: doc_id.to_string(),
            segment: segment.to_string(),
            kind: prediction.kind(),
            labels: Vec::new(),
            category: None,
            subcategory: None,
            prompt_id: None,
            model_id: None,
            canonical: None,
            match_score: None,
            scores: None,
        };
        match prediction {
            Prediction::Single(l) => r.labels = vec![l.clone()],
            Prediction::Topk { labels } => r.labels = labels.clone(),
            Prediction::TwoLevel(t) => {
                r.category = Some(t.category.clone());
                r.subcategory = Some(t.subcategory.clone());
                r.canonical = t.canonical_category.as_ref().map(|c| c.level3.clone());
                r.match_score = t.match_score;
            }
        }
        r
    }

    /// Rebuilds the prediction. Two-level records lose the full taxonomy
    /// path, keeping only what the record stores.
    pub fn prediction(&self) -> Result<Prediction, String> {
        match self.kind {
            PredictionKind::Single => match self.labels.as_slice() {
                [one] => Ok(Prediction::Single(one.clone())),
                other => Err(format!("single record carries {} labels", other.len())),
            },
            PredictionKind::Topk => Prediction::topk(self.labels.clone()).map_err(|e| e.to_string()),
            PredictionKind::TwoLevel => {
                let category = self
                    .category
                    .clone()
                    .filter(|c| !c.trim().is_empty())
                    .ok_or("two_level record without category")?;
                let mut t = TwoLevelLabel::new(category, self.subcategory.clone().unwrap_or_default());
                t.match_score = self.match_score;
                Ok(Prediction::TwoLevel(t))
            }
        }
    }
}

pub fn write_records<W: Write>(mut out: W, records: &[PredictionRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads JSON lines, skipping blank lines and checking each record's
/// kind-specific fields.
pub fn read_records<R: BufRead>(input: R, source_name: &str) -> Result<Vec<PredictionRecord>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| RecordError::Parse {
            source_name: source_name.to_string(),
            line: i + 1,
            message,
        };
        let record: PredictionRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        record.prediction().map_err(err)?;
        out.push(record);
    }
    Ok(out)
}
