use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Calibration, ClassifyError, ScoreVector};
use crate::backend::{BackendError, HttpEndpoint, RetryPolicy};
use crate::corpus::LabelSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteScores {
    pub scores: Vec<f64>,
    pub calibration: Calibration,
}

/// An external scorer returning one score per requested label.
pub trait ScoreBackend: Send + Sync {
    fn score(&self, text: &str, labels: &[String]) -> Result<RemoteScores, BackendError>;
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    text: &'a str,
    labels: &'a [String],
}

#[derive(Debug, Clone)]
pub struct HttpScoreBackend {
    pub endpoint: HttpEndpoint,
    pub retry: RetryPolicy,
}

impl ScoreBackend for HttpScoreBackend {
    fn score(&self, text: &str, labels: &[String]) -> Result<RemoteScores, BackendError> {
        self.retry
            .run(|| self.endpoint.post_json(&ScoreRequest { text, labels }))
    }
}

/// Scores `text` remotely and checks the reply against the label set.
pub fn remote_scores(
    backend: &dyn ScoreBackend,
    text: &str,
    label_set: &Arc<LabelSet>,
) -> Result<ScoreVector, ClassifyError> {
    let reply = backend.score(text, label_set.as_slice())?;
    if reply.scores.len() != label_set.len() {
        return Err(ClassifyError::Contract(format!(
            "backend returned {} scores for {} labels",
            reply.scores.len(),
            label_set.len()
        )));
    }
    ScoreVector::new(Arc::clone(label_set), reply.scores, reply.calibration)
        .map_err(|e| ClassifyError::Contract(e.to_string()))
}
