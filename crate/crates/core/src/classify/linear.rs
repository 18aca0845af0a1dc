use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{featurize, Calibration, ClassifyError, ScoreVector, SparseVector, Vocabulary};
use crate::corpus::LabelSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: u32,
    /// Initial step size; the step at update t is `lr / (1 + lr * lambda * t)`.
    pub learning_rate: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            learning_rate: 0.1,
            lambda: 1e-3,
            seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::InvalidParameter(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad("lambda must be positive");
        }
        Ok(())
    }
}

/// One-vs-rest linear model. Each weight vector has `dimension + 1` entries,
/// the last being the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    label_set: Arc<LabelSet>,
    dimension: usize,
    weights: Vec<Vec<f64>>,
    config: TrainConfig,
    /// Regularized hinge objective after each epoch, per class.
    objectives: Vec<Vec<f64>>,
}

impl LinearModel {
    pub fn from_weights(
        label_set: Arc<LabelSet>,
        weights: Vec<Vec<f64>>,
        config: TrainConfig,
    ) -> Result<Self, ClassifyError> {
        let dimension = weights.first().map_or(0, |w| w.len().saturating_sub(1));
        let model = LinearModel {
            label_set,
            dimension,
            weights,
            config,
            objectives: Vec::new(),
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), ClassifyError> {
        if self.weights.len() != self.label_set.len() {
            return Err(ClassifyError::ModelFormat(format!(
                "{} weight vectors for {} labels",
                self.weights.len(),
                self.label_set.len()
            )));
        }
        for (label, w) in self.label_set.iter().zip(&self.weights) {
            if w.len() != self.dimension + 1 {
                return Err(ClassifyError::ModelFormat(format!(
                    "weights for '{label}' have length {}, expected {}",
                    w.len(),
                    self.dimension + 1
                )));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(ClassifyError::ModelFormat(format!(
                    "non-finite weight for '{label}'"
                )));
            }
        }
        Ok(())
    }

    pub fn label_set(&self) -> &Arc<LabelSet> {
        &self.label_set
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn objectives(&self) -> &[Vec<f64>] {
        &self.objectives
    }
}

struct ClassTrainer<'a> {
    features: &'a [SparseVector],
    targets: Vec<f64>,
    dimension: usize,
    config: &'a TrainConfig,
}

impl ClassTrainer<'_> {
    fn objective(&self, w: &[f64]) -> f64 {
        let (bias, dense) = (w[self.dimension], &w[..self.dimension]);
        let reg = 0.5 * self.config.lambda * dense.iter().map(|v| v * v).sum::<f64>();
        let hinge: f64 = self
            .features
            .iter()
            .zip(&self.targets)
            .map(|(x, y)| (1.0 - y * (x.dot(dense) + bias)).max(0.0))
            .sum();
        reg + hinge / self.features.len() as f64
    }

    /// Stochastic subgradient descent on the regularized hinge loss. The
    /// weight vector is stored as `scale * v` so the shrink step is O(1).
    fn train(&self, stream: u64) -> (Vec<f64>, Vec<f64>) {
        let TrainConfig {
            epochs,
            learning_rate,
            lambda,
            seed,
        } = *self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut v = vec![0.0; self.dimension];
        let mut scale = 1.0f64;
        let mut bias = 0.0f64;
        let mut t = 0u64;
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        let mut objectives = Vec::with_capacity(epochs as usize);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &self.features[i];
                let y = self.targets[i];
                let margin = y * (scale * x.dot(&v) + bias);
                t += 1;
                let eta = learning_rate / (1.0 + learning_rate * lambda * t as f64);
                scale *= 1.0 - eta * lambda;
                if margin < 1.0 {
                    let step = eta * y / scale;
                    for (j, xj) in x.iter() {
                        v[j] += step * xj;
                    }
                    bias += eta * y;
                }
                if scale < 1e-9 {
                    v.iter_mut().for_each(|vj| *vj *= scale);
                    scale = 1.0;
                }
            }
            let mut w: Vec<f64> = v.iter().map(|vj| vj * scale).collect();
            w.push(bias);
            objectives.push(self.objective(&w));
        }
        let mut w: Vec<f64> = v.into_iter().map(|vj| vj * scale).collect();
        w.push(bias);
        (w, objectives)
    }
}

/// Trains one binary hinge-loss classifier per label (classes in parallel).
/// Deterministic for a fixed config.
pub fn train_linear_ovr<S: AsRef<str>>(
    features: &[SparseVector],
    labels: &[S],
    label_set: Arc<LabelSet>,
    config: &TrainConfig,
) -> Result<LinearModel, ClassifyError> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(ClassifyError::InvalidParameter(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features.len() < 2 {
        return Err(ClassifyError::InvalidParameter(
            "at least two training examples are required".into(),
        ));
    }
    let dimension = features[0].dimension();
    if let Some(x) = features.iter().find(|x| x.dimension() != dimension) {
        return Err(ClassifyError::DimensionMismatch {
            expected: dimension,
            got: x.dimension(),
        });
    }
    let label_idx = labels
        .iter()
        .map(|l| {
            label_set
                .index_of(l.as_ref())
                .ok_or_else(|| ClassifyError::UnknownLabel(l.as_ref().to_string()))
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let mut present = vec![false; label_set.len()];
    label_idx.iter().for_each(|&i| present[i] = true);
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(ClassifyError::MissingClass(
            label_set.as_slice()[missing].clone(),
        ));
    }

    let trained: Vec<(Vec<f64>, Vec<f64>)> = (0..label_set.len())
        .into_par_iter()
        .map(|class| {
            let trainer = ClassTrainer {
                features,
                targets: label_idx
                    .iter()
                    .map(|&l| if l == class { 1.0 } else { -1.0 })
                    .collect(),
                dimension,
                config,
            };
            trainer.train(class as u64)
        })
        .collect();
    let (weights, objectives) = trained.into_iter().unzip();
    let model = LinearModel {
        label_set,
        dimension,
        weights,
        config: config.clone(),
        objectives,
    };
    model.check()?;
    Ok(model)
}

/// Per-class margins `w·x + b`.
pub fn predict_scores(model: &LinearModel, x: &SparseVector) -> Result<ScoreVector, ClassifyError> {
    if x.dimension() != model.dimension {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.dimension,
            got: x.dimension(),
        });
    }
    let scores = model
        .weights
        .iter()
        .map(|w| x.dot(w) + w[model.dimension])
        .collect();
    ScoreVector::new(Arc::clone(&model.label_set), scores, Calibration::RawMargin)
}

pub const MODEL_FORMAT: &str = "etdchap-linear-ovr";
pub const MODEL_VERSION: u32 = 1;

/// Vocabulary plus linear model: everything needed to score raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct TextClassifier {
    pub vocabulary: Vocabulary,
    pub model: LinearModel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    vocabulary: Vocabulary,
    model: LinearModel,
}

impl TextClassifier {
    pub fn new(vocabulary: Vocabulary, model: LinearModel) -> Result<Self, ClassifyError> {
        if vocabulary.len() != model.dimension() {
            return Err(ClassifyError::DimensionMismatch {
                expected: model.dimension(),
                got: vocabulary.len(),
            });
        }
        Ok(TextClassifier { vocabulary, model })
    }

    pub fn scores(&self, text: &str) -> Result<ScoreVector, ClassifyError> {
        predict_scores(&self.model, &featurize(text, &self.vocabulary))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            vocabulary: self.vocabulary.clone(),
            model: self.model.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ClassifyError::ModelFormat(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(ClassifyError::ModelFormat(format!(
                "unknown format '{}'",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(ClassifyError::ModelFormat(format!(
                "unsupported version {}",
                file.version
            )));
        }
        file.model.check()?;
        TextClassifier::new(file.vocabulary, file.model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifyError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ClassifyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
