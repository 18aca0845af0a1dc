use serde::{Deserialize, Serialize};

use super::{EmbeddingProvider, EmbeddingVector, LlmError, TwoLevelLabel};
use crate::corpus::{CategoryPath, LabelSet, Taxonomy};
use crate::eval::cosine;

pub const DEFAULT_ACCEPT_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NormalizedLabel {
    Mapped { label: String, score: f64 },
    /// Below threshold; the best candidate is kept for human review.
    Unmapped { best_candidate: String, score: f64 },
}

impl NormalizedLabel {
    pub fn score(&self) -> f64 {
        match self {
            NormalizedLabel::Mapped { score, .. } | NormalizedLabel::Unmapped { score, .. } => *score,
        }
    }

    pub fn candidate(&self) -> &str {
        match self {
            NormalizedLabel::Mapped { label, .. } => label,
            NormalizedLabel::Unmapped { best_candidate, .. } => best_candidate,
        }
    }

    pub fn mapped(&self) -> Option<&str> {
        match self {
            NormalizedLabel::Mapped { label, .. } => Some(label),
            NormalizedLabel::Unmapped { .. } => None,
        }
    }
}

/// Precomputed embeddings of a fixed list of candidate names.
pub struct LabelIndex<'p> {
    provider: &'p dyn EmbeddingProvider,
    names: Vec<String>,
    vectors: Vec<EmbeddingVector>,
}

impl<'p> LabelIndex<'p> {
    pub fn new<S: AsRef<str>>(provider: &'p dyn EmbeddingProvider, names: &[S]) -> Result<Self, LlmError> {
        if names.is_empty() {
            return Err(LlmError::Spec("no candidate labels".into()));
        }
        let refs: Vec<&str> = names.iter().map(AsRef::as_ref).collect();
        let vectors = provider.embed_batch(&refs)?;
        Ok(LabelIndex {
            provider,
            names: refs.into_iter().map(str::to_string).collect(),
            vectors,
        })
    }

    /// Cosine of `text` against every candidate, in candidate order.
    pub fn similarities(&self, text: &str) -> Result<Vec<f64>, LlmError> {
        let query = self.provider.embed(text)?;
        self.vectors
            .iter()
            .map(|v| cosine(&query, v).map_err(|e| LlmError::Embedding(e.to_string())))
            .collect()
    }

    /// Index and cosine of the closest candidate; ties go to the lower index.
    pub fn best(&self, text: &str) -> Result<(usize, f64), LlmError> {
        let sims = self.similarities(text)?;
        let mut best = 0;
        for (i, &s) in sims.iter().enumerate() {
            if s > sims[best] {
                best = i;
            }
        }
        Ok((best, sims[best]))
    }

    pub fn normalize(&self, text: &str, accept_threshold: f64) -> Result<NormalizedLabel, LlmError> {
        let (i, score) = self.best(text)?;
        let name = self.names[i].clone();
        Ok(if score >= accept_threshold {
            NormalizedLabel::Mapped { label: name, score }
        } else {
            NormalizedLabel::Unmapped {
                best_candidate: name,
                score,
            }
        })
    }
}

/// Maps free text to the canonical label with the highest embedding cosine,
/// provided it reaches `accept_threshold`.
pub fn normalize_label(
    free_text: &str,
    label_set: &LabelSet,
    provider: &dyn EmbeddingProvider,
    accept_threshold: f64,
) -> Result<NormalizedLabel, LlmError> {
    LabelIndex::new(provider, label_set.as_slice())?.normalize(free_text, accept_threshold)
}

/// Aligns a two-level answer with a taxonomy leaf using the subcategory (or
/// the category when no subcategory was given). Sets `match_score` always
/// and `canonical_category` when the score reaches `accept_threshold`.
pub fn map_two_level(
    label: &mut TwoLevelLabel,
    taxonomy: &Taxonomy,
    provider: &dyn EmbeddingProvider,
    accept_threshold: f64,
) -> Result<(), LlmError> {
    let leaves: Vec<CategoryPath> = taxonomy.leaves();
    let names: Vec<&str> = leaves.iter().map(|l| l.level3.as_str()).collect();
    let index = LabelIndex::new(provider, &names)?;
    let query = if label.subcategory.trim().is_empty() {
        &label.category
    } else {
        &label.subcategory
    };
    let (i, score) = index.best(query)?;
    label.match_score = Some(score);
    label.canonical_category = (score >= accept_threshold).then(|| leaves[i].clone());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::LocalTrigramProvider;

    fn labels() -> LabelSet {
        LabelSet::new(["Linguistics", "Political science", "Mechanical engineering", "History"]).unwrap()
    }

    #[test]
    fn exact_label_scores_one() {
        let out = normalize_label("History", &labels(), &LocalTrigramProvider, 0.6).unwrap();
        assert_eq!(out.mapped(), Some("History"));
        assert!((out.score() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_above_one_never_maps() {
        let out = normalize_label("History", &labels(), &LocalTrigramProvider, 1.01).unwrap();
        assert!(matches!(out, NormalizedLabel::Unmapped { ref best_candidate, .. } if best_candidate == "History"));
    }

    #[test]
    fn variants() {
        let out = normalize_label("linguistic science", &labels(), &LocalTrigramProvider, 0.6).unwrap();
        assert_eq!(out.candidate(), "Linguistics");
        let out = normalize_label(
            "political science and international relations",
            &labels(),
            &LocalTrigramProvider,
            0.6,
        )
        .unwrap();
        assert_eq!(out.candidate(), "Political science");
    }

    #[test]
    fn threshold_monotone() {
        let p = LocalTrigramProvider;
        for text in ["linguistic science", "war history", "engines", "zzz"] {
            let mut was_mapped = true;
            for t in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
                let m = normalize_label(text, &labels(), &p, t).unwrap().mapped().is_some();
                assert!(was_mapped || !m, "{text} at {t}");
                was_mapped = m;
            }
        }
    }

    #[test]
    fn two_level_mapping() {
        let tax = Taxonomy::parse(
            "Engineering\tElectrical and Computer Engineering\tElectrical engineering\t0544\n\
             Engineering\tMaterials\tMaterials science\t0794\n\
             Humanities\tLanguage\tLinguistics\t0290\n",
        )
        .unwrap();
        let mut l = TwoLevelLabel::new("Electrical and Computer Engineering", "Materials Science and Engineering");
        map_two_level(&mut l, &tax, &LocalTrigramProvider, 0.5).unwrap();
        assert_eq!(l.canonical_category.as_ref().unwrap().level3, "Materials science");
        assert!(l.match_score.is_some());
        let mut l = TwoLevelLabel::new("Quantum gravity", "");
        map_two_level(&mut l, &tax, &LocalTrigramProvider, 0.99).unwrap();
        assert!(l.canonical_category.is_none());
        assert!(l.match_score.is_some());
    }
}
