use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ClassifyError;

/// Lowercased runs of Unicode letters and digits.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVocabulary", into = "RawVocabulary")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: u32,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawVocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: u32,
}

impl TryFrom<RawVocabulary> for Vocabulary {
    type Error = String;

    fn try_from(raw: RawVocabulary) -> Result<Self, String> {
        if raw.terms.len() != raw.doc_freq.len() {
            return Err("terms and doc_freq lengths differ".into());
        }
        if raw.doc_freq.iter().any(|&df| df == 0 || df > raw.n_docs) {
            return Err("document frequencies must lie in 1..=n_docs".into());
        }
        let index: HashMap<String, usize> = raw
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != raw.terms.len() {
            return Err("duplicate vocabulary term".into());
        }
        Ok(Vocabulary {
            terms: raw.terms,
            doc_freq: raw.doc_freq,
            n_docs: raw.n_docs,
            index,
        })
    }
}

impl From<Vocabulary> for RawVocabulary {
    fn from(v: Vocabulary) -> Self {
        RawVocabulary {
            terms: v.terms,
            doc_freq: v.doc_freq,
            n_docs: v.n_docs,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> Option<&str> {
        self.terms.get(i).map(String::as_str)
    }

    pub fn doc_freq(&self, i: usize) -> Option<u32> {
        self.doc_freq.get(i).copied()
    }

    /// `ln((1 + N) / (1 + df)) + 1`
    pub fn idf(&self, i: usize) -> f64 {
        let n = f64::from(self.n_docs);
        let df = f64::from(self.doc_freq[i]);
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }
}

/// Terms with document frequency ≥ `min_df`, keeping the `max_features` most
/// frequent (ties to the lexicographically smaller term). Indices follow
/// lexicographic term order.
pub fn build_vocabulary<S: AsRef<str>>(
    texts: &[S],
    min_df: u32,
    max_features: usize,
) -> Result<Vocabulary, ClassifyError> {
    if min_df == 0 {
        return Err(ClassifyError::InvalidParameter("min_df must be at least 1".into()));
    }
    if max_features == 0 {
        return Err(ClassifyError::InvalidParameter(
            "max_features must be at least 1".into(),
        ));
    }
    let mut df: HashMap<String, u32> = HashMap::new();
    for text in texts {
        let unique: HashSet<String> = tokenize(text.as_ref()).collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    let mut ranked: Vec<(String, u32)> = df.into_iter().filter(|(_, d)| *d >= min_df).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_features);
    let kept: BTreeMap<String, u32> = ranked.into_iter().collect();
    let (terms, doc_freq): (Vec<String>, Vec<u32>) = kept.into_iter().unzip();
    Vocabulary::try_from(RawVocabulary {
        terms,
        doc_freq,
        n_docs: texts.len() as u32,
    })
    .map_err(ClassifyError::InvalidParameter)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSparse", into = "RawSparse")]
pub struct SparseVector {
    dimension: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSparse {
    dimension: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl TryFrom<RawSparse> for SparseVector {
    type Error = ClassifyError;

    fn try_from(r: RawSparse) -> Result<Self, ClassifyError> {
        SparseVector::new(r.dimension, r.indices, r.values)
    }
}

impl From<SparseVector> for RawSparse {
    fn from(v: SparseVector) -> Self {
        RawSparse {
            dimension: v.dimension,
            indices: v.indices,
            values: v.values,
        }
    }
}

impl SparseVector {
    pub fn new(dimension: usize, indices: Vec<u32>, values: Vec<f64>) -> Result<Self, ClassifyError> {
        if indices.len() != values.len() {
            return Err(ClassifyError::InvalidVector(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ClassifyError::InvalidVector(
                "indices must be strictly ascending".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last as usize >= dimension {
                return Err(ClassifyError::InvalidVector(format!(
                    "index {last} out of range for dimension {dimension}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::InvalidVector("non-finite value".into()));
        }
        Ok(SparseVector {
            dimension,
            indices,
            values,
        })
    }

    pub fn zeros(dimension: usize) -> Self {
        SparseVector {
            dimension,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product with the first `dimension` entries of `dense`.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }
}

/// L2-normalized tf-idf vector over `vocab`; unknown tokens are ignored and a
/// text without known tokens maps to the zero vector.
pub fn featurize(text: &str, vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for token in tokenize(text) {
        if let Some(i) = vocab.index_of(&token) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let weighted: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(i, tf)| (i as u32, f64::from(tf) * vocab.idf(i)))
        .collect();
    let norm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return SparseVector::zeros(vocab.len());
    }
    let (indices, values) = weighted.into_iter().map(|(i, w)| (i, w / norm)).unzip();
    SparseVector {
        dimension: vocab.len(),
        indices,
        values,
    }
}
