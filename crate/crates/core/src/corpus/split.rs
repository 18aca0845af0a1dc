use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitParts<T> {
    pub train: Vec<T>,
    pub test: Vec<T>,
}

/// Per-label seeded split. Labels are visited in sorted order and each
/// label's members are shuffled with one ChaCha8 stream seeded from `seed`;
/// `floor(train_fraction * n)` of them go to train, the rest to test. Both
/// outputs keep the input order.
pub fn stratified_split_by<T, F>(
    records: &[T],
    label_of: F,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitParts<T>, CorpusError>
where
    T: Clone,
    F: Fn(&T) -> &str,
{
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(train_fraction));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(label_of(r)).or_default().push(i);
    }
    if let Some((label, members)) = groups.iter().find(|(_, m)| m.len() < 2) {
        return Err(CorpusError::Stratification {
            label: label.to_string(),
            count: members.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; records.len()];
    for members in groups.values_mut() {
        members.shuffle(&mut rng);
        // guard against 0.8 * 5 landing a hair under 4
        let n_train = (train_fraction * members.len() as f64 + 1e-9).floor() as usize;
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }

    let mut parts = SplitParts {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (r, train) in records.iter().zip(in_train) {
        if train {
            parts.train.push(r.clone());
        } else {
            parts.test.push(r.clone());
        }
    }
    Ok(parts)
}

/// Splits `(doc_id, label)` pairs.
pub fn stratified_split(
    records: &[(String, String)],
    train_fraction: f64,
    seed: u64,
) -> Result<SplitParts<(String, String)>, CorpusError> {
    stratified_split_by(records, |r| r.1.as_str(), train_fraction, seed)
}
