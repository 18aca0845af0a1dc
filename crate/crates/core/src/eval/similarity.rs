use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::llm::EmbeddingVector;

pub const HISTOGRAM_EDGES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
/// Similarity at or above which a prediction counts as a match.
pub const SIMILARITY_CUT: f64 = 0.6;

/// `u·v / (‖u‖‖v‖)`, clamped to [-1, 1].
pub fn cosine_slices(u: &[f64], v: &[f64]) -> Result<f64, EvalError> {
    if u.len() != v.len() {
        return Err(EvalError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EvalError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EvalError> {
    cosine_slices(&u.values, &v.values)
}

/// Counts over [0,.2), [.2,.4), [.4,.6), [.6,.8) and [.8,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityHistogram {
    pub edges: [f64; 6],
    pub counts: [usize; 5],
    pub total: usize,
    pub at_or_above_cut: usize,
    pub fraction_at_or_above_cut: f64,
}

pub fn similarity_histogram(values: &[f64]) -> Result<SimilarityHistogram, EvalError> {
    let mut counts = [0usize; 5];
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(EvalError::OutOfRange(v));
        }
        let bin = HISTOGRAM_EDGES[1..5].iter().take_while(|&&e| v >= e).count();
        counts[bin] += 1;
    }
    let at_or_above_cut = values.iter().filter(|&&v| v >= SIMILARITY_CUT).count();
    Ok(SimilarityHistogram {
        edges: HISTOGRAM_EDGES,
        counts,
        total: values.len(),
        at_or_above_cut,
        fraction_at_or_above_cut: if values.is_empty() {
            0.0
        } else {
            at_or_above_cut as f64 / values.len() as f64
        },
    })
}

/// Population standard deviation (divisor n).
pub fn run_stddev(values: &[f64]) -> Result<f64, EvalError> {
    if values.len() < 2 {
        return Err(EvalError::TooFewRuns(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        assert!((cosine_slices(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_slices(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_slices(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(cosine_slices(&[0.0, 0.0], &[1.0, 0.0]), Err(EvalError::ZeroVector)));
        assert!(matches!(cosine_slices(&[1.0], &[1.0, 0.0]), Err(EvalError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn edge_placement() {
        let h = similarity_histogram(&[0.0, 0.2, 1.0]).unwrap();
        assert_eq!(h.counts, [1, 1, 0, 0, 1]);
        let h = similarity_histogram(&[0.6, 0.8, 0.59999999, 0.4, 0.19999]).unwrap();
        assert_eq!(h.counts, [1, 0, 2, 1, 1]);
        assert_eq!(h.at_or_above_cut, 2);
        assert!(similarity_histogram(&[1.0000001]).is_err());
        assert!(similarity_histogram(&[-0.1]).is_err());
        assert!(similarity_histogram(&[f64::NAN]).is_err());
    }

    #[test]
    fn stddev_examples() {
        assert_eq!(run_stddev(&[0.61, 0.61, 0.61]).unwrap(), 0.0);
        assert_eq!(run_stddev(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(matches!(run_stddev(&[0.3]), Err(EvalError::TooFewRuns(1))));
    }

    proptest! {
        #[test]
        fn histogram_matches_loop(values in proptest::collection::vec(0.0f64..=1.0, 0..300)) {
            let h = similarity_histogram(&values).unwrap();
            prop_assert_eq!(h.counts.iter().sum::<usize>(), values.len());
            let mut brute = [0usize; 5];
            for &v in &values {
                let mut placed = false;
                for b in 0..5 {
                    let (lo, hi) = (HISTOGRAM_EDGES[b], HISTOGRAM_EDGES[b + 1]);
                    if (b == 4 && v >= lo && v <= hi) || (v >= lo && v < hi) {
                        brute[b] += 1;
                        placed = true;
                        break;
                    }
                }
                prop_assert!(placed);
            }
            prop_assert_eq!(h.counts, brute);
        }

        #[test]
        fn cosine_symmetric_and_scale_invariant(
            u in proptest::collection::vec(-10.0f64..10.0, 1..20),
            seed in proptest::collection::vec(-10.0f64..10.0, 20),
            k in 0.01f64..100.0,
        ) {
            let v = &seed[..u.len()];
            prop_assume!(u.iter().any(|x| *x != 0.0) && v.iter().any(|x| *x != 0.0));
            let a = cosine_slices(&u, v).unwrap();
            prop_assert!((a - cosine_slices(v, &u).unwrap()).abs() < 1e-12);
            let scaled: Vec<f64> = u.iter().map(|x| x * k).collect();
            prop_assert!((a - cosine_slices(&scaled, v).unwrap()).abs() < 1e-9);
        }
    }
}
