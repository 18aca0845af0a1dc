use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::backend::{HttpEndpoint, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub provider_id: String,
}

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn provider_id(&self) -> &str;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, LlmError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, LlmError> {
        self.embed_batch(&[text])?
            .pop()
            .ok_or_else(|| LlmError::Embedding("provider returned no vector".into()))
    }
}

pub const LOCAL_EMBEDDING_DIM: usize = 1024;

/// Offline provider: L2-normalized counts of hashed character trigrams.
/// Text is lowercased, non-alphanumerics become spaces, runs of spaces
/// collapse, and one space pads each end.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalTrigramProvider;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn padded(text: &str) -> Vec<char> {
    let lowered: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let mut chars = vec![' '];
    for word in lowered.split_whitespace() {
        chars.extend(word.chars());
        chars.push(' ');
    }
    chars
}

impl LocalTrigramProvider {
    pub fn vector(&self, text: &str) -> Result<EmbeddingVector, LlmError> {
        let chars = padded(text);
        if chars.len() < 3 {
            return Err(LlmError::EmptyText);
        }
        let mut values = vec![0.0; LOCAL_EMBEDDING_DIM];
        let mut buf = [0u8; 12];
        for w in chars.windows(3) {
            let mut n = 0;
            for c in w {
                n += c.encode_utf8(&mut buf[n..]).len();
            }
            values[(fnv1a(&buf[..n]) % LOCAL_EMBEDDING_DIM as u64) as usize] += 1.0;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(EmbeddingVector {
            values,
            provider_id: self.provider_id().to_string(),
        })
    }
}

impl EmbeddingProvider for LocalTrigramProvider {
    fn provider_id(&self) -> &str {
        "local-trigram-1024"
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, LlmError> {
        texts.iter().map(|t| self.vector(t)).collect()
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedReply {
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct HttpEmbeddingProvider {
    pub endpoint: HttpEndpoint,
    pub provider_id: String,
    pub retry: RetryPolicy,
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, LlmError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(LlmError::EmptyText);
        }
        let reply: EmbedReply = self.retry.run(|| self.endpoint.post_json(&EmbedRequest { texts }))?;
        if reply.vectors.len() != texts.len() {
            return Err(LlmError::Embedding(format!(
                "{} vectors for {} texts",
                reply.vectors.len(),
                texts.len()
            )));
        }
        let dim = reply.vectors.first().map_or(0, Vec::len);
        if dim == 0 || reply.vectors.iter().any(|v| v.len() != dim) {
            return Err(LlmError::Embedding("inconsistent vector dimensions".into()));
        }
        if reply.vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(LlmError::Embedding("non-finite vector component".into()));
        }
        Ok(reply
            .vectors
            .into_iter()
            .map(|values| EmbeddingVector {
                values,
                provider_id: self.provider_id.clone(),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
        a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn normalization_and_identity() {
        let p = LocalTrigramProvider;
        let a = p.embed("Linguistics").unwrap();
        let b = p.embed("  LINGUISTICS!! ").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dimension(), LOCAL_EMBEDDING_DIM);
        let n: f64 = a.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-9);
        assert!(matches!(p.embed(" !? "), Err(LlmError::EmptyText)));
    }

    #[test]
    fn padding_rule() {
        assert_eq!(padded("A-b  c").into_iter().collect::<String>(), " a b c ");
    }

    #[test]
    fn variant_closer_than_unrelated() {
        let p = LocalTrigramProvider;
        let ling = p.embed("linguistics").unwrap();
        let variant = p.embed("linguistic science").unwrap();
        let other = p.embed("mechanical engineering").unwrap();
        assert!(cos(&ling, &variant) > cos(&ling, &other));
    }
}
