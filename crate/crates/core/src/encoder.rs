//! Contextual encoder interface and the deterministic mock backend.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::text::{BasicTokenizer, Token, Tokenizer};

/// Summary token prepended for sentence embeddings.
pub const CLS: &str = "[CLS]";

/// A frozen contextual encoder: one output vector per input token.
pub trait EncoderBackend: Send + Sync {
    /// Maximum number of input tokens per call.
    fn max_len(&self) -> usize;

    fn dim(&self) -> usize;

    /// Output length equals input length; each vector has `dim()` entries.
    fn encode(&self, tokens: &[String]) -> Vec<Vec<f64>>;

    fn tokenize(&self, text: &str) -> Vec<Token> {
        BasicTokenizer::lowercased().tokenize(text)
    }

    /// Output vector of the summary token for a single sentence.
    fn sentence_embedding(&self, text: &str) -> Vec<f64> {
        let mut input = vec![CLS.to_string()];
        input.extend(
            self.tokenize(text)
                .into_iter()
                .take(self.max_len().saturating_sub(1))
                .map(|t| t.text),
        );
        self.encode(&input).swap_remove(0)
    }
}

/// Hash-seeded token vectors plus a fraction of the input mean, so outputs
/// depend on context but only on tokens passed to the same call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEncoder {
    pub dim: usize,
    pub max_len: usize,
    pub context_weight: f64,
}

impl Default for MockEncoder {
    fn default() -> Self {
        Self {
            dim: 16,
            max_len: 512,
            context_weight: 0.25,
        }
    }
}

impl MockEncoder {
    pub fn new(dim: usize, max_len: usize) -> Self {
        Self {
            dim,
            max_len,
            ..Self::default()
        }
    }

    /// Context-free vector of one token, components in [-1, 1).
    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let digest = Sha256::digest(token.as_bytes());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

impl EncoderBackend for MockEncoder {
    fn max_len(&self) -> usize {
        self.max_len
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, tokens: &[String]) -> Vec<Vec<f64>> {
        let base: Vec<Vec<f64>> = tokens.iter().map(|t| self.token_vector(t)).collect();
        if base.is_empty() {
            return base;
        }
        let mut mean = vec![0.0; self.dim];
        for v in &base {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        let scale = self.context_weight / base.len() as f64;
        base.into_iter()
            .map(|v| v.iter().zip(&mean).map(|(x, m)| x + scale * m).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let enc = MockEncoder::default();
        let toks: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let out = enc.encode(&toks);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|v| v.len() == 16));
        assert_eq!(out, enc.encode(&toks));
        assert!(enc.encode(&[]).is_empty());
    }

    #[test]
    fn context_changes_outputs() {
        let enc = MockEncoder::default();
        let a = enc.encode(&["x".into(), "y".into()]);
        let b = enc.encode(&["x".into(), "z".into()]);
        assert_ne!(a[0], b[0]);
    }
}
