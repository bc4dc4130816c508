//! Bill-content embeddings.
//!
//! The default embedder is a seeded hashed token-frequency vector: fully
//! deterministic, language-agnostic, and dependency-free. Countries with
//! real pretrained sentence embeddings slot them in through a precomputed
//! CSV keyed by bill_id, which bypasses hashing entirely.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::text::tokenize;
use crate::hashing::fnv1a_seeded;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding file has no entry for bill {0:?}")]
    EmbeddingFileMissingKey(String),
    #[error("cannot read embedding file {path}: {message}")]
    EmbeddingFileUnreadable { path: String, message: String },
}

pub trait Embedder {
    fn dim(&self) -> usize;
    /// Embed one bill's text. `bill_id` is the lookup key in precomputed mode.
    fn embed(&self, bill_id: &str, text: &str) -> Result<Vec<f64>, EmbedError>;
}

/// Hashed token-frequency embedding, L2-normalized.
#[derive(Debug, Clone)]
pub struct HashedEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashedEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashedEmbedder { dim, seed }
    }
}

/// Sign-hash salt; any constant distinct from the bucket hash works.
const SIGN_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// Hashed token-frequency vector for a text: each token lands in a seeded
/// hash bucket with a ±1 sign from a second hash, then the sum is
/// L2-normalized. Empty text maps to the zero vector.
pub fn embed_text(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut v = vec![0.0f64; dim];
    for token in tokenize(text) {
        let bucket = (fnv1a_seeded(seed, token.as_bytes()) % dim as u64) as usize;
        let sign = if fnv1a_seeded(seed ^ SIGN_SALT, token.as_bytes()) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        v[bucket] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

impl Embedder for HashedEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, _bill_id: &str, text: &str) -> Result<Vec<f64>, EmbedError> {
        Ok(embed_text(text, self.dim, self.seed))
    }
}

/// Embeddings loaded from a CSV of (bill_id, v0..v{D-1}) rows.
#[derive(Debug, Clone)]
pub struct PrecomputedEmbedder {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl PrecomputedEmbedder {
    pub fn from_csv(path: &Path) -> Result<Self, EmbedError> {
        let unreadable = |message: String| EmbedError::EmbeddingFileUnreadable {
            path: path.display().to_string(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| unreadable(e.to_string()))?;
        let dim = reader
            .headers()
            .map_err(|e| unreadable(e.to_string()))?
            .len()
            .saturating_sub(1);
        if dim == 0 {
            return Err(unreadable("expected columns bill_id, v0..".to_string()));
        }
        let mut vectors = BTreeMap::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| unreadable(format!("row {}: {e}", i + 2)))?;
            let bill_id = record.get(0).unwrap_or("").to_string();
            let mut v = Vec::with_capacity(dim);
            for j in 0..dim {
                let cell = record.get(j + 1).unwrap_or("");
                let value = cell
                    .parse::<f64>()
                    .map_err(|_| unreadable(format!("row {}: bad value {cell:?}", i + 2)))?;
                v.push(value);
            }
            vectors.insert(bill_id, v);
        }
        Ok(PrecomputedEmbedder { dim, vectors })
    }
}

impl Embedder for PrecomputedEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, bill_id: &str, _text: &str) -> Result<Vec<f64>, EmbedError> {
        self.vectors
            .get(bill_id)
            .cloned()
            .ok_or_else(|| EmbedError::EmbeddingFileMissingKey(bill_id.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_zero_vector() {
        let v = embed_text("", 8, 1);
        assert_eq!(v, vec![0.0; 8]);
        assert_eq!(embed_text("  ,. !", 8, 1), vec![0.0; 8]);
    }

    #[test]
    fn identical_texts_embed_identically() {
        let a = embed_text("public transport on saturday", 32, 7);
        let b = embed_text("public transport on saturday", 32, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn bag_of_words_is_order_invariant() {
        let a = embed_text("tax tax reform", 16, 3);
        let b = embed_text("reform tax tax", 16, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn nonempty_text_has_unit_norm() {
        let v = embed_text("carbon tax exemption for agriculture", 64, 11);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn different_seeds_change_the_embedding() {
        let a = embed_text("carbon tax", 64, 1);
        let b = embed_text("carbon tax", 64, 2);
        assert_ne!(a, b);
    }

    #[test]
    fn precomputed_lookup_and_missing_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("embeddings.csv");
        std::fs::write(&path, "bill_id,v0,v1\nb1,0.5,-0.5\n").unwrap();
        let embedder = PrecomputedEmbedder::from_csv(&path).unwrap();
        assert_eq!(embedder.dim(), 2);
        assert_eq!(embedder.embed("b1", "ignored").unwrap(), vec![0.5, -0.5]);
        match embedder.embed("b2", "") {
            Err(EmbedError::EmbeddingFileMissingKey(id)) => assert_eq!(id, "b2"),
            other => panic!("expected missing key, got {other:?}"),
        }
    }
}
