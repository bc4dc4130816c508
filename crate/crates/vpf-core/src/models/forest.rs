//! Random forest of gini trees.
//!
//! Per-tree row sampling uses a Poisson(1) approximation of the bootstrap
//! keyed by (seed, tree, row_key) rather than row position, and per-node
//! feature subsets are keyed by the node's path. Fits therefore depend only
//! on the training multiset and the seed, never on row order.

use serde::{Deserialize, Serialize};

use super::tree::{fit_class_tree, ClassTree, ClassTreeConfig};
use crate::hashing::{fnv1a_seeded, hash_unit, mix64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        RandomForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

/// Poisson(1) multiplicity from a uniform draw (inverse CDF).
fn poisson_one(u: f64) -> usize {
    let mut k = 0usize;
    let mut p = (-1.0f64).exp();
    let mut cum = p;
    while u > cum && k < 16 {
        k += 1;
        p /= k as f64;
        cum += p;
    }
    k
}

/// Multiplicity of one row in one tree's bootstrap, keyed by row identity.
pub fn bootstrap_multiplicity(seed: u64, tree_index: usize, row_key: &(String, String)) -> usize {
    let key = format!("{}\u{1}{}\u{1}{}", tree_index, row_key.0, row_key.1);
    poisson_one(hash_unit(fnv1a_seeded(seed, key.as_bytes())))
}

pub fn train_forest(
    x: &[f64],
    n_cols: usize,
    y: &[usize],
    n_classes: usize,
    row_keys: &[(String, String)],
    seed: u64,
    params: &RandomForestParams,
) -> Vec<ClassTree> {
    let features_per_split = (n_cols as f64).sqrt().floor().max(1.0) as usize;
    // A forest has at least one tree even under a degenerate config.
    let n_trees = params.n_trees.max(1);
    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let mut indices = Vec::with_capacity(y.len());
        for (i, key) in row_keys.iter().enumerate() {
            let m = bootstrap_multiplicity(seed, t, key);
            for _ in 0..m {
                indices.push(i);
            }
        }
        if indices.is_empty() {
            // Tiny inputs can sample nothing; fall back to the full set.
            indices.extend(0..y.len());
        }
        let config = ClassTreeConfig {
            n_classes,
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            features_per_split: Some(features_per_split),
            seed: mix64(seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        };
        trees.push(fit_class_tree(x, n_cols, y, &indices, &config));
    }
    trees
}

/// Mean of the member trees' leaf distributions.
pub fn forest_probabilities(trees: &[ClassTree], row: &[f64], n_classes: usize) -> Vec<f64> {
    let mut probs = vec![0.0f64; n_classes];
    for tree in trees {
        for (p, &d) in probs.iter_mut().zip(tree.leaf_distribution(row)) {
            *p += d;
        }
    }
    let n = trees.len().max(1) as f64;
    for p in &mut probs {
        *p /= n;
    }
    probs
}
