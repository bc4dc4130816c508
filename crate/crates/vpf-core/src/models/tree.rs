//! CART-style trees: gini classification trees (decision tree, forest) and
//! second-order regression trees (boosting).
//!
//! Split search is count-based and breaks ties toward the lowest feature
//! index, then the lowest threshold, so a fit depends only on the multiset
//! of training rows, never on their order.

use serde::{Deserialize, Serialize};

use crate::hashing::{mix64, SplitMix64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassNode {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Class distribution over the model's class list.
        distribution: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTree {
    pub nodes: Vec<ClassNode>,
}

impl ClassTree {
    pub fn leaf_distribution(&self, row: &[f64]) -> &[f64] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                ClassNode::Leaf { distribution } => return distribution,
                ClassNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// Settings for one gini tree fit.
pub struct ClassTreeConfig {
    pub n_classes: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `None` uses all features.
    pub features_per_split: Option<usize>,
    /// Seed for per-node feature sampling (ignored when all features are used).
    pub seed: u64,
}

/// Fit a gini classification tree on the rows listed in `indices`
/// (repetitions act as integer weights).
pub fn fit_class_tree(
    x: &[f64],
    n_cols: usize,
    y: &[usize],
    indices: &[usize],
    config: &ClassTreeConfig,
) -> ClassTree {
    let mut nodes = Vec::new();
    build_class_node(x, n_cols, y, indices, config, 0, config.seed, &mut nodes);
    ClassTree { nodes }
}

fn class_counts(y: &[usize], indices: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &i in indices {
        counts[y[i]] += 1;
    }
    counts
}

fn gini_from_counts(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn make_leaf(counts: &[usize], total: usize, nodes: &mut Vec<ClassNode>) -> usize {
    let t = total.max(1) as f64;
    let distribution = counts.iter().map(|&c| c as f64 / t).collect();
    nodes.push(ClassNode::Leaf { distribution });
    nodes.len() - 1
}

/// Candidate features for one node, in ascending order. Sampling is keyed
/// by the node's path seed so it is independent of row order.
fn node_features(n_cols: usize, config: &ClassTreeConfig, node_seed: u64) -> Vec<usize> {
    match config.features_per_split {
        Some(k) if k < n_cols => {
            let mut rng = SplitMix64::new(node_seed);
            let mut pool: Vec<usize> = (0..n_cols).collect();
            for i in 0..k {
                let j = i + rng.next_bounded(n_cols - i);
                pool.swap(i, j);
            }
            pool.truncate(k);
            pool.sort_unstable();
            pool
        }
        _ => (0..n_cols).collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_class_node(
    x: &[f64],
    n_cols: usize,
    y: &[usize],
    indices: &[usize],
    config: &ClassTreeConfig,
    depth: usize,
    node_seed: u64,
    nodes: &mut Vec<ClassNode>,
) -> usize {
    let total = indices.len();
    let counts = class_counts(y, indices, config.n_classes);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_exhausted = config.max_depth.map(|d| depth >= d).unwrap_or(false);
    if pure || depth_exhausted || total < 2 * config.min_samples_leaf || total < 2 {
        return make_leaf(&counts, total, nodes);
    }

    let features = node_features(n_cols, config, node_seed);
    let parent_gini = gini_from_counts(&counts, total);
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)

    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(total);
    for &feature in &features {
        sorted.clear();
        sorted.extend(indices.iter().map(|&i| (x[i * n_cols + feature], i)));
        sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

        let mut left_counts = vec![0usize; config.n_classes];
        for w in 0..total - 1 {
            left_counts[y[sorted[w].1]] += 1;
            // No threshold between equal values.
            if sorted[w].0 == sorted[w + 1].0 {
                continue;
            }
            let n_left = w + 1;
            let n_right = total - n_left;
            if n_left < config.min_samples_leaf || n_right < config.min_samples_leaf {
                continue;
            }
            let mut right_counts = counts.clone();
            for (r, l) in right_counts.iter_mut().zip(left_counts.iter()) {
                *r -= l;
            }
            let weighted = (n_left as f64 * gini_from_counts(&left_counts, n_left)
                + n_right as f64 * gini_from_counts(&right_counts, n_right))
                / total as f64;
            let gain = parent_gini - weighted;
            if gain > 1e-12 && best.map(|(g, _, _)| gain > g + 1e-12).unwrap_or(true) {
                let threshold = (sorted[w].0 + sorted[w + 1].0) / 2.0;
                best = Some((gain, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return make_leaf(&counts, total, nodes);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| x[i * n_cols + feature] <= threshold);

    let node_at = nodes.len();
    nodes.push(ClassNode::Leaf {
        distribution: Vec::new(),
    });
    let left = build_class_node(
        x,
        n_cols,
        y,
        &left_idx,
        config,
        depth + 1,
        mix64(node_seed ^ 0x01),
        nodes,
    );
    let right = build_class_node(
        x,
        n_cols,
        y,
        &right_idx,
        config,
        depth + 1,
        mix64(node_seed ^ 0x02),
        nodes,
    );
    nodes[node_at] = ClassNode::Split {
        feature,
        threshold,
        left: left as u32,
        right: right as u32,
    };
    node_at
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn value(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// Settings for one second-order regression tree fit.
pub struct RegTreeConfig {
    pub max_depth: usize,
    /// L2 regularization on leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
}

/// Fit a regression tree on gradient/hessian pairs. Leaf value is the
/// Newton step -G/(H+lambda); splits maximize the standard second-order
/// gain and require it to be positive.
pub fn fit_reg_tree(
    x: &[f64],
    n_cols: usize,
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    config: &RegTreeConfig,
) -> RegTree {
    let mut nodes = Vec::new();
    build_reg_node(x, n_cols, grad, hess, indices, config, 0, &mut nodes);
    RegTree { nodes }
}

fn leaf_value(grad_sum: f64, hess_sum: f64, lambda: f64) -> f64 {
    -grad_sum / (hess_sum + lambda)
}

fn half_score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

#[allow(clippy::too_many_arguments)]
fn build_reg_node(
    x: &[f64],
    n_cols: usize,
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    config: &RegTreeConfig,
    depth: usize,
    nodes: &mut Vec<RegNode>,
) -> usize {
    let total = indices.len();
    let g_sum: f64 = indices.iter().map(|&i| grad[i]).sum();
    let h_sum: f64 = indices.iter().map(|&i| hess[i]).sum();

    let make = |nodes: &mut Vec<RegNode>| {
        nodes.push(RegNode::Leaf {
            value: leaf_value(g_sum, h_sum, config.lambda),
        });
        nodes.len() - 1
    };

    if depth >= config.max_depth || total < 2 {
        return make(nodes);
    }

    let parent_score = half_score(g_sum, h_sum, config.lambda);
    let mut best: Option<(f64, usize, f64)> = None;

    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(total);
    for feature in 0..n_cols {
        sorted.clear();
        sorted.extend(indices.iter().map(|&i| (x[i * n_cols + feature], i)));
        sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

        let mut gl = 0.0;
        let mut hl = 0.0;
        for w in 0..total - 1 {
            let i = sorted[w].1;
            gl += grad[i];
            hl += hess[i];
            if sorted[w].0 == sorted[w + 1].0 {
                continue;
            }
            let hr = h_sum - hl;
            if hl < config.min_child_weight || hr < config.min_child_weight {
                continue;
            }
            let gr = g_sum - gl;
            let gain = 0.5
                * (half_score(gl, hl, config.lambda) + half_score(gr, hr, config.lambda)
                    - parent_score);
            if gain > 1e-12 && best.map(|(g, _, _)| gain > g + 1e-12).unwrap_or(true) {
                let threshold = (sorted[w].0 + sorted[w + 1].0) / 2.0;
                best = Some((gain, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return make(nodes);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| x[i * n_cols + feature] <= threshold);

    let node_at = nodes.len();
    nodes.push(RegNode::Leaf { value: 0.0 });
    let left = build_reg_node(x, n_cols, grad, hess, &left_idx, config, depth + 1, nodes);
    let right = build_reg_node(x, n_cols, grad, hess, &right_idx, config, depth + 1, nodes);
    nodes[node_at] = RegNode::Split {
        feature,
        threshold,
        left: left as u32,
        right: right as u32,
    };
    node_at
}
