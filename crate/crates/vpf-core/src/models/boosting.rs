//! Gradient-boosted trees with softmax multiclass loss and patience-based
//! early stopping on a chronological validation slice.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::tree::{fit_reg_tree, RegTree, RegTreeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    /// Upper bound on boosting rounds.
    pub max_rounds: usize,
    /// Stop after this many rounds without validation improvement.
    pub patience: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 regularization on leaf weights.
    pub lambda: f64,
    /// Chronological tail of the training rows held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            max_rounds: 1000,
            patience: 30,
            learning_rate: 0.3,
            max_depth: 6,
            lambda: 1.0,
            validation_fraction: 0.1,
        }
    }
}

/// Fitted boosted ensemble: `rounds[r][k]` is round r's tree for class k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub rounds: Vec<Vec<RegTree>>,
    pub n_classes: usize,
    pub learning_rate: f64,
    /// Validation log-loss per trained round (empty when no slice was held out).
    pub validation_losses: Vec<f64>,
}

impl BoostedModel {
    /// Raw (pre-softmax) scores for one row.
    pub fn raw_scores(&self, row: &[f64]) -> Vec<f64> {
        let mut scores = vec![0.0f64; self.n_classes];
        for round in &self.rounds {
            for (k, tree) in round.iter().enumerate() {
                scores[k] += self.learning_rate * tree.value(row);
            }
        }
        scores
    }
}

pub fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        let e = (s - max).exp();
        *o = e;
        sum += e;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

fn log_loss(prob_true_class: f64) -> f64 {
    -(prob_true_class.max(1e-15)).ln()
}

/// Train the boosted ensemble.
///
/// `y` holds class indices into the model's class list. The chronologically
/// last `validation_fraction` of rows (by date, then row key) is held out;
/// trees are fit on the remainder only. Training is fully deterministic.
pub fn train_boosted(
    x: &[f64],
    n_cols: usize,
    y: &[usize],
    n_classes: usize,
    dates: &[NaiveDate],
    row_keys: &[(String, String)],
    params: &BoostingParams,
) -> (BoostedModel, usize) {
    let n = y.len();

    // Chronological order, keyed by (date, row_key) for determinism.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (dates[a], &row_keys[a]).cmp(&(dates[b], &row_keys[b])));
    let val_size = if n >= 5 {
        (((n as f64) * params.validation_fraction).round() as usize).clamp(1, n - 1)
    } else {
        0
    };
    let fit_rows: Vec<usize> = order[..n - val_size].to_vec();
    let val_rows: Vec<usize> = order[n - val_size..].to_vec();

    // Compact copy of the fit rows so trees index 0..len.
    let fit_x = gather_rows(x, n_cols, &fit_rows);
    let fit_row = |j: usize| &fit_x[j * n_cols..(j + 1) * n_cols];
    let row = |i: usize| &x[i * n_cols..(i + 1) * n_cols];

    // Raw scores start at zero (uniform softmax).
    let mut f_fit = vec![vec![0.0f64; n_classes]; fit_rows.len()];
    let mut f_val = vec![vec![0.0f64; n_classes]; val_rows.len()];

    let tree_config = RegTreeConfig {
        max_depth: params.max_depth,
        lambda: params.lambda,
        min_child_weight: 1.0,
    };

    let mut rounds: Vec<Vec<RegTree>> = Vec::new();
    let mut validation_losses: Vec<f64> = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_round = 0usize;
    let mut since_best = 0usize;

    let fit_indices: Vec<usize> = (0..fit_rows.len()).collect();
    let mut probs = vec![0.0f64; n_classes];
    let mut grad = vec![0.0f64; fit_rows.len()];
    let mut hess = vec![0.0f64; fit_rows.len()];
    // Per-round probabilities, recomputed once and reused across classes.
    let mut round_probs = vec![0.0f64; fit_rows.len() * n_classes];

    for round_idx in 0..params.max_rounds {
        for (j, scores) in f_fit.iter().enumerate() {
            softmax_into(scores, &mut probs);
            round_probs[j * n_classes..(j + 1) * n_classes].copy_from_slice(&probs);
        }

        let mut round_trees = Vec::with_capacity(n_classes);
        for k in 0..n_classes {
            for (j, &i) in fit_rows.iter().enumerate() {
                let p = round_probs[j * n_classes + k];
                let target = if y[i] == k { 1.0 } else { 0.0 };
                grad[j] = p - target;
                hess[j] = (p * (1.0 - p)).max(1e-16);
            }
            let tree = fit_reg_tree(&fit_x, n_cols, &grad, &hess, &fit_indices, &tree_config);
            for (j, f) in f_fit.iter_mut().enumerate() {
                f[k] += params.learning_rate * tree.value(fit_row(j));
            }
            for (j, &i) in val_rows.iter().enumerate() {
                f_val[j][k] += params.learning_rate * tree.value(row(i));
            }
            round_trees.push(tree);
        }
        rounds.push(round_trees);

        if val_size == 0 {
            best_round = round_idx + 1;
            continue;
        }

        let mut loss = 0.0;
        for (j, &i) in val_rows.iter().enumerate() {
            softmax_into(&f_val[j], &mut probs);
            loss += log_loss(probs[y[i]]);
        }
        loss /= val_rows.len() as f64;
        validation_losses.push(loss);

        if loss < best_loss - 1e-12 {
            best_loss = loss;
            best_round = round_idx + 1;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= params.patience {
                break;
            }
        }
    }

    let best_round = best_round.max(1);
    rounds.truncate(best_round);
    (
        BoostedModel {
            rounds,
            n_classes,
            learning_rate: params.learning_rate,
            validation_losses,
        },
        best_round,
    )
}

/// Copy the listed rows into a compact row-major block so tree fitting
/// indexes 0..len.
fn gather_rows(x: &[f64], n_cols: usize, rows: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * n_cols);
    for &i in rows {
        out.extend_from_slice(&x[i * n_cols..(i + 1) * n_cols]);
    }
    out
}
