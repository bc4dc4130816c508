//! Gaussian naive Bayes with a variance floor.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Lower bound applied to every per-class feature variance.
    pub variance_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams {
            variance_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Per class: log prior.
    pub log_priors: Vec<f64>,
    /// Per class: per-feature mean.
    pub means: Vec<Vec<f64>>,
    /// Per class: per-feature variance, floored.
    pub variances: Vec<Vec<f64>>,
}

/// Fit class priors and per-feature Gaussian statistics. Population
/// variances (denominator n) are used and floored at `variance_floor`.
pub fn train_gaussian_nb(
    x: &[f64],
    n_cols: usize,
    y: &[usize],
    n_classes: usize,
    params: &NaiveBayesParams,
) -> GaussianNb {
    let n = y.len();
    let mut counts = vec![0usize; n_classes];
    let mut sums = vec![vec![0.0f64; n_cols]; n_classes];
    for (i, &label) in y.iter().enumerate() {
        counts[label] += 1;
        let row = &x[i * n_cols..(i + 1) * n_cols];
        for (s, &v) in sums[label].iter_mut().zip(row) {
            *s += v;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let denom = c.max(1) as f64;
            s.iter().map(|v| v / denom).collect()
        })
        .collect();

    let mut sq = vec![vec![0.0f64; n_cols]; n_classes];
    for (i, &label) in y.iter().enumerate() {
        let row = &x[i * n_cols..(i + 1) * n_cols];
        for (acc, (&v, &mean)) in sq[label].iter_mut().zip(row.iter().zip(&means[label])) {
            let d = v - mean;
            *acc += d * d;
        }
    }
    let variances: Vec<Vec<f64>> = sq
        .iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let denom = c.max(1) as f64;
            s.iter().map(|v| (v / denom).max(params.variance_floor)).collect()
        })
        .collect();

    let log_priors = counts
        .iter()
        .map(|&c| ((c.max(1)) as f64 / n as f64).ln())
        .collect();

    GaussianNb {
        log_priors,
        means,
        variances,
    }
}

impl GaussianNb {
    /// Per-class log posterior up to the shared normalizing constant.
    pub fn log_scores(&self, row: &[f64]) -> Vec<f64> {
        const LN_2PI: f64 = 1.8378770664093453;
        self.log_priors
            .iter()
            .enumerate()
            .map(|(k, &prior)| {
                let mut score = prior;
                for (j, &v) in row.iter().enumerate() {
                    let var = self.variances[k][j];
                    let d = v - self.means[k][j];
                    score += -0.5 * (LN_2PI + var.ln()) - d * d / (2.0 * var);
                }
                score
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::boosting::softmax_into;

    /// Four hand-calculable points: feature 0 separates the classes.
    /// Class 0: x in {1, 3} -> mean 2, var 1. Class 1: x in {7, 9} -> mean 8, var 1.
    #[test]
    fn matches_hand_computed_posteriors() {
        let x = vec![1.0, 3.0, 7.0, 9.0];
        let y = vec![0, 0, 1, 1];
        let model = train_gaussian_nb(&x, 1, &y, 2, &NaiveBayesParams::default());
        assert_eq!(model.means[0], vec![2.0]);
        assert_eq!(model.means[1], vec![8.0]);
        assert_eq!(model.variances[0], vec![1.0]);

        // At x = 4: log-lik ratio = (-(4-2)^2 + (4-8)^2) / 2 = 6, equal priors.
        let scores = model.log_scores(&[4.0]);
        let mut probs = vec![0.0; 2];
        softmax_into(&scores, &mut probs);
        let expected_p0 = 1.0 / (1.0 + (-6.0f64).exp());
        assert!((probs[0] - expected_p0).abs() < 1e-6);

        // Equidistant point with equal priors splits evenly.
        let scores = model.log_scores(&[5.0]);
        softmax_into(&scores, &mut probs);
        assert!((probs[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn variance_floor_prevents_degenerate_gaussians() {
        // Constant feature in class 0 would otherwise give zero variance.
        let x = vec![2.0, 2.0, 5.0, 6.0];
        let y = vec![0, 0, 1, 1];
        let model = train_gaussian_nb(&x, 1, &y, 2, &NaiveBayesParams::default());
        assert_eq!(model.variances[0], vec![1e-9]);
        let scores = model.log_scores(&[2.0]);
        assert!(scores.iter().all(|s| s.is_finite()));
    }

    #[test]
    fn fit_is_row_order_independent() {
        let x = vec![1.0, 4.0, 2.0, 8.0, 3.0, 6.0];
        let y = vec![0, 1, 0, 1, 0, 1];
        let forward = train_gaussian_nb(&x, 1, &y, 2, &NaiveBayesParams::default());
        let rx: Vec<f64> = x.iter().rev().copied().collect();
        let ry: Vec<usize> = y.iter().rev().copied().collect();
        let reversed = train_gaussian_nb(&rx, 1, &ry, 2, &NaiveBayesParams::default());
        assert_eq!(forward.means, reversed.means);
        assert_eq!(forward.log_priors, reversed.log_priors);
        for (a, b) in forward.variances.iter().flatten().zip(reversed.variances.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn priors_follow_class_frequencies() {
        let x = vec![0.0, 0.0, 0.0, 1.0];
        let y = vec![0, 0, 0, 1];
        let model = train_gaussian_nb(&x, 1, &y, 2, &NaiveBayesParams::default());
        assert!((model.log_priors[0] - (0.75f64).ln()).abs() < 1e-12);
        assert!((model.log_priors[1] - (0.25f64).ln()).abs() < 1e-12);
    }
}
