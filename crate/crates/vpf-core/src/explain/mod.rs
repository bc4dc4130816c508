//! Shapley-value feature attribution via permutation sampling, with an
//! exact enumeration engine for small feature counts, plus the
//! false-negative anomaly report.

mod anomaly;

pub use anomaly::{anomalies_csv, false_negative_report, AnomalyReport, AnomalyRow, GroupCount};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::SplitMix64;
use crate::models::TrainedModel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExplainError {
    #[error("background sample is empty")]
    EmptyBackground,
    #[error("exact Shapley enumeration supports at most 12 features, got {0}")]
    TooManyFeatures(usize),
    #[error("row has {actual} features, model expects {expected}")]
    FeatureCountMismatch { expected: usize, actual: usize },
}

/// Anything that maps a feature row to a class probability. Lets the
/// attribution code run against trained models and hand-built test models
/// alike.
pub trait ProbModel {
    fn n_features(&self) -> usize;
    fn class_probability(&self, row: &[f64], class_index: usize) -> f64;
}

impl ProbModel for TrainedModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn class_probability(&self, row: &[f64], class_index: usize) -> f64 {
        self.row_probabilities(row)[class_index]
    }
}

/// A plain function of the feature row; test models are built from these.
pub struct FnModel<F: Fn(&[f64]) -> f64> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> ProbModel for FnModel<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn class_probability(&self, row: &[f64], _class_index: usize) -> f64 {
        (self.f)(row)
    }
}

/// Per-feature attribution of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// "vote_id|member_id" in the pipeline; free-form in tests.
    pub row_key: String,
    /// Class code the probability belongs to.
    pub class_code: u8,
    pub phi: Vec<f64>,
    /// Estimated standard error of each phi (sampling only).
    pub std_err: Vec<f64>,
    /// Mean predicted probability of the class over the background.
    pub base_value: f64,
    pub m_samples: usize,
    pub seed: u64,
}

/// Permutation-sampling Shapley values.
///
/// Each of the `m` iterations draws one random feature permutation and one
/// background row, then walks the permutation switching features from the
/// background value to the explained row's value; the probability change at
/// each step is that feature's marginal contribution for the iteration.
/// Deterministic given the seed. phi sums to f(x) minus the mean value over
/// the sampled background rows, so base_value + sum(phi) tracks f(x) within
/// sampling error.
pub fn shapley_sampling<M: ProbModel + ?Sized>(
    model: &M,
    x: &[f64],
    background: &[Vec<f64>],
    class_index: usize,
    m: usize,
    seed: u64,
) -> Result<Attribution, ExplainError> {
    if background.is_empty() {
        return Err(ExplainError::EmptyBackground);
    }
    let d = model.n_features();
    if x.len() != d {
        return Err(ExplainError::FeatureCountMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    let m = m.max(1);

    let mut rng = SplitMix64::new(seed);
    let mut phi_sum = vec![0.0f64; d];
    let mut phi_sq_sum = vec![0.0f64; d];
    let mut permutation: Vec<usize> = (0..d).collect();
    let mut current = vec![0.0f64; d];

    for _ in 0..m {
        let bg = &background[rng.next_bounded(background.len())];
        rng.shuffle(&mut permutation);
        current.copy_from_slice(bg);
        let mut previous = model.class_probability(&current, class_index);
        for &j in &permutation {
            current[j] = x[j];
            let value = model.class_probability(&current, class_index);
            let marginal = value - previous;
            phi_sum[j] += marginal;
            phi_sq_sum[j] += marginal * marginal;
            previous = value;
        }
    }

    let phi: Vec<f64> = phi_sum.iter().map(|s| s / m as f64).collect();
    let std_err: Vec<f64> = phi
        .iter()
        .zip(&phi_sq_sum)
        .map(|(&mean, &sq)| {
            if m < 2 {
                0.0
            } else {
                let var = (sq / m as f64 - mean * mean).max(0.0) * m as f64 / (m - 1) as f64;
                (var / m as f64).sqrt()
            }
        })
        .collect();

    let base_value = background
        .iter()
        .map(|b| model.class_probability(b, class_index))
        .sum::<f64>()
        / background.len() as f64;

    Ok(Attribution {
        row_key: String::new(),
        class_code: 0,
        phi,
        std_err,
        base_value,
        m_samples: m,
        seed,
    })
}

/// Exact Shapley values by full coalition enumeration, with absent features
/// marginalized over the whole background. Test oracle for the sampler;
/// O(2^d * |background|).
pub fn exact_shapley<M: ProbModel + ?Sized>(
    model: &M,
    x: &[f64],
    background: &[Vec<f64>],
    class_index: usize,
) -> Result<Vec<f64>, ExplainError> {
    if background.is_empty() {
        return Err(ExplainError::EmptyBackground);
    }
    let d = model.n_features();
    if d > 12 {
        return Err(ExplainError::TooManyFeatures(d));
    }
    if x.len() != d {
        return Err(ExplainError::FeatureCountMismatch {
            expected: d,
            actual: x.len(),
        });
    }

    // Coalition values v(S) for every subset mask.
    let n_masks = 1usize << d;
    let mut v = vec![0.0f64; n_masks];
    let mut composite = vec![0.0f64; d];
    for (mask, value) in v.iter_mut().enumerate() {
        let mut total = 0.0;
        for bg in background {
            for j in 0..d {
                composite[j] = if mask & (1 << j) != 0 { x[j] } else { bg[j] };
            }
            total += model.class_probability(&composite, class_index);
        }
        *value = total / background.len() as f64;
    }

    // Permutation weights by coalition size: |S|! (d-|S|-1)! / d!.
    let mut factorial = vec![1.0f64; d + 1];
    for i in 1..=d {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    let weight: Vec<f64> = (0..d)
        .map(|s| factorial[s] * factorial[d - 1 - s] / factorial[d])
        .collect();

    let mut phi = vec![0.0f64; d];
    for (mask, &v_s) in v.iter().enumerate() {
        for j in 0..d {
            if mask & (1 << j) != 0 {
                continue;
            }
            let size = mask.count_ones() as usize;
            phi[j] += weight[size] * (v[mask | (1 << j)] - v_s);
        }
    }
    Ok(phi)
}

/// One beeswarm point: a (row, feature) pair with its attribution and the
/// feature's background-normalized value for color mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmPoint {
    pub feature: String,
    pub phi: f64,
    pub normalized_feature_value: f64,
    pub row_key: String,
    pub class_code: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmExport {
    pub points: Vec<BeeswarmPoint>,
    /// Features ranked by mean |phi|, descending.
    pub importance: Vec<(String, f64)>,
}

/// Arrange attributions for the standard summary plot: one point per
/// (row, feature) plus a global importance ranking by mean |phi|.
/// Feature values are min-max normalized over the background.
pub fn beeswarm_export(
    attributions: &[Attribution],
    rows: &[Vec<f64>],
    feature_names: &[String],
    background: &[Vec<f64>],
) -> BeeswarmExport {
    let d = feature_names.len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for bg in background {
        for j in 0..d {
            lo[j] = lo[j].min(bg[j]);
            hi[j] = hi[j].max(bg[j]);
        }
    }

    let mut points = Vec::with_capacity(attributions.len() * d);
    let mut abs_sum = vec![0.0f64; d];
    for (attribution, row) in attributions.iter().zip(rows) {
        for j in 0..d {
            let normalized = if hi[j] > lo[j] {
                ((row[j] - lo[j]) / (hi[j] - lo[j])).clamp(0.0, 1.0)
            } else {
                0.5
            };
            points.push(BeeswarmPoint {
                feature: feature_names[j].clone(),
                phi: attribution.phi[j],
                normalized_feature_value: normalized,
                row_key: attribution.row_key.clone(),
                class_code: attribution.class_code,
            });
            abs_sum[j] += attribution.phi[j].abs();
        }
    }

    let n = attributions.len().max(1) as f64;
    let mut importance: Vec<(String, f64)> = feature_names
        .iter()
        .cloned()
        .zip(abs_sum.iter().map(|s| s / n))
        .collect();
    importance.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });

    BeeswarmExport { points, importance }
}

pub fn beeswarm_csv(export: &BeeswarmExport) -> String {
    let mut out = String::from("feature,phi,normalized_feature_value,row_key,class\n");
    for p in &export.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.feature, p.phi, p.normalized_feature_value, p.row_key, p.class_code
        ));
    }
    out
}

pub fn importance_csv(export: &BeeswarmExport) -> String {
    let mut out = String::from("rank,feature,mean_abs_phi\n");
    for (i, (feature, value)) in export.importance.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, feature, value));
    }
    out
}
