//! Vote-level metrics (accuracy, F1, ROC/AUC), bill-level aggregation, and
//! the pass/reject matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::EnrichedRecord;
use crate::schema::VoteResult;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("no prediction row joins to any bill")]
    NoJoinableBills,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Class label the curve is one-vs-rest for, or "micro".
    pub class: String,
    pub points: Vec<RocPoint>,
    /// Trapezoidal area; None when the class has no positives or no negatives.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Class codes in score-column order.
    pub classes: Vec<u8>,
    /// confusion[true][pred].
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub per_class_roc: Vec<RocCurve>,
    pub micro_roc: RocCurve,
    pub auc_per_class: Vec<Option<f64>>,
    pub auc_micro: f64,
    pub n_test: usize,
}

/// Binary ROC sweep over descending score thresholds (one point per
/// distinct score). Trapezoidal AUC; ties contribute half, which makes the
/// area equal the rank statistic.
fn binary_roc(labels: &[bool], scores: &[f64]) -> (Vec<RocPoint>, Option<f64>) {
    let p = labels.iter().filter(|&&l| l).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return (
            vec![RocPoint {
                fpr: 0.0,
                tpr: 0.0,
                threshold: f64::INFINITY,
            }],
            None,
        );
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0usize;
    while i < order.len() {
        let score = scores[order[i]];
        // Process the whole tie group before emitting a point.
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / p as f64,
            threshold: score,
        });
    }
    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
    }
    (points, Some(auc))
}

/// Confusion matrix, accuracy, weighted/macro F1, one-vs-rest ROC per class,
/// and the micro-average ROC over the flattened (row, class) pairs.
pub fn compute_metrics(
    y_true: &[u8],
    y_pred: &[u8],
    y_proba: &[f64],
    classes: &[u8],
) -> Result<EvaluationReport, EvalError> {
    let n = y_true.len();
    let k = classes.len();
    if y_pred.len() != n {
        return Err(EvalError::LengthMismatch(format!(
            "y_true has {n} rows, y_pred has {}",
            y_pred.len()
        )));
    }
    if y_proba.len() != n * k {
        return Err(EvalError::LengthMismatch(format!(
            "y_proba has {} entries, expected {n} x {k}",
            y_proba.len()
        )));
    }

    let class_index: BTreeMap<u8, usize> =
        classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let (Some(&ti), Some(&pi)) = (class_index.get(&t), class_index.get(&p)) else {
            return Err(EvalError::LengthMismatch(format!(
                "label {t}/{p} not in class list"
            )));
        };
        confusion[ti][pi] += 1;
    }

    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let accuracy = if n == 0 { 0.0 } else { correct as f64 / n as f64 };

    let mut f1_weighted = 0.0;
    let mut f1_macro = 0.0;
    for i in 0..k {
        let support: usize = confusion[i].iter().sum();
        let predicted: usize = (0..k).map(|j| confusion[j][i]).sum();
        let tp = confusion[i][i];
        let precision = if predicted > 0 {
            tp as f64 / predicted as f64
        } else {
            0.0
        };
        let recall = if support > 0 {
            tp as f64 / support as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        f1_macro += f1 / k as f64;
        if n > 0 {
            f1_weighted += f1 * support as f64 / n as f64;
        }
    }

    let mut per_class_roc = Vec::with_capacity(k);
    let mut auc_per_class = Vec::with_capacity(k);
    for (ki, &class) in classes.iter().enumerate() {
        let labels: Vec<bool> = y_true.iter().map(|&t| t == class).collect();
        let scores: Vec<f64> = (0..n).map(|i| y_proba[i * k + ki]).collect();
        let (points, auc) = binary_roc(&labels, &scores);
        auc_per_class.push(auc);
        per_class_roc.push(RocCurve {
            class: class.to_string(),
            points,
            auc,
        });
    }

    // Micro average: flatten the n x k indicator and score matrices.
    let mut flat_labels = Vec::with_capacity(n * k);
    let mut flat_scores = Vec::with_capacity(n * k);
    for i in 0..n {
        for (ki, &class) in classes.iter().enumerate() {
            flat_labels.push(y_true[i] == class);
            flat_scores.push(y_proba[i * k + ki]);
        }
    }
    let (micro_points, micro_auc) = binary_roc(&flat_labels, &flat_scores);
    let auc_micro = micro_auc.unwrap_or(0.0);
    let micro_roc = RocCurve {
        class: "micro".to_string(),
        points: micro_points,
        auc: micro_auc,
    };

    Ok(EvaluationReport {
        classes: classes.to_vec(),
        confusion,
        accuracy,
        f1_weighted,
        f1_macro,
        per_class_roc,
        micro_roc,
        auc_per_class,
        auc_micro,
        n_test: n,
    })
}

/// Plot-ready ROC rows: per-class curves plus the micro curve.
pub fn draw_roc_points(report: &EvaluationReport) -> String {
    let mut out = String::from("class,fpr,tpr,threshold\n");
    for curve in report.per_class_roc.iter().chain(std::iter::once(&report.micro_roc)) {
        for p in &curve.points {
            let threshold = if p.threshold.is_infinite() {
                "inf".to_string()
            } else {
                p.threshold.to_string()
            };
            out.push_str(&format!("{},{},{},{}\n", curve.class, p.fpr, p.tpr, threshold));
        }
    }
    out
}

/// One test-set prediction joined back to its vote identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedVote {
    pub vote_id: String,
    pub member_id: String,
    pub actual: VoteResult,
    pub predicted: VoteResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillRow {
    pub bill_id: String,
    pub n_votes: usize,
    pub n_correct: usize,
    /// Strictly more than half of the bill's votes predicted correctly.
    pub majority_correct: bool,
    /// For > Against among actual labels.
    pub actual_passed: bool,
    pub predicted_passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PassReject {
    pub successful_passed: usize,
    pub failed_passed: usize,
    pub successful_rejected: usize,
    pub failed_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillReport {
    pub rows: Vec<BillRow>,
    pub total_bills: usize,
    pub successful_bills: usize,
    pub accuracy: f64,
    pub pass_reject: PassReject,
    /// Prediction rows that joined no bill (excluded from the totals).
    pub unjoined_predictions: usize,
}

/// Aggregate per-vote predictions to bill level.
///
/// A bill counts as successfully predicted when a strict majority of its
/// votes were predicted correctly; an exact half is a failure. Passing
/// means more For than Against votes.
pub fn bill_level_accuracy(
    predictions: &[PredictedVote],
    enriched: &[EnrichedRecord],
) -> Result<BillReport, EvalError> {
    let bill_of: BTreeMap<(&str, &str), &str> = enriched
        .iter()
        .filter_map(|r| {
            r.bill_id
                .as_deref()
                .map(|b| ((r.vote_id.as_str(), r.member_id.as_str()), b))
        })
        .collect();

    #[derive(Default)]
    struct Tally {
        n_votes: usize,
        n_correct: usize,
        actual_for: usize,
        actual_against: usize,
        predicted_for: usize,
        predicted_against: usize,
    }

    let mut tallies: BTreeMap<String, Tally> = BTreeMap::new();
    let mut unjoined = 0usize;
    for p in predictions {
        let Some(&bill_id) = bill_of.get(&(p.vote_id.as_str(), p.member_id.as_str())) else {
            unjoined += 1;
            continue;
        };
        let t = tallies.entry(bill_id.to_string()).or_default();
        t.n_votes += 1;
        if p.actual == p.predicted {
            t.n_correct += 1;
        }
        match p.actual {
            VoteResult::For => t.actual_for += 1,
            VoteResult::Against => t.actual_against += 1,
            _ => {}
        }
        match p.predicted {
            VoteResult::For => t.predicted_for += 1,
            VoteResult::Against => t.predicted_against += 1,
            _ => {}
        }
    }

    if tallies.is_empty() {
        return Err(EvalError::NoJoinableBills);
    }

    let mut rows = Vec::with_capacity(tallies.len());
    let mut successful = 0usize;
    let mut pass_reject = PassReject::default();
    for (bill_id, t) in tallies {
        let majority_correct = 2 * t.n_correct > t.n_votes;
        let actual_passed = t.actual_for > t.actual_against;
        let predicted_passed = t.predicted_for > t.predicted_against;
        if majority_correct {
            successful += 1;
        }
        match (actual_passed, majority_correct) {
            (true, true) => pass_reject.successful_passed += 1,
            (true, false) => pass_reject.failed_passed += 1,
            (false, true) => pass_reject.successful_rejected += 1,
            (false, false) => pass_reject.failed_rejected += 1,
        }
        rows.push(BillRow {
            bill_id,
            n_votes: t.n_votes,
            n_correct: t.n_correct,
            majority_correct,
            actual_passed,
            predicted_passed,
        });
    }

    let total_bills = rows.len();
    Ok(BillReport {
        total_bills,
        successful_bills: successful,
        accuracy: successful as f64 / total_bills as f64,
        pass_reject,
        unjoined_predictions: unjoined,
        rows,
    })
}

pub fn write_bill_report_csv(report: &BillReport) -> String {
    let mut out = String::from(
        "bill_id,n_votes,n_correct,majority_correct,actual_passed,predicted_passed\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.bill_id, r.n_votes, r.n_correct, r.majority_correct, r.actual_passed,
            r.predicted_passed
        ));
    }
    out
}
