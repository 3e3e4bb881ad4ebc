use serde::{Deserialize, Serialize};

use super::classifier::LinearHead;
use crate::embed::DatasetSplit;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::remap::{forward, RemapParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// The class scored as positive.
    pub label: i32,
    pub auc: f64,
    pub points: Vec<PrPoint>,
}

/// Threshold sweep from the highest score down, starting at `(recall 0, precision 1)`.
/// Tied scores enter together.
pub fn pr_curve(scores: &[f64], positive: &[bool]) -> Vec<PrPoint> {
    let total_pos = positive.iter().filter(|&&p| p).count();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut points = vec![PrPoint { threshold: f64::INFINITY, recall: 0.0, precision: 1.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = if total_pos == 0 { 0.0 } else { tp as f64 / total_pos as f64 };
        points.push(PrPoint { threshold: t, recall, precision: tp as f64 / (tp + fp) as f64 });
    }
    points
}

/// Trapezoidal area under precision as a function of recall.
pub fn pr_auc(points: &[PrPoint]) -> f64 {
    points.windows(2).map(|w| (w[1].recall - w[0].recall) * (w[1].precision + w[0].precision) / 2.0).sum()
}

/// Unweighted mean of per-class F1; a class with no true or predicted members scores 0.
pub fn macro_f1(truth: &[i32], predicted: &[i32], label_set: &[i32]) -> f64 {
    let per_class: f64 = label_set
        .iter()
        .map(|&c| {
            let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
            for (&t, &p) in truth.iter().zip(predicted) {
                match (t == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fneg += 1,
                    _ => {}
                }
            }
            let denom = 2 * tp + fp + fneg;
            if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        })
        .sum();
    per_class / label_set.len() as f64
}

pub fn accuracy(truth: &[i32], predicted: &[i32]) -> f64 {
    truth.iter().zip(predicted).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub size: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Mean over `curves`.
    pub pr_auc: f64,
    /// One curve for binary tasks (the second label positive), one per class otherwise.
    pub curves: Vec<PrCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub id_test: SetMetrics,
    pub ood_test: SetMetrics,
    /// In-distribution minus out-of-distribution accuracy.
    pub gap: f64,
}

/// Metrics of `head` on the given feature rows.
pub fn score_set<T: Scalar>(head: &LinearHead<T>, features: &[Vec<T>], truth: &[i32]) -> Result<SetMetrics> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let probs: Vec<Vec<f64>> =
        features.iter().map(|x| head.probabilities(x).into_iter().map(|p| p.to_f64_lossy()).collect()).collect();
    let predicted: Vec<i32> = features.iter().map(|x| head.predict(x)).collect();
    let classes: Vec<usize> = if head.labels.len() == 2 { vec![1] } else { (0..head.labels.len()).collect() };
    let curves: Vec<PrCurve> = classes
        .into_iter()
        .map(|c| {
            let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
            let positive: Vec<bool> = truth.iter().map(|&t| t == head.labels[c]).collect();
            let points = pr_curve(&scores, &positive);
            PrCurve { label: head.labels[c], auc: pr_auc(&points), points }
        })
        .collect();
    Ok(SetMetrics {
        size: truth.len(),
        accuracy: accuracy(truth, &predicted),
        macro_f1: macro_f1(truth, &predicted, &head.labels),
        pr_auc: curves.iter().map(|c| c.auc).sum::<f64>() / curves.len() as f64,
        curves,
    })
}

/// Rows at `indices`, passed through `remap` when given.
pub fn features_of<T: Scalar>(x: &Matrix<T>, indices: &[usize], remap: Option<&RemapParams<T>>) -> Result<Vec<Vec<T>>> {
    indices
        .iter()
        .map(|&i| match remap {
            Some(p) => forward(p, x.row(i)).map(|(z, _)| z),
            None => Ok(x.row(i).to_vec()),
        })
        .collect()
}

/// Applies the optional remap and the head to both test sets of `split`.
pub fn evaluate<T: Scalar>(
    head: &LinearHead<T>,
    remap: Option<&RemapParams<T>>,
    x: &Matrix<T>,
    labels: &[i32],
    split: &DatasetSplit,
) -> Result<EvalReport> {
    let set = |idx: &[usize]| -> Result<SetMetrics> {
        if idx.iter().any(|&i| i >= x.rows()) {
            return Err(Error::UnknownId("split index outside the dataset".into()));
        }
        let truth: Vec<i32> = idx.iter().map(|&i| labels[i]).collect();
        score_set(head, &features_of(x, idx, remap)?, &truth)
    };
    let id_test = set(&split.id_test)?;
    let ood_test = set(&split.ood_test)?;
    let gap = id_test.accuracy - ood_test.accuracy;
    Ok(EvalReport { id_test, ood_test, gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_predictor_on_balanced_binary() {
        let truth = [0, 0, 1, 1];
        let pred = [1, 1, 1, 1];
        assert_eq!(accuracy(&truth, &pred), 0.5);
        assert!((macro_f1(&truth, &pred, &[0, 1]) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_ranking_has_unit_area() {
        let pts = pr_curve(&[0.9, 0.8, 0.3, 0.1], &[true, true, false, false]);
        assert_eq!(pr_auc(&pts), 1.0);
        assert!(pts.windows(2).all(|w| w[0].recall <= w[1].recall));
    }

    #[test]
    fn tied_scores_form_one_point() {
        let pts = pr_curve(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]);
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[1].recall, pts[1].precision), (1.0, 0.5));
        assert_eq!(pr_auc(&pts), 0.75);
    }
}
