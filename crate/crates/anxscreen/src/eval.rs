//! Classification metrics, bootstrap confidence intervals, ROC-AUC, and
//! calibration (expected calibration error plus Platt scaling).

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::sigmoid;
use crate::optim::{self, LbfgsParams};

/// Standard binary confusion counts with class 1 as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    /// Negative predictive value.
    pub fn npv(&self) -> f64 {
        ratio(self.tn, self.tn + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::Invalid(format!(
            "labels ({}) and predictions ({}) disagree in length",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Insufficient("cannot evaluate zero predictions".into()));
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (y, p) in labels.iter().zip(predictions) {
        match (y, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fn_ += 1,
            _ => return Err(Error::Invalid("labels and predictions must be 0 or 1".into())),
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Point metrics with optional bootstrap intervals. Degenerate ratios
/// (0/0 denominators) are reported as 0.0 and listed in `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_ci: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_ci: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_ci: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1_ci: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc_ci: Option<Interval>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

/// Accuracy, precision, recall, and F1 from confusion counts. AUC and
/// intervals are filled in separately by score-based evaluation.
pub fn metrics(cm: &ConfusionMatrix) -> MetricSet {
    let mut degenerate = Vec::new();
    let accuracy = ratio(cm.tp + cm.tn, cm.total());
    let precision = if cm.tp + cm.fp == 0 {
        degenerate.push("precision".to_string());
        0.0
    } else {
        ratio(cm.tp, cm.tp + cm.fp)
    };
    let recall = if cm.tp + cm.fn_ == 0 {
        degenerate.push("recall".to_string());
        0.0
    } else {
        ratio(cm.tp, cm.tp + cm.fn_)
    };
    let f1 = if precision + recall == 0.0 {
        degenerate.push("f1".to_string());
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    MetricSet {
        accuracy,
        precision,
        recall,
        f1,
        auc: None,
        accuracy_ci: None,
        precision_ci: None,
        recall_ci: None,
        f1_ci: None,
        auc_ci: None,
        degenerate,
    }
}

/// ROC-AUC in the rank (Mann-Whitney) formulation: the fraction of
/// (positive, negative) pairs ranked correctly, ties counted half.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::Invalid("labels and scores disagree in length".into()));
    }
    let n_pos = labels.iter().filter(|l| **l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Insufficient(
            "ROC-AUC needs both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // average ranks over tie groups (1-based ranks)
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = ((i + 1) + (j + 1)) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos as f64) * (n_pos as f64 + 1.0) / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// One operating point of the empirical ROC curve. `threshold` is the lowest
/// score still classified positive at that point (infinite for the (0, 0)
/// corner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Empirical ROC curve from (0,0) to (1,1), one point per distinct score.
pub fn roc_curve(labels: &[u8], scores: &[f64]) -> Result<Vec<RocPoint>> {
    if labels.len() != scores.len() {
        return Err(Error::Invalid("labels and scores disagree in length".into()));
    }
    let n_pos = labels.iter().filter(|l| **l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Insufficient(
            "ROC curve needs both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: score,
        });
    }
    Ok(points)
}

/// Trapezoidal area under an ROC curve; the independent cross-check for
/// [`roc_auc`].
pub fn auc_trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    /// Resamples that were redrawn because the metric was undefined on them
    /// (for example single-class AUC resamples).
    pub redraws: u64,
}

/// Percentile bootstrap over (label, value) pairs. The metric closure may
/// return `None` for a degenerate resample; that resample is redrawn and the
/// occurrence counted. Interval bounds use the 1-based ceil(B * alpha/2) and
/// ceil(B * (1 - alpha/2)) order statistics.
pub fn bootstrap_ci<F>(
    labels: &[u8],
    values: &[f64],
    metric: F,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapCi>
where
    F: Fn(&[u8], &[f64]) -> Option<f64>,
{
    if b < 100 {
        return Err(Error::Invalid("bootstrap needs B >= 100".into()));
    }
    if labels.len() != values.len() || labels.is_empty() {
        return Err(Error::Invalid("bootstrap inputs empty or mismatched".into()));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Invalid("alpha must be in (0, 1)".into()));
    }
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(b);
    let mut redraws = 0u64;
    let mut yb = vec![0u8; n];
    let mut vb = vec![0.0f64; n];
    let max_attempts = (b as u64) * 1000;
    let mut attempts = 0u64;
    while stats.len() < b {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Numeric(
                "bootstrap could not draw enough non-degenerate resamples".into(),
            ));
        }
        for i in 0..n {
            let j = rng.gen_range(0..n);
            yb[i] = labels[j];
            vb[i] = values[j];
        }
        match metric(&yb, &vb) {
            Some(m) => stats.push(m),
            None => redraws += 1,
        }
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let lo_rank = ((b as f64 * alpha / 2.0) - 1e-9).ceil().max(1.0) as usize;
    let hi_rank = ((b as f64 * (1.0 - alpha / 2.0)) - 1e-9).ceil().max(1.0) as usize;
    Ok(BootstrapCi {
        lo: stats[lo_rank - 1],
        hi: stats[hi_rank.min(b) - 1],
        redraws,
    })
}

/// Accuracy of hard 0/1 predictions stored as f64 values; the standard
/// metric closure for [`bootstrap_ci`].
pub fn accuracy_of(labels: &[u8], predictions: &[f64]) -> Option<f64> {
    let correct = labels
        .iter()
        .zip(predictions)
        .filter(|(y, p)| f64::from(**y) == **p)
        .count();
    Some(correct as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub count: usize,
    pub mean_predicted: f64,
    pub accuracy: f64,
}

/// Platt calibrator P(y=1|s) = 1 / (1 + exp(A s + B)). With this sign
/// convention, higher scores mean higher probability when A < 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibrator {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl PlattCalibrator {
    pub fn apply(&self, score: f64) -> f64 {
        sigmoid(-(self.a * score + self.b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ece: f64,
    pub bins: Vec<CalibrationBin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub platt: Option<PlattCalibrator>,
    /// True when ece < 0.05.
    pub calibrated: bool,
}

/// Expected calibration error over `bins` equal-width probability bins.
/// The final bin is closed on the right so probability 1.0 is binned.
pub fn ece(labels: &[u8], probabilities: &[f64], bins: usize) -> Result<CalibrationReport> {
    if labels.len() != probabilities.len() || labels.is_empty() {
        return Err(Error::Invalid("ece inputs empty or mismatched".into()));
    }
    if bins == 0 {
        return Err(Error::Invalid("ece needs at least one bin".into()));
    }
    if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Invalid("probabilities must lie in [0, 1]".into()));
    }
    let mut count = vec![0usize; bins];
    let mut sum_p = vec![0.0f64; bins];
    let mut sum_y = vec![0.0f64; bins];
    for (&y, &p) in labels.iter().zip(probabilities) {
        let idx = ((p * bins as f64) as usize).min(bins - 1);
        count[idx] += 1;
        sum_p[idx] += p;
        sum_y[idx] += f64::from(y);
    }
    let n = labels.len() as f64;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(bins);
    for i in 0..bins {
        if count[i] == 0 {
            out.push(CalibrationBin {
                count: 0,
                mean_predicted: 0.0,
                accuracy: 0.0,
            });
            continue;
        }
        let mean_p = sum_p[i] / count[i] as f64;
        let acc = sum_y[i] / count[i] as f64;
        total += (count[i] as f64 / n) * (mean_p - acc).abs();
        out.push(CalibrationBin {
            count: count[i],
            mean_predicted: mean_p,
            accuracy: acc,
        });
    }
    Ok(CalibrationReport {
        ece: total,
        bins: out,
        platt: None,
        calibrated: total < 0.05,
    })
}

fn platt_fit_direct(scores: &[f64], labels: &[u8]) -> Result<PlattCalibrator> {
    let n_pos = labels.iter().filter(|l| **l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Insufficient(
            "Platt fit needs both classes present".into(),
        ));
    }
    // smoothed targets keep the likelihood bounded on separable data
    let t_pos = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let t_neg = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|l| if *l == 1 { t_pos } else { t_neg })
        .collect();
    // Negative log-likelihood in (a, b); convex, minimized with the same
    // deterministic first-order machinery used for model training.
    let objective = |theta: &[f64], grad: &mut [f64]| {
        let (a, b) = (theta[0], theta[1]);
        let mut loss = 0.0;
        grad[0] = 0.0;
        grad[1] = 0.0;
        for (&s, &t) in scores.iter().zip(&targets) {
            let z = a * s + b;
            let p = sigmoid(-z);
            // cross-entropy of p against target t, stable form
            let log_p = -softplus_pos(z);
            let log_1p = -softplus_pos(-z);
            loss -= t * log_p + (1.0 - t) * log_1p;
            let dz = t - p;
            grad[0] += dz * s;
            grad[1] += dz;
        }
        loss
    };
    let out = optim::minimize(
        objective,
        vec![0.0, 0.0],
        &LbfgsParams {
            max_iterations: 500,
            grad_tolerance: 1e-10,
            ..Default::default()
        },
    );
    if !out.loss.is_finite() {
        return Err(Error::Numeric("Platt fit diverged".into()));
    }
    Ok(PlattCalibrator {
        a: out.x[0],
        b: out.x[1],
    })
}

/// log(1 + e^z), stable.
fn softplus_pos(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Fits Platt parameters by maximizing the smoothed-target likelihood.
///
/// With `folds >= 2` the (score, label) pairs are shuffled deterministically,
/// partitioned into folds, one fit is run per fold complement, and the
/// parameters are averaged; `folds <= 1` fits once on everything. Callers
/// that want the cross-validated calibration protocol should pass scores that
/// were themselves produced out-of-fold.
pub fn platt_fit(scores: &[f64], labels: &[u8], folds: usize, seed: u64) -> Result<PlattCalibrator> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Invalid("Platt inputs empty or mismatched".into()));
    }
    if folds <= 1 || scores.len() < folds * 2 {
        return platt_fit_direct(scores, labels);
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut a_sum = 0.0;
    let mut b_sum = 0.0;
    let mut fitted = 0usize;
    for fold in 0..folds {
        let mut s_fit = Vec::new();
        let mut y_fit = Vec::new();
        for (pos, &idx) in order.iter().enumerate() {
            if pos % folds != fold {
                s_fit.push(scores[idx]);
                y_fit.push(labels[idx]);
            }
        }
        match platt_fit_direct(&s_fit, &y_fit) {
            Ok(c) => {
                a_sum += c.a;
                b_sum += c.b;
                fitted += 1;
            }
            Err(Error::Insufficient(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if fitted == 0 {
        return Err(Error::Insufficient(
            "no Platt fold contained both classes".into(),
        ));
    }
    Ok(PlattCalibrator {
        a: a_sum / fitted as f64,
        b: b_sum / fitted as f64,
    })
}

/// P(y=1|s) for a fitted (A, B) pair.
pub fn platt_apply(calibrator: &PlattCalibrator, score: f64) -> f64 {
    calibrator.apply(score)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_confusion_reproduces_reported_metrics() {
        let cm = ConfusionMatrix {
            tp: 17903,
            fp: 1344,
            tn: 20470,
            fn_: 2928,
        };
        let m = metrics(&cm);
        assert!((m.accuracy - 0.8998).abs() < 5e-5);
        assert!((m.precision - 0.9302).abs() < 5e-5);
        assert!((m.recall - 0.8594).abs() < 5e-5);
        assert!((m.f1 - 0.8934).abs() < 5e-5);
        assert!((cm.specificity() - 0.9384).abs() < 5e-5);
        assert!((cm.npv() - 0.8749).abs() < 5e-5);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let cm = confusion(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        let m = metrics(&cm);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
        assert!(m.degenerate.is_empty());
    }

    #[test]
    fn degenerate_precision_is_zero_with_flag() {
        let cm = confusion(&[0, 0, 1], &[0, 0, 0]).unwrap();
        let m = metrics(&cm);
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate.contains(&"precision".to_string()));
    }

    #[test]
    fn confusion_rejects_length_mismatch() {
        assert!(confusion(&[1, 0], &[1]).is_err());
    }

    #[test]
    fn metrics_match_brute_force_counts_exhaustively() {
        // all label/prediction patterns for n <= 8
        for n in 1..=8usize {
            for ys in 0..(1u32 << n) {
                for ps in 0..(1u32 << n) {
                    let labels: Vec<u8> = (0..n).map(|i| ((ys >> i) & 1) as u8).collect();
                    let preds: Vec<u8> = (0..n).map(|i| ((ps >> i) & 1) as u8).collect();
                    let cm = confusion(&labels, &preds).unwrap();
                    let mut tp = 0;
                    let mut fp = 0;
                    let mut tn = 0;
                    let mut fn_ = 0;
                    for i in 0..n {
                        match (labels[i], preds[i]) {
                            (1, 1) => tp += 1,
                            (0, 1) => fp += 1,
                            (0, 0) => tn += 1,
                            _ => fn_ += 1,
                        }
                    }
                    assert_eq!((cm.tp, cm.fp, cm.tn, cm.fn_), (tp, fp, tn, fn_));
                }
            }
        }
    }

    #[test]
    fn auc_perfect_ranking_is_one() {
        let auc = roc_auc(&[1, 1, 0, 0], &[0.9, 0.8, 0.3, 0.2]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let auc = roc_auc(&[1, 0, 1, 0], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((auc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_matches_pair_counting() {
        // pairs: (.9>.6) (.9>.2) (.4<.6) (.4>.2) -> 3/4
        let auc = roc_auc(&[1, 1, 0, 0], &[0.9, 0.4, 0.6, 0.2]).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn auc_single_class_errors() {
        assert!(roc_auc(&[1, 1], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn rank_auc_equals_trapezoid_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.gen_range(2..40);
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            if labels.iter().all(|l| *l == 0) || labels.iter().all(|l| *l == 1) {
                continue;
            }
            // coarse scores force plenty of ties
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..6) as f64) / 5.0).collect();
            let a = roc_auc(&labels, &scores).unwrap();
            let b = auc_trapezoid(&roc_curve(&labels, &scores).unwrap());
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn bootstrap_constant_metric_collapses_interval() {
        let labels = vec![1u8; 50];
        let preds = vec![1.0f64; 50];
        let ci = bootstrap_ci(&labels, &preds, accuracy_of, 1000, 0.05, 1).unwrap();
        assert_eq!(ci.lo, 1.0);
        assert_eq!(ci.hi, 1.0);
        assert_eq!(ci.redraws, 0);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let labels: Vec<u8> = (0..80).map(|i| (i % 2) as u8).collect();
        let preds: Vec<f64> = (0..80).map(|i| f64::from(i % 3 == 0)).collect();
        let a = bootstrap_ci(&labels, &preds, accuracy_of, 500, 0.05, 11).unwrap();
        let b = bootstrap_ci(&labels, &preds, accuracy_of, 500, 0.05, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_percentile_ranks() {
        // with B values 1..=1000 as the bootstrap statistics the interval
        // must be exactly the 25th and 975th order statistics
        let lo_rank = ((1000.0f64 * 0.025) - 1e-9).ceil() as usize;
        let hi_rank = ((1000.0f64 * 0.975) - 1e-9).ceil() as usize;
        assert_eq!(lo_rank, 25);
        assert_eq!(hi_rank, 975);
    }

    #[test]
    fn ece_perfect_confidence_perfect_accuracy() {
        let report = ece(&[1, 1, 1], &[1.0, 1.0, 1.0], 10).unwrap();
        assert_eq!(report.ece, 0.0);
        assert!(report.calibrated);
        assert_eq!(report.bins.iter().map(|b| b.count).sum::<usize>(), 3);
    }

    #[test]
    fn ece_single_bin_hand_value() {
        // all mass in bin [0.5, 0.6): |0.55 - 0.5| = 0.05
        let labels = vec![1, 0, 1, 0];
        let probs = vec![0.55; 4];
        let report = ece(&labels, &probs, 10).unwrap();
        assert!((report.ece - 0.05).abs() < 1e-12);
    }

    #[test]
    fn platt_sign_convention_on_separable_scores() {
        let scores: Vec<f64> = vec![-3.0, -2.0, -1.5, 1.5, 2.0, 3.0];
        let labels = vec![0u8, 0, 0, 1, 1, 1];
        let cal = platt_fit(&scores, &labels, 1, 0).unwrap();
        assert!(cal.a < 0.0, "A = {}", cal.a);
        assert!(cal.a.is_finite() && cal.b.is_finite());
        // monotone increasing in s when A < 0
        assert!(cal.apply(2.0) > cal.apply(-2.0));
    }

    #[test]
    fn platt_independent_labels_recover_base_rate() {
        // labels carry no signal: optimum is A ~ 0 and P ~ mean smoothed target
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for i in 0..400 {
            scores.push((i % 7) as f64 - 3.0);
            labels.push(u8::from(i % 4 == 0)); // base rate 0.25
        }
        let cal = platt_fit(&scores, &labels, 1, 0).unwrap();
        assert!(cal.a.abs() < 0.05, "A = {}", cal.a);
        let n_pos = 100.0;
        let n_neg = 300.0;
        let mean_target = (n_pos * ((n_pos + 1.0) / (n_pos + 2.0)) + n_neg * (1.0 / (n_neg + 2.0)))
            / (n_pos + n_neg);
        let p = cal.apply(0.0);
        assert!((p - mean_target).abs() < 0.02, "p = {p}, target = {mean_target}");
    }

    #[test]
    fn platt_reduces_ece_of_overconfident_scores() {
        // calibrated probabilities squared become overconfident
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut probs = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..4000 {
            let p: f64 = rng.gen_range(0.02..0.98);
            labels.push(u8::from(rng.gen_range(0.0..1.0) < p));
            probs.push(p * p);
        }
        let scores: Vec<f64> = probs.iter().map(|p| (p / (1.0 - p)).ln()).collect();
        let (fit_s, apply_s) = scores.split_at(2000);
        let (fit_y, apply_y) = labels.split_at(2000);
        let before = ece(apply_y, &probs[2000..], 10).unwrap().ece;
        let cal = platt_fit(fit_s, fit_y, 5, 3).unwrap();
        let calibrated: Vec<f64> = apply_s.iter().map(|s| cal.apply(*s)).collect();
        let after = ece(apply_y, &calibrated, 10).unwrap().ece;
        assert!(
            after < before * 0.5,
            "ece before {before}, after {after}"
        );
    }
}
