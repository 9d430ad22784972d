use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

pub const DEFAULT_CAPTURE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(y_true: &[u8], y_pred: &[u8]) -> Confusion {
        let mut c = Confusion::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, _) => c.tn += 1,
                _ => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Rank AUC of the scores; absent when the truth has one class.
    pub auc: Option<f64>,
    /// The same statistic with the hard labels as scores.
    pub auc_label: Option<f64>,
    /// Absent when there are no positives.
    pub capture_rate: Option<f64>,
    pub confusion: Confusion,
}

impl MetricsReport {
    /// Named values in a fixed order; absent metrics are skipped.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        let mut out =
            vec![("accuracy", self.accuracy), ("precision", self.precision), ("recall", self.recall), ("f1", self.f1)];
        if let Some(v) = self.auc {
            out.push(("auc", v));
        }
        if let Some(v) = self.auc_label {
            out.push(("auc_label", v));
        }
        if let Some(v) = self.capture_rate {
            out.push(("capture_rate", v));
        }
        out
    }
}

/// Mann-Whitney AUC with average ranks for ties: P(s+ > s-) + P(tie)/2.
pub fn auc(y_true: &[u8], scores: &[f64]) -> Option<f64> {
    let n_pos = y_true.iter().filter(|&&t| t == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            if y_true[k] == 1 {
                rank_sum_pos += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Some(u / (np * n_neg as f64))
}

/// Share of all positives among the top `ceil(fraction * n)` rows by score
/// (descending; equal scores keep input order).
pub fn capture_rate(scores: &[f64], y_true: &[u8], fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ModelError::BadFraction(fraction));
    }
    if scores.len() != y_true.len() {
        return Err(ModelError::LengthMismatch(scores.len(), y_true.len()));
    }
    let positives = y_true.iter().filter(|&&t| t == 1).count();
    if positives == 0 {
        return Err(ModelError::NoPositives);
    }
    let n = scores.len();
    // tolerance keeps 0.1 * 30 from rounding up to 4
    let k = ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let hits = idx[..k].iter().filter(|&&i| y_true[i] == 1).count();
    Ok(hits as f64 / positives as f64)
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn compute_metrics(y_true: &[u8], y_pred: &[u8], scores: &[f64]) -> Result<MetricsReport> {
    compute_metrics_at(y_true, y_pred, scores, DEFAULT_CAPTURE_FRACTION)
}

/// Precision, recall and F1 are 0 when their denominator is 0.
pub fn compute_metrics_at(y_true: &[u8], y_pred: &[u8], scores: &[f64], fraction: f64) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(ModelError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.len() != scores.len() {
        return Err(ModelError::LengthMismatch(y_true.len(), scores.len()));
    }
    let c = Confusion::from_labels(y_true, y_pred);
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    let label_scores: Vec<f64> = y_pred.iter().map(|&p| f64::from(p)).collect();
    let capture = match capture_rate(scores, y_true, fraction) {
        Ok(v) => Some(v),
        Err(ModelError::NoPositives) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1,
        auc: auc(y_true, scores),
        auc_label: auc(y_true, &label_scores),
        capture_rate: capture,
        confusion: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_example() {
        let m = compute_metrics(&[1, 1, 0, 0], &[1, 0, 0, 0], &[0.9, 0.4, 0.3, 0.2]).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 0.5);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.auc, Some(1.0));
        assert_eq!(m.auc_label, Some(0.75));
    }

    #[test]
    fn ties_count_half() {
        assert_eq!(auc(&[1, 0], &[0.5, 0.5]), Some(0.5));
        assert_eq!(auc(&[1, 1], &[0.5, 0.4]), None);
    }

    #[test]
    fn capture_rate_rules() {
        let scores: Vec<f64> = (0..30).map(|i| 1.0 - i as f64 / 30.0).collect();
        let y: Vec<u8> = (0..30).map(|i| u8::from(i < 3)).collect();
        assert_eq!(capture_rate(&scores, &y, 0.1).unwrap(), 1.0);
        assert_eq!(capture_rate(&scores, &y, 1.0).unwrap(), 1.0);
        assert!(matches!(capture_rate(&scores, &[0; 30], 0.1), Err(ModelError::NoPositives)));
        assert!(matches!(capture_rate(&scores, &y, 0.0), Err(ModelError::BadFraction(_))));
    }

    #[test]
    fn single_class_truth_keeps_other_metrics() {
        let m = compute_metrics(&[0, 0], &[0, 1], &[0.1, 0.9]).unwrap();
        assert_eq!(m.auc, None);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.capture_rate, None);
    }
}
