//! Confusion-matrix metrics, ROC curves and AUC.
//!
//! The positive class is 1 throughout; precision, recall and F1 are binary
//! (positive-class) metrics, not macro averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Size("no rows to evaluate".into()));
    }
    let mut c = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1, p == 1) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Accuracy, precision, recall and F1. A zero denominator yields 0 and sets
/// the matching `*_degenerate` flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
    pub f1_degenerate: bool,
}

pub fn classification_metrics(c: &ConfusionMatrix) -> Result<ClassificationMetrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Size("empty confusion matrix".into()));
    }
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            (0.0, true)
        } else {
            (num as f64 / den as f64, false)
        }
    };
    let accuracy = (c.tp + c.tn) as f64 / total as f64;
    let (precision, precision_degenerate) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_degenerate) = ratio(c.tp, c.tp + c.fn_);
    let (f1, f1_degenerate) = if precision + recall == 0.0 {
        (0.0, true)
    } else {
        (2.0 * precision * recall / (precision + recall), false)
    };
    Ok(ClassificationMetrics {
        accuracy,
        precision,
        recall,
        f1,
        precision_degenerate,
        recall_degenerate,
        f1_degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from `(0,0)` to `(1,1)`, one point per distinct score.
///
/// `thresholds[k]` is the score cut that produces `points[k + 1]` (rows with
/// score `>= thresholds[k]` are called positive); the origin has no finite
/// threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

impl RocCurve {
    /// Two-column `fpr,tpr` CSV for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.fpr, p.tpr));
        }
        out
    }
}

/// ROC curve and trapezoidal AUC. Tied scores form a single step, which makes
/// the area equal `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<RocCurve> {
    if y_true.len() != scores.len() {
        return Err(Error::Shape(format!(
            "{} labels but {} scores",
            y_true.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Input("scores must be finite".into()));
    }
    let n_pos = y_true.iter().filter(|&&y| y == 1).count() as u64;
    let n_neg = y_true.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Class("ROC needs both classes in the truth labels".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area in units of one (pos, neg) pair, kept exact
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp_prev, fp_prev) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += u128::from(fp - fp_prev) * u128::from(tp + tp_prev);
        thresholds.push(s);
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    let auc = area2 as f64 / (2.0 * n_pos as f64 * n_neg as f64);
    Ok(RocCurve {
        points,
        thresholds,
        auc,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub model_id: String,
    pub dataset_id: String,
    pub seed: u64,
}

/// Hard-vote threshold metrics together with the probability-ranked ROC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
    pub f1_degenerate: bool,
    pub roc: RocCurve,
    pub metadata: ReportMetadata,
}

impl EvalReport {
    pub fn evaluate(
        y_true: &[u8],
        y_pred: &[u8],
        scores: &[f64],
        metadata: ReportMetadata,
    ) -> Result<Self> {
        let confusion = confusion(y_true, y_pred)?;
        let m = classification_metrics(&confusion)?;
        let roc = roc_auc(y_true, scores)?;
        Ok(Self {
            confusion,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            precision_degenerate: m.precision_degenerate,
            recall_degenerate: m.recall_degenerate,
            f1_degenerate: m.f1_degenerate,
            roc,
            metadata,
        })
    }

    pub fn metrics(&self) -> ClassificationMetrics {
        ClassificationMetrics {
            accuracy: self.accuracy,
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
            precision_degenerate: self.precision_degenerate,
            recall_degenerate: self.recall_degenerate,
            f1_degenerate: self.f1_degenerate,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Brute-force Mann-Whitney statistic over all (positive, negative) pairs.
    fn pairwise_auc(y: &[u8], s: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            for (j, &yj) in y.iter().enumerate() {
                if yi == 1 && yj == 0 {
                    pairs += 1.0;
                    if s[i] > s[j] {
                        wins += 1.0;
                    } else if s[i] == s[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn confusion_examples() {
        let c = confusion(&[1, 0], &[1, 0]).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (1, 1, 0, 0));
        let c = confusion(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (1, 1, 1, 1));
        let c = confusion(&[1, 1, 1], &[0, 0, 0]).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (0, 0, 0, 3));
        assert!(matches!(confusion(&[1], &[1, 0]), Err(Error::Shape(_))));
    }

    #[test]
    fn metric_arithmetic() {
        let c = ConfusionMatrix {
            tp: 88,
            fp: 12,
            fn_: 13,
            tn: 87,
        };
        let m = classification_metrics(&c).unwrap();
        assert_eq!(m.precision, 0.88);
        assert_eq!(m.recall, 88.0 / 101.0);
        assert_eq!(m.accuracy, 0.875);
        assert!((m.f1 - 2.0 * 0.88 * (88.0 / 101.0) / (0.88 + 88.0 / 101.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let c = ConfusionMatrix {
            tp: 0,
            fp: 0,
            fn_: 3,
            tn: 5,
        };
        let m = classification_metrics(&c).unwrap();
        assert_eq!(m.precision, 0.0);
        assert!(m.precision_degenerate);
        assert!(m.f1_degenerate);
        assert!(!m.recall_degenerate);
        assert!(classification_metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn perfect_predictor() {
        let c = ConfusionMatrix {
            tp: 4,
            fp: 0,
            fn_: 0,
            tn: 6,
        };
        let m = classification_metrics(&c).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0, 1, 0, 1], &[0.3; 4]).unwrap().auc, 0.5);
        let y = [1, 0, 1, 0];
        let s = [0.9, 0.8, 0.7, 0.6];
        assert_eq!(pairwise_auc(&y, &s), 0.75);
        assert_eq!(roc_auc(&y, &s).unwrap().auc, 0.75);
        assert!(matches!(roc_auc(&[1, 1], &[0.1, 0.2]), Err(Error::Class(_))));
    }

    #[test]
    fn curve_endpoints_and_monotonicity() {
        let roc = roc_auc(&[1, 0, 1, 0, 0], &[0.9, 0.9, 0.4, 0.2, 0.2]).unwrap();
        assert_eq!(roc.points[0], RocPoint { fpr: 0.0, tpr: 0.0 });
        assert_eq!(*roc.points.last().unwrap(), RocPoint { fpr: 1.0, tpr: 1.0 });
        assert_eq!(roc.thresholds, vec![0.9, 0.4, 0.2]);
        assert_eq!(roc.points.len(), roc.thresholds.len() + 1);
        assert!(roc.to_csv().starts_with("fpr,tpr\n0,0\n"));
    }

    fn labels_and_scores() -> impl Strategy<Value = (Vec<u8>, Vec<f64>)> {
        (2usize..200).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0u8..10, n),
            )
                .prop_filter("both classes", |(y, _)| y.contains(&0) && y.contains(&1))
                .prop_map(|(y, s)| (y, s.into_iter().map(|v| f64::from(v) / 10.0).collect()))
        })
    }

    proptest! {
        #[test]
        fn trapezoid_matches_pairwise_oracle((y, s) in labels_and_scores()) {
            let roc = roc_auc(&y, &s).unwrap();
            prop_assert!((roc.auc - pairwise_auc(&y, &s)).abs() < 1e-9);
            for w in roc.points.windows(2) {
                prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
            }
        }

        #[test]
        fn monotone_transform_invariance((y, s) in labels_and_scores()) {
            let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert_eq!(roc_auc(&y, &s).unwrap().points, roc_auc(&y, &t).unwrap().points);
        }

        #[test]
        fn negated_scores_complement(
            (y, perm) in (2usize..100).prop_flat_map(|n| (
                prop::collection::vec(0u8..2, n),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            ))
        ) {
            prop_assume!(y.contains(&0) && y.contains(&1));
            let s: Vec<f64> = perm.iter().map(|&v| v as f64).collect();
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            let total = roc_auc(&y, &s).unwrap().auc + roc_auc(&y, &neg).unwrap().auc;
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn serialized_report_reproduces_metrics((y, s) in labels_and_scores()) {
            let pred: Vec<u8> = s.iter().map(|&v| u8::from(v >= 0.5)).collect();
            let meta = ReportMetadata { model_id: "m".into(), dataset_id: "d".into(), seed: 1 };
            let report = EvalReport::evaluate(&y, &pred, &s, meta).unwrap();
            let back = EvalReport::from_json(&report.to_json().unwrap()).unwrap();
            prop_assert_eq!(&back, &report);
            let recomputed = classification_metrics(&back.confusion).unwrap();
            prop_assert_eq!(recomputed, back.metrics());
        }
    }
}
