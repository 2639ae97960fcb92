use serde::{Deserialize, Serialize};

use crate::error::{CsixError, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn column_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|c| self.counts[c][c]).sum()
    }

    /// trace / total.
    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }
}

pub fn confusion(predictions: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(CsixError::DimensionMismatch {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        for v in [p, l] {
            if v >= classes {
                return Err(CsixError::IndexOutOfRange {
                    index: v + 1,
                    max: classes,
                });
            }
        }
        counts[l][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `None` where the class was never predicted.
    pub precision: Vec<Option<f64>>,
    /// `None` where the class has no samples.
    pub recall: Vec<Option<f64>>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn mean_defined(values: &[Option<f64>]) -> f64 {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        0.0
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    }
}

/// Per-class precision and recall with macro means over the defined entries.
pub fn precision_recall(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(CsixError::InvalidInput("confusion matrix is all zero".into()));
    }
    let m = cm.classes();
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision: Vec<_> = (0..m).map(|c| ratio(cm.counts[c][c], cm.column_sum(c))).collect();
    let recall: Vec<_> = (0..m).map(|c| ratio(cm.counts[c][c], cm.row_sum(c))).collect();
    let macro_precision = mean_defined(&precision);
    let macro_recall = mean_defined(&recall);
    let f1 = if macro_precision + macro_recall > 0.0 {
        2.0 * macro_precision * macro_recall / (macro_precision + macro_recall)
    } else {
        0.0
    };
    Ok(Metrics {
        precision,
        recall,
        macro_precision,
        macro_recall,
        f1,
        accuracy: cm.accuracy(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetric {
    pub location: String,
    /// Percent, rounded to the nearest integer; null when undefined.
    pub precision_pct: Option<u32>,
    pub recall_pct: Option<u32>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// One classifier's block in an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: String,
    pub classes: Vec<ClassMetric>,
    pub macro_precision_pct: f64,
    pub macro_recall_pct: f64,
    pub f1_pct: f64,
    pub accuracy_pct: f64,
    pub confusion: Vec<Vec<u64>>,
    pub note: String,
}

fn pct(v: Option<f64>) -> Option<u32> {
    v.map(|x| (x * 100.0).round() as u32)
}

impl EvalReport {
    pub fn new(scheme: &str, cm: &ConfusionMatrix, names: &[String]) -> Result<Self> {
        let m = precision_recall(cm)?;
        let classes = (0..cm.classes())
            .map(|c| ClassMetric {
                location: names.get(c).cloned().unwrap_or_else(|| format!("p{}", c + 1)),
                precision_pct: pct(m.precision[c]),
                recall_pct: pct(m.recall[c]),
                precision: m.precision[c],
                recall: m.recall[c],
            })
            .collect();
        Ok(EvalReport {
            scheme: scheme.to_string(),
            classes,
            macro_precision_pct: 100.0 * m.macro_precision,
            macro_recall_pct: 100.0 * m.macro_recall,
            f1_pct: 100.0 * m.f1,
            accuracy_pct: 100.0 * m.accuracy,
            confusion: cm.counts.clone(),
            note: "null precision marks a class never predicted; it is excluded from the macro mean".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_class_hand_example() {
        let cm = ConfusionMatrix {
            counts: vec![vec![8, 2], vec![4, 6]],
        };
        let m = precision_recall(&cm).unwrap();
        assert_eq!(m.precision, vec![Some(8.0 / 12.0), Some(6.0 / 8.0)]);
        assert_eq!(m.recall, vec![Some(0.8), Some(0.6)]);
        let (p, r) = ((8.0 / 12.0 + 0.75) / 2.0, 0.7);
        assert!((m.f1 - 2.0 * p * r / (p + r)).abs() < 1e-15);
        assert_eq!(m.accuracy, 0.7);
    }

    #[test]
    fn perfect_and_constant_predictors() {
        let labels = vec![0, 1, 2, 2, 1];
        let cm = confusion(&labels, &labels, 3).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
        let m = precision_recall(&cm).unwrap();
        assert_eq!((m.macro_precision, m.macro_recall, m.f1), (1.0, 1.0, 1.0));

        let cm = confusion(&[1; 5], &labels, 3).unwrap();
        assert_eq!(cm.total(), 5);
        assert!((0..3).all(|c| c == 1 || cm.column_sum(c) == 0));
        let m = precision_recall(&cm).unwrap();
        assert_eq!(m.precision, vec![None, Some(0.4), None]);
        assert_eq!(m.macro_precision, 0.4);
    }

    #[test]
    fn errors() {
        assert!(confusion(&[0, 1], &[0], 2).is_err());
        assert!(confusion(&[0, 2], &[0, 1], 2).is_err());
        let zero = ConfusionMatrix {
            counts: vec![vec![0, 0], vec![0, 0]],
        };
        assert!(precision_recall(&zero).is_err());
    }

    #[test]
    fn report_rounds_percentages() {
        let cm = ConfusionMatrix {
            counts: vec![vec![8, 2], vec![4, 6]],
        };
        let r = EvalReport::new("dnn", &cm, &["p1".into(), "p2".into()]).unwrap();
        assert_eq!(r.classes[0].precision_pct, Some(67));
        assert_eq!(r.classes[1].recall_pct, Some(60));
        assert_eq!(r.confusion, cm.counts);
    }

    proptest! {
        #[test]
        fn accuracy_invariant_under_class_permutation(
            pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
            perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let (p, l): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let a = confusion(&p, &l, 4).unwrap();
            let pp: Vec<_> = p.iter().map(|&c| perm[c]).collect();
            let pl: Vec<_> = l.iter().map(|&c| perm[c]).collect();
            let b = confusion(&pp, &pl, 4).unwrap();
            prop_assert_eq!(a.trace(), b.trace());
            prop_assert_eq!(a.total(), b.total());
        }
    }
}
