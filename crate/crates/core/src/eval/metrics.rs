use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::RoleLabel;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    /// Percentages rounded to two decimals.
    pub fn percent(&self) -> Scores {
        let r = |x: f64| (x * 10_000.0).round() / 100.0;
        Scores {
            precision: r(self.precision),
            recall: r(self.recall),
            f1: r(self.f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<RoleLabel>,
    pub per_class: BTreeMap<RoleLabel, ClassMetrics>,
    /// Per-class scores averaged with weights `support / n`.
    pub macro_weighted: Scores,
    /// `macro_weighted` in percent, rounded to two decimals.
    pub macro_weighted_percent: Scores,
    /// `confusion[true][predicted]`, indexed like `classes`.
    pub confusion: Vec<Vec<usize>>,
    pub n: usize,
}

pub(crate) fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision of a class that is never predicted is 0, as is F1 when both
/// precision and recall are 0.
pub fn macro_weighted_metrics(
    y_true: &[RoleLabel],
    y_pred: &[RoleLabel],
    classes: &[RoleLabel],
) -> Result<EvalReport, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::DimensionMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty("label vectors"));
    }
    let pos = |l: RoleLabel| classes.iter().position(|&c| c == l).ok_or(EvalError::UnknownLabel(l));
    let c = classes.len();
    let mut confusion = vec![vec![0usize; c]; c];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[pos(t)?][pos(p)?] += 1;
    }
    let n = y_true.len();
    let mut per_class = BTreeMap::new();
    let mut macro_weighted = Scores::default();
    for (i, &class) in classes.iter().enumerate() {
        let tp = confusion[i][i] as f64;
        let support: usize = confusion[i].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[i]).sum();
        let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp / support as f64 };
        let f1 = harmonic(precision, recall);
        let w = support as f64 / n as f64;
        macro_weighted.precision += w * precision;
        macro_weighted.recall += w * recall;
        macro_weighted.f1 += w * f1;
        per_class.insert(
            class,
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    Ok(EvalReport {
        classes: classes.to_vec(),
        per_class,
        macro_weighted,
        macro_weighted_percent: macro_weighted.percent(),
        confusion,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use RoleLabel::{Backend as A, Frontend as B};

    #[test]
    fn worked_example() {
        let r = macro_weighted_metrics(&[A, A, B], &[A, B, B], &[A, B]).unwrap();
        let a = r.per_class[&A];
        assert_eq!((a.precision, a.recall), (1.0, 0.5));
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-12);
        let b = r.per_class[&B];
        assert_eq!((b.precision, b.recall), (0.5, 1.0));
        assert!((r.macro_weighted.precision - 0.8333333333333333).abs() < 1e-12);
        assert!((r.macro_weighted.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.confusion, vec![vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn perfect_predictions() {
        let y = [A, B, B, A, RoleLabel::Mobile];
        let r = macro_weighted_metrics(&y, &y, &RoleLabel::ALL).unwrap();
        assert_eq!(r.macro_weighted, Scores { precision: 1.0, recall: 1.0, f1: 1.0 });
        for (i, row) in r.confusion.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!(i == j || v == 0);
            }
        }
    }

    #[test]
    fn unknown_label_and_never_predicted() {
        assert!(matches!(
            macro_weighted_metrics(&[A], &[RoleLabel::Mobile], &[A, B]),
            Err(EvalError::UnknownLabel(RoleLabel::Mobile))
        ));
        let r = macro_weighted_metrics(&[A, B], &[A, A], &[A, B]).unwrap();
        assert_eq!(r.per_class[&B].precision, 0.0);
        assert_eq!(r.per_class[&B].f1, 0.0);
    }

    #[test]
    fn percent_rounding() {
        let s = Scores { precision: 0.187_318, recall: 0.4328, f1: 0.261_464 };
        assert_eq!(s.percent(), Scores { precision: 18.73, recall: 43.28, f1: 26.15 });
    }
}
