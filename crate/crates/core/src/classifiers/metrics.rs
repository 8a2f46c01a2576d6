use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::pearson;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    #[serde(rename = "f1-score")]
    pub f1_score: f64,
    pub support: usize,
}

/// Binary classification report with rows `0`, `1`, `accuracy`,
/// `macro avg` and `weighted avg`.
///
/// Undefined ratios (empty denominators) are reported as 0.0 and noted in
/// `warnings`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "0")]
    pub class0: ClassMetrics,
    #[serde(rename = "1")]
    pub class1: ClassMetrics,
    pub accuracy: f64,
    #[serde(rename = "macro avg")]
    pub macro_avg: ClassMetrics,
    #[serde(rename = "weighted avg")]
    pub weighted_avg: ClassMetrics,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn class(&self, c: u8) -> &ClassMetrics {
        if c == 0 {
            &self.class0
        } else {
            &self.class1
        }
    }

    pub fn total(&self) -> usize {
        self.class0.support + self.class1.support
    }

    pub fn has_undefined_metrics(&self) -> bool {
        !self.warnings.is_empty()
    }
}

pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> f64 {
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    hits as f64 / y_true.len() as f64
}

fn ratio(num: usize, den: usize, what: &str, warnings: &mut Vec<String>) -> f64 {
    if den == 0 {
        warnings.push(format!("{what} is undefined (no samples); reported as 0.0"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_report(y_true: &[u8], y_pred: &[u8]) -> Result<EvalReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("classification report of an empty set"));
    }
    if y_true.iter().chain(y_pred).any(|&l| l > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    // confusion[t][p]
    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t as usize][p as usize] += 1;
    }
    let mut warnings = Vec::new();
    let mut per = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1_score: 0.0,
        support: 0,
    }; 2];
    for c in 0..2 {
        let tp = confusion[c][c];
        let predicted = confusion[0][c] + confusion[1][c];
        let support = confusion[c][0] + confusion[c][1];
        let precision = ratio(tp, predicted, &format!("precision of class {c}"), &mut warnings);
        let recall = ratio(tp, support, &format!("recall of class {c}"), &mut warnings);
        let f1_score = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per[c] = ClassMetrics {
            precision,
            recall,
            f1_score,
            support,
        };
    }
    let total = y_true.len();
    let macro_avg = ClassMetrics {
        precision: (per[0].precision + per[1].precision) / 2.0,
        recall: (per[0].recall + per[1].recall) / 2.0,
        f1_score: (per[0].f1_score + per[1].f1_score) / 2.0,
        support: total,
    };
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        (per[0].support as f64 * f(&per[0]) + per[1].support as f64 * f(&per[1])) / total as f64
    };
    let weighted_avg = ClassMetrics {
        precision: weighted(|m| m.precision),
        recall: weighted(|m| m.recall),
        f1_score: weighted(|m| m.f1_score),
        support: total,
    };
    Ok(EvalReport {
        class0: per[0],
        class1: per[1],
        accuracy: (confusion[0][0] + confusion[1][1]) as f64 / total as f64,
        macro_avg,
        weighted_avg,
        warnings,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const W: usize = 12;
        writeln!(
            f,
            "{:>W$}  {:>9} {:>9} {:>9} {:>9}",
            "", "precision", "recall", "f1-score", "support"
        )?;
        writeln!(f)?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, m: &ClassMetrics| {
            writeln!(
                f,
                "{name:>W$}  {:>9.2} {:>9.2} {:>9.2} {:>9}",
                m.precision, m.recall, m.f1_score, m.support
            )
        };
        row(f, "0", &self.class0)?;
        row(f, "1", &self.class1)?;
        writeln!(f)?;
        writeln!(
            f,
            "{:>W$}  {:>9} {:>9} {:>9.2} {:>9}",
            "accuracy",
            "",
            "",
            self.accuracy,
            self.total()
        )?;
        row(f, "macro avg", &self.macro_avg)?;
        row(f, "weighted avg", &self.weighted_avg)
    }
}

/// Pearson correlation between two models' class-1 probabilities.
pub fn prediction_correlation(p1: &[f64], p2: &[f64]) -> Result<f64> {
    pearson(p1, p2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let r = classification_report(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        for m in [&r.class0, &r.class1, &r.macro_avg, &r.weighted_avg] {
            assert_eq!((m.precision, m.recall, m.f1_score), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy, 1.0);
        assert!(!r.has_undefined_metrics());
    }

    #[test]
    fn hand_computed_confusion() {
        // TP=2 FP=1 FN=0 for class 1
        let r = classification_report(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        assert_eq!(r.class1.precision, 2.0 / 3.0);
        assert_eq!(r.class1.recall, 1.0);
        assert!((r.class1.f1_score - 0.8).abs() < 1e-15);
        assert_eq!(r.class0.precision, 1.0);
        assert_eq!(r.class0.recall, 0.5);
        assert_eq!(r.class0.support + r.class1.support, 4);
        let wf = (r.class0.support as f64 * r.class0.f1_score + r.class1.support as f64 * r.class1.f1_score) / 4.0;
        assert_eq!(r.weighted_avg.f1_score, wf);
    }

    #[test]
    fn absent_predicted_class_is_zero_with_warning() {
        let r = classification_report(&[0, 1, 1, 0], &[1, 1, 1, 1]).unwrap();
        assert_eq!(r.class0.precision, 0.0);
        assert_eq!(r.class0.f1_score, 0.0);
        assert!(r.has_undefined_metrics());
    }

    #[test]
    fn errors() {
        assert!(classification_report(&[], &[]).is_err());
        assert!(classification_report(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn table_layout() {
        let r = classification_report(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        let text = r.to_string();
        let names: Vec<&str> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .skip(1)
            .map(|l| l[..12].trim())
            .collect();
        assert_eq!(names, vec!["0", "1", "accuracy", "macro avg", "weighted avg"]);
        assert!(text.contains("           1       0.67      1.00      0.80         2"));
    }

    #[test]
    fn correlation_of_probabilities() {
        let p = [0.2, 0.9, 0.4, 0.7];
        assert!((prediction_correlation(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        let q: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
        assert!((prediction_correlation(&p, &q).unwrap() + 1.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn report_invariants(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..60)) {
                let (t, p): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
                let r = classification_report(&t, &p).unwrap();
                prop_assert_eq!(r.class0.support + r.class1.support, t.len());
                for m in [&r.class0, &r.class1] {
                    if m.precision + m.recall > 0.0 {
                        let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                        prop_assert!((h - m.f1_score).abs() < 1e-12);
                    }
                }
                let wf = (r.class0.support as f64 * r.class0.f1_score
                    + r.class1.support as f64 * r.class1.f1_score) / t.len() as f64;
                prop_assert_eq!(r.weighted_avg.f1_score, wf);
            }
        }
    }
}
