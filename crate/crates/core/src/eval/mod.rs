//! Confusion matrix, precision/recall/F1 and a classification report.
//!
//! The positive class is stated explicitly. Within this crate fracture is
//! positive; reports also carry a row for the negative class, so either
//! reading is available.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{predictions} predictions but {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same counts read with the other class as positive.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

pub fn confusion<L: PartialEq>(
    predictions: &[L],
    labels: &[L],
    positive: &L,
) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (p, l) in predictions.iter().zip(labels) {
        match (p == positive, l == positive) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// A ratio whose denominator may be zero; then `value` is 0 and
/// `undefined` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub undefined: bool,
}

impl Metric {
    fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Metric {
                value: 0.0,
                undefined: true,
            }
        } else {
            Metric {
                value: num / den,
                undefined: false,
            }
        }
    }
}

pub fn precision(cm: &ConfusionMatrix) -> Metric {
    Metric::ratio(cm.tp as f64, (cm.tp + cm.fp) as f64)
}

pub fn recall(cm: &ConfusionMatrix) -> Metric {
    Metric::ratio(cm.tp as f64, (cm.tp + cm.fn_) as f64)
}

pub fn f1(cm: &ConfusionMatrix) -> Metric {
    let (p, r) = (precision(cm), recall(cm));
    if p.undefined || r.undefined {
        return Metric {
            value: 0.0,
            undefined: true,
        };
    }
    Metric::ratio(2.0 * p.value * r.value, p.value + r.value)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Metric {
    Metric::ratio((cm.tp + cm.tn) as f64, cm.total() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: String,
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub positive_class: String,
    pub confusion: ConfusionMatrix,
    pub classes: Vec<ClassRow>,
    pub accuracy: Metric,
    pub total: usize,
}

impl ClassificationReport {
    /// One row per class present in the data (negative first), computed by
    /// treating each in turn as positive.
    pub fn new(cm: ConfusionMatrix, negative: &str, positive: &str) -> Result<Self, EvalError> {
        if cm.total() == 0 {
            return Err(EvalError::EmptyInput);
        }
        let row = |name: &str, m: &ConfusionMatrix| ClassRow {
            class: name.to_owned(),
            precision: precision(m),
            recall: recall(m),
            f1: f1(m),
            support: m.tp + m.fn_,
        };
        let neg = cm.swapped();
        let classes = [row(negative, &neg), row(positive, &cm)]
            .into_iter()
            .filter(|r| r.support > 0)
            .collect();
        Ok(Self {
            positive_class: positive.to_owned(),
            confusion: cm,
            classes,
            accuracy: accuracy(&cm),
            total: cm.total(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table plus confusion matrix.
    pub fn to_text(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|r| r.class.len())
            .chain([8])
            .max()
            .unwrap_or(8);
        let fmt = |m: &Metric| {
            if m.undefined {
                format!("{:>9}", "n/a")
            } else {
                format!("{:>9.4}", m.value)
            }
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$} {:>9} {:>9} {:>9} {:>9}",
            "", "precision", "recall", "f1-score", "support"
        );
        for r in &self.classes {
            let _ = writeln!(
                out,
                "{:<width$} {} {} {} {:>9}",
                r.class,
                fmt(&r.precision),
                fmt(&r.recall),
                fmt(&r.f1),
                r.support
            );
        }
        let _ = writeln!(
            out,
            "{:<width$} {:>9} {:>9} {} {:>9}",
            "accuracy",
            "",
            "",
            fmt(&self.accuracy),
            self.total
        );
        let cm = &self.confusion;
        let _ = writeln!(out, "\nconfusion (positive = {})", self.positive_class);
        let _ = writeln!(out, "{:<16} {:>12} {:>12}", "", "pred. pos", "pred. neg");
        let _ = writeln!(out, "{:<16} {:>12} {:>12}", "actual pos", cm.tp, cm.fn_);
        let _ = writeln!(out, "{:<16} {:>12} {:>12}", "actual neg", cm.fp, cm.tn);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        let labels: Vec<bool> = (0..330).map(|i| i < 316).collect();
        let cm = confusion(&labels, &labels, &true).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 316, fp: 0, tn: 14, fn_: 0 });

        let cm = confusion(&[false, true], &[true, false], &true).unwrap();
        assert_eq!((cm.tp, cm.tn), (0, 0));

        let cm = confusion(&[1], &[1], &1).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, ..Default::default() });

        assert!(matches!(confusion(&[1], &[1, 2], &1), Err(EvalError::LengthMismatch { .. })));
        assert_eq!(confusion::<u8>(&[], &[], &1), Err(EvalError::EmptyInput));
    }

    #[test]
    fn metric_examples() {
        let cm = ConfusionMatrix { tp: 316, fp: 0, tn: 14, fn_: 0 };
        assert_eq!((precision(&cm).value, recall(&cm).value, f1(&cm).value), (1.0, 1.0, 1.0));
        let cm = ConfusionMatrix { tp: 1, fp: 1, tn: 0, fn_: 0 };
        assert_eq!(precision(&cm).value, 0.5);
        assert_eq!(recall(&cm).value, 1.0);
        assert!((f1(&cm).value - 2.0 / 3.0).abs() < 1e-15);
        let cm = ConfusionMatrix { tp: 0, fp: 0, tn: 5, fn_: 2 };
        assert_eq!(precision(&cm), Metric { value: 0.0, undefined: true });
    }

    #[test]
    fn report_shapes() {
        let cm = ConfusionMatrix { tp: 14, fp: 0, tn: 316, fn_: 0 };
        let r = ClassificationReport::new(cm, "no_fracture", "fracture").unwrap();
        assert_eq!(r.classes.len(), 2);
        assert_eq!(r.classes[0].support, 316);
        assert_eq!(r.classes[1].support, 14);
        assert!(r.classes.iter().all(|c| c.precision.value == 1.0 && c.f1.value == 1.0));
        let text = r.to_text();
        assert!(text.contains("no_fracture"));
        assert!(text.contains("accuracy"));
        let back: ClassificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);

        // Single-class test set.
        let cm = ConfusionMatrix { tp: 0, fp: 0, tn: 7, fn_: 0 };
        let r = ClassificationReport::new(cm, "no_fracture", "fracture").unwrap();
        assert_eq!(r.classes.len(), 1);
        assert_eq!(r.accuracy.value, r.classes[0].recall.value);

        // Mixed, checked by hand.
        let cm = ConfusionMatrix { tp: 6, fp: 2, tn: 9, fn_: 3 };
        let r = ClassificationReport::new(cm, "neg", "pos").unwrap();
        let pos = &r.classes[1];
        assert_eq!(pos.precision.value, 6.0 / 8.0);
        assert_eq!(pos.recall.value, 6.0 / 9.0);
        let f = 2.0 * 0.75 * (2.0 / 3.0) / (0.75 + 2.0 / 3.0);
        assert!((pos.f1.value - f).abs() < 1e-15);
        let neg = &r.classes[0];
        assert_eq!(neg.precision.value, 9.0 / 12.0);
        assert_eq!(neg.recall.value, 9.0 / 11.0);
        assert_eq!(r.accuracy.value, 15.0 / 20.0);
        assert!(ClassificationReport::new(ConfusionMatrix::default(), "a", "b").is_err());
    }

    proptest! {
        #[test]
        fn invariants(tp in 0usize..50, fp in 0usize..50, tn in 0usize..50, fn_ in 0usize..50) {
            let cm = ConfusionMatrix { tp, fp, tn, fn_ };
            prop_assume!(cm.total() > 0);
            let acc = accuracy(&cm).value;
            prop_assert_eq!(acc, (tp + tn) as f64 / cm.total() as f64);
            prop_assert_eq!(accuracy(&cm.swapped()).value, acc);
            prop_assert_eq!(cm.swapped().swapped(), cm);
            let (p, r, f) = (precision(&cm), recall(&cm), f1(&cm));
            if !f.undefined {
                prop_assert!(f.value >= p.value.min(r.value) - 1e-12);
                prop_assert!(f.value <= p.value.max(r.value) + 1e-12);
            }
        }
    }
}
