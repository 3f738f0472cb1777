use serde::{Deserialize, Serialize};

use super::mask::MaskStack;
use crate::error::{Error, Result};

/// Pixel-level classification scores, pooled over every pixel of every frame.
///
/// Zero denominators: precision is 1 when nothing was predicted and nothing
/// was missed, else 0; recall is 1 when there is no foreground and nothing was
/// predicted, else 0; F1 is 0 when precision + recall is 0; FPR is 0 when
/// there is no background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else if fn_ == 0 {
            1.0
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else if fp == 0 {
            1.0
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let fpr = if fp + tn > 0 {
            fp as f64 / (fp + tn) as f64
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            fpr,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Micro-averaged metrics of `pred` against `truth`.
pub fn compute_metrics(pred: &MaskStack, truth: &MaskStack) -> Result<Metrics> {
    let dims = |m: &MaskStack| (m.width(), m.height(), m.len());
    if dims(pred) != dims(truth) {
        return Err(Error::shape(
            format!("{:?} (width, height, frames)", dims(truth)),
            format!("{:?}", dims(pred)),
        ));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &t) in pred.bits().iter().zip(truth.bits()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arithmetic_example() {
        let m = Metrics::from_counts(8, 2, 2, 88);
        assert!((m.precision - 0.8).abs() < 1e-15);
        assert!((m.recall - 0.8).abs() < 1e-15);
        assert!((m.f1 - 0.8).abs() < 1e-15);
        assert!((m.fpr - 2.0 / 90.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_inverted_predictions() {
        let truth = MaskStack::from_fn(4, 4, 3, |p, j| (p + j) % 5 == 0);
        let m = compute_metrics(&truth, &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.fpr), (1.0, 1.0, 1.0, 0.0));
        let m = compute_metrics(&truth.complement(), &truth).unwrap();
        assert_eq!(m.tp, 0);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.total(), 48);
    }

    #[test]
    fn empty_truth_conventions() {
        let empty = MaskStack::empty(3, 3, 2);
        let m = compute_metrics(&empty, &empty).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let one = MaskStack::from_fn(3, 3, 2, |p, j| p == 0 && j == 0);
        let m = compute_metrics(&one, &empty).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(compute_metrics(&one, &MaskStack::empty(3, 3, 1)).is_err());
    }

    #[test]
    fn serialises_with_fn_column() {
        let json = serde_json::to_string(&Metrics::from_counts(1, 0, 0, 1)).unwrap();
        assert!(json.contains("\"fn\":0"));
    }

    proptest! {
        #[test]
        fn scores_are_bounded_and_harmonic(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
            let m = Metrics::from_counts(tp, fp, fn_, tn);
            for v in [m.precision, m.recall, m.f1, m.fpr] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((m.f1 * (m.precision + m.recall) - 2.0 * m.precision * m.recall).abs() <= 1e-12);
        }

        #[test]
        fn invariant_under_joint_frame_permutation(seed in 0u64..1000) {
            let pred = MaskStack::from_fn(3, 2, 4, |p, j| (p as u64 * 7 + j as u64 * 3 + seed) % 4 == 0);
            let truth = MaskStack::from_fn(3, 2, 4, |p, j| (p as u64 * 5 + j as u64 + seed) % 3 == 0);
            let order = [2, 0, 3, 1];
            prop_assert_eq!(
                compute_metrics(&pred, &truth).unwrap(),
                compute_metrics(&pred.permuted(&order), &truth.permuted(&order)).unwrap()
            );
        }
    }
}
