//! Pairwise edge classification scores over unordered node pairs.

use serde::{Deserialize, Serialize};

use crate::data::check_adjacency;
use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn of(predicted: &DenseMatrix, truth: &DenseMatrix) -> Result<Self> {
        if predicted.shape() != truth.shape() {
            return Err(GlnError::Dimension(format!(
                "edge metrics: prediction {:?} vs truth {:?}",
                predicted.shape(),
                truth.shape()
            )));
        }
        check_adjacency(predicted)?;
        check_adjacency(truth)?;
        let n = truth.rows();
        let mut c = Confusion::default();
        for i in 0..n {
            for j in (i + 1)..n {
                match (predicted[(i, j)] != 0.0, truth[(i, j)] != 0.0) {
                    (true, true) => c.tp += 1,
                    (true, false) => c.fp += 1,
                    (false, true) => c.fn_ += 1,
                    (false, false) => c.tn += 1,
                }
            }
        }
        Ok(c)
    }

    pub fn pairs(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeClassReport {
    pub accuracy: f64,
    pub iou: f64,
    pub dice: f64,
    pub precision: f64,
    pub recall: f64,
}

/// `num / den`, with 0/0 read as a perfect score.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl EdgeClassReport {
    pub fn from_confusion(c: &Confusion) -> Self {
        Self {
            accuracy: ratio(c.tp + c.tn, c.pairs()),
            iou: ratio(c.tp, c.tp + c.fp + c.fn_),
            dice: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
            precision: ratio(c.tp, c.tp + c.fp),
            recall: ratio(c.tp, c.tp + c.fn_),
        }
    }

    /// Per-field mean; `None` for an empty slice.
    pub fn mean(reports: &[EdgeClassReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let k = reports.len() as f64;
        let avg = |f: fn(&EdgeClassReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
        Some(Self {
            accuracy: avg(|r| r.accuracy),
            iou: avg(|r| r.iou),
            dice: avg(|r| r.dice),
            precision: avg(|r| r.precision),
            recall: avg(|r| r.recall),
        })
    }
}

pub fn edge_class_metrics(predicted: &DenseMatrix, truth: &DenseMatrix) -> Result<EdgeClassReport> {
    Ok(EdgeClassReport::from_confusion(&Confusion::of(predicted, truth)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::adjacency_from_edges;

    #[test]
    fn perfect_and_empty_predictions() {
        let truth = adjacency_from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let r = edge_class_metrics(&truth, &truth).unwrap();
        assert_eq!(r, EdgeClassReport { accuracy: 1.0, iou: 1.0, dice: 1.0, precision: 1.0, recall: 1.0 });
        let r = edge_class_metrics(&DenseMatrix::zeros(4, 4), &truth).unwrap();
        assert_eq!((r.recall, r.iou), (0.0, 0.0));
        let empty = DenseMatrix::zeros(3, 3);
        assert_eq!(edge_class_metrics(&empty, &empty).unwrap().iou, 1.0);
    }

    #[test]
    fn one_miss_one_false_alarm() {
        let truth = adjacency_from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let pred = adjacency_from_edges(4, &[(0, 1), (1, 2), (0, 3)]).unwrap();
        let r = edge_class_metrics(&pred, &truth).unwrap();
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.iou, 0.5);
        assert!((r.dice - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.accuracy - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        assert!(edge_class_metrics(&DenseMatrix::zeros(3, 3), &DenseMatrix::zeros(4, 4)).is_err());
    }
}
