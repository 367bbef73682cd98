use ndarray::Axis;
use serde::{Deserialize, Serialize};

use super::data::FrameSet;
use super::network::LstmNetwork;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Accuracy and confusion counts (rows: true class, columns: predicted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

impl Evaluation {
    pub fn from_predictions(labels: &[usize], predicted: &[usize], num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        if labels.len() != predicted.len() {
            return Err(Error::shape("prediction count", labels.len(), predicted.len()));
        }
        let mut confusion = vec![vec![0usize; num_classes]; num_classes];
        for (&t, &p) in labels.iter().zip(predicted) {
            if t >= num_classes || p >= num_classes {
                return Err(Error::param("label", format!("({t}, {p}) outside {num_classes} classes")));
            }
            confusion[t][p] += 1;
        }
        let correct: usize = (0..num_classes).map(|k| confusion[k][k]).sum();
        Ok(Evaluation {
            accuracy: correct as f64 / labels.len() as f64,
            confusion,
            total: labels.len(),
        })
    }

    /// Diagonal over row sum; `NaN` for classes absent from the set.
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.confusion
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let n: usize = row.iter().sum();
                if n == 0 {
                    f64::NAN
                } else {
                    row[k] as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Index of the largest entry per row.
pub fn argmax_rows<T: Real>(probs: &ndarray::Array2<T>) -> Vec<usize> {
    probs
        .axis_iter(Axis(0))
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0
        })
        .collect()
}

pub fn evaluate<T: Real>(net: &LstmNetwork<T>, data: &FrameSet<T>) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let probs = net.predict(data.view(), 400)?;
    Evaluation::from_predictions(&data.labels, &argmax_rows(&probs), data.num_classes)
}
