use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    pub value: f64,
    /// Set when at least one probability hit [`PROB_FLOOR`].
    pub floored: bool,
}

/// `-ln p[label]`.
pub fn cross_entropy_loss<T: Real>(probs: ArrayView1<'_, T>, label: usize) -> Result<Loss> {
    let p = probs
        .get(label)
        .ok_or_else(|| Error::param("label", format!("{label} is out of range for {} classes", probs.len())))?
        .as_f64();
    if !p.is_finite() || p < 0.0 {
        return Err(Error::NonFinite(format!("probability of class {label}")));
    }
    Ok(Loss {
        value: -p.max(PROB_FLOOR).ln(),
        floored: p < PROB_FLOOR,
    })
}

/// Mean cross-entropy over the rows of `probs`.
pub fn batch_cross_entropy<T: Real>(probs: ArrayView2<'_, T>, labels: &[usize]) -> Result<Loss> {
    if labels.is_empty() {
        return Err(Error::Empty("label batch"));
    }
    if probs.nrows() != labels.len() {
        return Err(Error::shape("probability rows", labels.len(), probs.nrows()));
    }
    let mut total = 0.0;
    let mut floored = false;
    for (row, &l) in probs.rows().into_iter().zip(labels) {
        let loss = cross_entropy_loss(row, l)?;
        total += loss.value;
        floored |= loss.floored;
    }
    Ok(Loss {
        value: total / labels.len() as f64,
        floored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    #[test]
    fn values() {
        assert_eq!(cross_entropy_loss(arr1(&[0.0, 1.0]).view(), 1).unwrap().value, 0.0);
        let k = 6;
        let u = ndarray::Array1::from_elem(k, 1.0 / k as f64);
        assert!((cross_entropy_loss(u.view(), 3).unwrap().value - (k as f64).ln()).abs() < 1e-12);
        let l = cross_entropy_loss(arr1(&[0.7, 0.2, 0.1]).view(), 0).unwrap();
        assert!((l.value - 0.356675).abs() < 1e-6);
        assert!(!l.floored);
    }

    #[test]
    fn zero_probability_is_floored() {
        let l = cross_entropy_loss(arr1(&[1.0f32, 0.0]).view(), 1).unwrap();
        assert!(l.floored);
        assert!((l.value - 1e30f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn batch_mean() {
        let p = arr2(&[[0.5, 0.5], [0.25, 0.75]]);
        let l = batch_cross_entropy(p.view(), &[0, 1]).unwrap();
        assert!((l.value - (2f64.ln() + (4.0f64 / 3.0).ln()) / 2.0).abs() < 1e-12);
        assert!(batch_cross_entropy(p.view(), &[0]).is_err());
    }
}
