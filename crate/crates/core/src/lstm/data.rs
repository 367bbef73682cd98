use ndarray::{Array2, Array3, ArrayView3, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Labelled frames stacked as `(frames, steps, features)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet<T> {
    pub frames: Array3<T>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl<T: Real> FrameSet<T> {
    pub fn new(frames: Array3<T>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if frames.len_of(Axis(0)) != labels.len() {
            return Err(Error::shape("label count", frames.len_of(Axis(0)), labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::param("label", format!("{bad} is not below {num_classes}")));
        }
        Ok(FrameSet {
            frames,
            labels,
            num_classes,
        })
    }

    /// Stacks equally shaped `steps x features` frames.
    pub fn from_frames(frames: &[Array2<T>], labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty("frame list"))?;
        let (steps, feats) = first.dim();
        let mut stacked = Array3::zeros((frames.len(), steps, feats));
        for (i, f) in frames.iter().enumerate() {
            if f.dim() != (steps, feats) {
                return Err(Error::shape(format!("frame {i}"), format!("{steps}x{feats}"), format!("{:?}", f.dim())));
            }
            stacked.index_axis_mut(Axis(0), i).assign(f);
        }
        Self::new(stacked, labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.frames.len_of(Axis(1))
    }

    pub fn features(&self) -> usize {
        self.frames.len_of(Axis(2))
    }

    /// Subset in the given index order.
    pub fn select(&self, idx: &[usize]) -> Self {
        FrameSet {
            frames: self.frames.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Time-major batch `(steps, batch, features)` for the given indices.
    pub fn gather_time_major(&self, idx: &[usize]) -> Array3<T> {
        let mut out = Array3::zeros((self.steps(), idx.len(), self.features()));
        for (b, &i) in idx.iter().enumerate() {
            out.index_axis_mut(Axis(1), b).assign(&self.frames.index_axis(Axis(0), i));
        }
        out
    }

    pub fn view(&self) -> ArrayView3<'_, T> {
        self.frames.view()
    }

    /// Number of distinct labels present.
    pub fn classes_present(&self) -> usize {
        let mut seen = vec![false; self.num_classes];
        for &l in &self.labels {
            seen[l] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }
}
