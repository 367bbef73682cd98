use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniformly sampled complex signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal<T> {
    pub samples: Vec<Complex<T>>,
    pub sample_rate: f64,
}

impl<T: Real> ComplexSignal<T> {
    pub fn new(samples: Vec<Complex<T>>, sample_rate: f64) -> Self {
        ComplexSignal { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|x|²` over all samples.
    pub fn power(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<T>() / T::of_usize(self.samples.len())
    }

    /// Rejects empty signals and any non-finite sample.
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Empty("signal"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::param("sample_rate", format!("{} must be positive", self.sample_rate)));
        }
        if let Some(k) = self.samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFinite(format!("signal sample {k}")));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ComplexSignal<U> {
        ComplexSignal {
            samples: self
                .samples
                .iter()
                .map(|s| Complex::new(U::of(s.re.as_f64()), U::of(s.im.as_f64())))
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Multiplies sample `k` by `exp(j(2π f k / f_s + phase))`.
///
/// The phase argument is reduced modulo one cycle in `f64` before the trig
/// call, so long signals do not lose precision.
pub(crate) fn rotate<T: Real>(x: &ComplexSignal<T>, freq: f64, phase: f64) -> ComplexSignal<T> {
    let step = freq / x.sample_rate;
    let samples = x
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let cycles = (k as f64 * step).fract();
            let (sin, cos) = (std::f64::consts::TAU * cycles + phase).sin_cos();
            s * Complex::new(T::of(cos), T::of(sin))
        })
        .collect();
    ComplexSignal {
        samples,
        sample_rate: x.sample_rate,
    }
}
