//! RF to baseband conversion: mix the estimated carrier down, low-pass,
//! decimate, and cut the result into power-normalised I/Q frames.

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{rotate, ComplexSignal};
use crate::specest::{blackman_window, ParameterEstimate};

/// One `frame_len x 2` matrix of (I, Q) rows.
pub type Frame<T> = Array2<T>;

/// Linear-phase FIR low-pass with unit DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct LowpassFilter<T> {
    pub taps: Vec<T>,
    /// Cutoff as a fraction of the sample rate.
    pub cutoff: f64,
}

impl<T> LowpassFilter<T> {
    pub fn num_taps(&self) -> usize {
        self.taps.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConverterConfig {
    pub decimation: usize,
    /// Low-pass cutoff as a multiple of the estimated half-bandwidth.
    pub cutoff_margin: f64,
    /// Fixed tap count; `None` sizes the filter from the cutoff.
    pub num_taps: Option<usize>,
    pub frame_len: usize,
}

impl Default for ConverterConfig {
    fn default() -> Self {
        ConverterConfig {
            decimation: 10,
            cutoff_margin: 1.25,
            num_taps: None,
            frame_len: 128,
        }
    }
}

/// Blackman-windowed sinc low-pass, normalised to unit DC gain.
pub fn design_lowpass<T: Real>(cutoff: f64, num_taps: usize) -> Result<LowpassFilter<T>> {
    if !(cutoff > 0.0 && cutoff < 0.5) {
        return Err(Error::param("cutoff", format!("{cutoff} is outside (0, 0.5)")));
    }
    if num_taps % 2 == 0 {
        return Err(Error::param("num_taps", format!("{num_taps} must be odd")));
    }
    if num_taps < 31 {
        return Err(Error::param("num_taps", format!("{num_taps} is below the minimum of 31")));
    }
    let window = blackman_window::<f64>(num_taps)?;
    let mid = (num_taps / 2) as f64;
    let raw: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (std::f64::consts::TAU * cutoff * t).sin() / (std::f64::consts::PI * t)
            };
            sinc * w
        })
        .collect();
    let dc: f64 = raw.iter().sum();
    Ok(LowpassFilter {
        taps: raw.iter().map(|v| T::of(v / dc)).collect(),
        cutoff,
    })
}

/// Odd tap count giving roughly 40 dB rejection one cutoff-width past the
/// passband edge.
pub fn auto_num_taps(cutoff: f64) -> usize {
    let n = ((6.0 / cutoff).ceil() as usize).max(63);
    n | 1
}

/// Removes the estimated carrier: multiplies by `exp(-j2π f̂_c k / f_s)`.
pub fn mix_down<T: Real>(x: &ComplexSignal<T>, f_c_hat: f64) -> ComplexSignal<T> {
    if f_c_hat == 0.0 {
        return x.clone();
    }
    rotate(x, -f_c_hat, 0.0)
}

/// Same-length zero-padded convolution followed by keeping every
/// `factor`-th sample. Only the retained outputs are computed.
pub fn filter_decimate<T: Real>(
    x: &ComplexSignal<T>,
    filt: &LowpassFilter<T>,
    factor: usize,
) -> Result<ComplexSignal<T>> {
    if factor == 0 {
        return Err(Error::param("decimation", "factor must be at least 1"));
    }
    let bound = 0.5 / factor as f64;
    if filt.cutoff > bound {
        return Err(Error::Aliasing {
            cutoff: filt.cutoff,
            factor,
            bound,
        });
    }
    let n = x.len();
    let taps = &filt.taps;
    let half = taps.len() / 2;
    let samples = (0..n / factor)
        .map(|i| {
            let k = i * factor;
            // y[k] = sum_j h[j] x[k + half - j]
            let j_lo = (k + half + 1).saturating_sub(n);
            let j_hi = (k + half).min(taps.len() - 1);
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in j_lo..=j_hi {
                acc = acc + x.samples[k + half - j] * taps[j];
            }
            acc
        })
        .collect();
    Ok(ComplexSignal::new(samples, x.sample_rate / factor as f64))
}

/// Splits into consecutive `frame_len x 2` (I, Q) frames, each scaled to unit
/// mean `I² + Q²`. A trailing partial frame is dropped.
pub fn extract_frames<T: Real>(x: &ComplexSignal<T>, frame_len: usize) -> Result<Vec<Frame<T>>> {
    if frame_len == 0 {
        return Err(Error::param("frame_len", "must be positive"));
    }
    if x.len() < frame_len {
        return Err(Error::TooShort {
            required: frame_len,
            actual: x.len(),
        });
    }
    x.samples
        .chunks_exact(frame_len)
        .map(|chunk| {
            let power = chunk.iter().map(|s| s.norm_sqr()).sum::<T>() / T::of_usize(frame_len);
            if !(power > T::zero()) || !power.is_finite() {
                return Err(Error::ZeroPower);
            }
            let scale = power.sqrt().recip();
            Ok(Array2::from_shape_fn((frame_len, 2), |(t, c)| {
                if c == 0 {
                    chunk[t].re * scale
                } else {
                    chunk[t].im * scale
                }
            }))
        })
        .collect()
}

/// Mixes, filters and decimates `x` using the estimator's carrier and
/// bandwidth.
pub fn convert<T: Real>(x: &ComplexSignal<T>, est: &ParameterEstimate, cfg: &ConverterConfig) -> Result<ComplexSignal<T>> {
    let cutoff = cfg.cutoff_margin * est.bandwidth / 2.0 / x.sample_rate;
    let num_taps = cfg.num_taps.unwrap_or_else(|| auto_num_taps(cutoff));
    let filt = design_lowpass::<T>(cutoff, num_taps)?;
    let mixed = mix_down(x, est.carrier);
    filter_decimate(&mixed, &filt, cfg.decimation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response_db(taps: &[f64], f: f64) -> f64 {
        let h: Complex<f64> = taps
            .iter()
            .enumerate()
            .map(|(n, t)| Complex::from_polar(*t, -std::f64::consts::TAU * f * n as f64))
            .sum();
        20.0 * h.norm().log10()
    }

    fn tone(n: usize, f: f64) -> ComplexSignal<f64> {
        ComplexSignal::new(
            (0..n).map(|k| Complex::from_polar(1.0, std::f64::consts::TAU * f * k as f64)).collect(),
            1.0,
        )
    }

    #[test]
    fn lowpass_contracts() {
        for &(fc, n) in &[(0.05, 63usize), (0.1, 63), (0.2, 101), (0.01, 601)] {
            let f = design_lowpass::<f64>(fc, n).unwrap();
            assert_eq!(f.num_taps(), n);
            assert!((f.taps.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for k in 0..n {
                assert!((f.taps[k] - f.taps[n - 1 - k]).abs() < 1e-15);
            }
            assert!(response_db(&f.taps, 2.0 * fc) <= -40.0, "fc={fc} n={n}");
        }
        assert!(design_lowpass::<f64>(0.1, 64).is_err());
        assert!(design_lowpass::<f64>(0.1, 29).is_err());
        assert!(design_lowpass::<f64>(0.6, 63).is_err());
    }

    #[test]
    fn auto_taps_meet_rejection() {
        for fc in [0.007, 0.01, 0.0178, 0.04] {
            let n = auto_num_taps(fc);
            assert_eq!(n % 2, 1);
            let f = design_lowpass::<f64>(fc, n).unwrap();
            assert!(response_db(&f.taps, 2.0 * fc) <= -40.0);
        }
    }

    #[test]
    fn mixing() {
        let x = tone(256, 0.123);
        let y = mix_down(&x, 0.123);
        for s in &y.samples {
            assert!((s - Complex::new(1.0, 0.0)).norm() < 1e-9);
        }
        assert_eq!(mix_down(&x, 0.0), x);
    }

    #[test]
    fn in_band_tone_keeps_amplitude() {
        let x = tone(4000, 0.02);
        let f = design_lowpass::<f64>(0.2, 63).unwrap();
        let y = filter_decimate(&x, &f, 1).unwrap();
        let amp = y.samples[100..3900].iter().map(|s| s.norm()).sum::<f64>() / 3800.0;
        assert!((20.0 * amp.log10()).abs() < 0.1);
    }

    #[test]
    fn decimation_bookkeeping() {
        let x = tone(1000, 0.01);
        let f = design_lowpass::<f64>(0.04, 63).unwrap();
        let y = filter_decimate(&x, &f, 10).unwrap();
        assert_eq!(y.len(), 100);
        assert_eq!(y.sample_rate, 0.1);
    }

    #[test]
    fn out_of_band_tone_suppressed() {
        let x = tone(20_000, 0.2);
        let f = design_lowpass::<f64>(0.04, 201).unwrap();
        let y = filter_decimate(&x, &f, 10).unwrap();
        let p_in = x.power();
        let p_out = y.samples[30..y.len() - 30].iter().map(|s| s.norm_sqr()).sum::<f64>() / (y.len() - 60) as f64;
        assert!(10.0 * (p_out / p_in).log10() <= -40.0);
    }

    #[test]
    fn aliasing_bound() {
        let f = design_lowpass::<f64>(0.1, 63).unwrap();
        let err = filter_decimate(&tone(100, 0.01), &f, 10).unwrap_err();
        assert!(matches!(err, Error::Aliasing { factor: 10, .. }));
    }

    #[test]
    fn frames() {
        let x = ComplexSignal::new(
            (0..1000).map(|k| Complex::new((k as f64 * 0.3).sin() * 3.0, 0.5)).collect(),
            1.0,
        );
        let fr = extract_frames(&x, 128).unwrap();
        assert_eq!(fr.len(), 7);
        for f in &fr {
            assert_eq!(f.dim(), (128, 2));
            let p = f.iter().map(|v| v * v).sum::<f64>() / 128.0;
            assert!((p - 1.0).abs() < 1e-9);
        }
        let zero = ComplexSignal::new(vec![Complex::new(0.0, 0.0); 128], 1.0);
        assert!(matches!(extract_frames(&zero, 128), Err(Error::ZeroPower)));
        assert!(extract_frames(&zero, 129).is_err());
    }
}
