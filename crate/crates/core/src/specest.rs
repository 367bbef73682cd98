//! Blind carrier and bandwidth estimation from a Blackman-windowed averaged
//! periodogram.
//!
//! The noise floor is the centre of the modal histogram cell of the dB
//! spectrum. The occupied band is the contiguous run of bins, containing the
//! spectral peak, whose level is at least halfway (in dB) between the noise
//! floor and the peak. Bin indices in [`BandEstimate`] are 1-based.

use std::io::Write;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::ComplexSignal;

const POWER_FLOOR: f64 = 1e-30;

/// Default FFT segment length.
pub const DEFAULT_NFFT: usize = 1024;
/// Default histogram cell count for the noise-floor estimate.
pub const DEFAULT_HIST_BINS: usize = 100;
/// Default receiver-side roll-off assumption used to derive the symbol rate.
pub const DEFAULT_ROLLOFF: f64 = 0.35;

/// Averaged periodogram in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum<T> {
    pub p_db: Vec<T>,
    pub n_fft: usize,
    pub segments_used: usize,
    pub sample_rate: f64,
}

impl<T: Real> PowerSpectrum<T> {
    /// Frequency of 1-based bin `n`.
    pub fn frequency(&self, n: usize) -> f64 {
        (n as f64 - 1.0) / self.n_fft as f64 * self.sample_rate
    }

    fn max(&self) -> (usize, T) {
        self.p_db
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, v)| if v > best.1 { (i, v) } else { best })
    }

    /// Writes `bin_index,frequency,power_db` rows with 1-based bin indices.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bin_index,frequency,power_db")?;
        for (i, p) in self.p_db.iter().enumerate() {
            writeln!(out, "{},{},{}", i + 1, self.frequency(i + 1), p)?;
        }
        Ok(())
    }
}

/// Detected band, noise floor and peak level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEstimate {
    pub noise_floor_db: f64,
    pub peak_db: f64,
    /// First bin of the band (1-based).
    pub band_start: usize,
    /// Last bin of the band (1-based, inclusive).
    pub band_end: usize,
    pub center_bin: usize,
}

impl BandEstimate {
    pub fn width_bins(&self) -> usize {
        self.band_end - self.band_start + 1
    }
}

/// Everything the estimator hands to the converter and the demodulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub band: BandEstimate,
    pub bandwidth: f64,
    pub carrier: f64,
    pub symbol_rate: f64,
    pub sps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub n_fft: usize,
    pub hist_bins: usize,
    /// Roll-off assumed when converting bandwidth to symbol rate.
    pub rolloff: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            n_fft: DEFAULT_NFFT,
            hist_bins: DEFAULT_HIST_BINS,
            rolloff: DEFAULT_ROLLOFF,
        }
    }
}

/// `w(n) = 0.42 - 0.5 cos(2πn/(N-1)) + 0.08 cos(4πn/(N-1))`.
pub fn blackman_window<T: Real>(n_fft: usize) -> Result<Vec<T>> {
    if n_fft < 4 {
        return Err(Error::param("n_fft", format!("{n_fft} is below the minimum of 4")));
    }
    let denom = (n_fft - 1) as f64;
    Ok((0..n_fft)
        .map(|n| {
            let x = std::f64::consts::TAU * n as f64 / denom;
            T::of(-0.5 * x.cos() + 0.42 + 0.08 * (2.0 * x).cos())
        })
        .collect())
}

/// Mean of the windowed `|FFT|²/N` over `⌊L/N⌋` non-overlapping segments.
/// Trailing samples that do not fill a segment are ignored.
pub fn averaged_periodogram<T: Real>(x: &ComplexSignal<T>, n_fft: usize) -> Result<PowerSpectrum<T>> {
    let window = blackman_window::<T>(n_fft)?;
    if x.len() < n_fft {
        return Err(Error::TooShort {
            required: n_fft,
            actual: x.len(),
        });
    }
    let segments = x.len() / n_fft;
    let fft = FftPlanner::<T>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n_fft];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    let mut acc = vec![0.0f64; n_fft];
    for seg in x.samples.chunks_exact(n_fft) {
        for ((b, s), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = s * *w;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr().as_f64();
        }
    }
    let scale = 1.0 / (n_fft as f64 * segments as f64);
    let p_db = acc
        .into_iter()
        .map(|p| T::of(10.0 * (p * scale).max(POWER_FLOOR).log10()))
        .collect();
    Ok(PowerSpectrum {
        p_db,
        n_fft,
        segments_used: segments,
        sample_rate: x.sample_rate,
    })
}

/// Centre of the most populated cell of an `n_bins` histogram spanning
/// `[min, max]` of the dB spectrum. Ties go to the lower cell.
pub fn estimate_noise_floor<T: Real>(spec: &PowerSpectrum<T>, n_bins: usize) -> Result<f64> {
    if n_bins < 10 {
        return Err(Error::param("hist_bins", format!("{n_bins} is below the minimum of 10")));
    }
    if spec.p_db.is_empty() {
        return Err(Error::Empty("power spectrum"));
    }
    let (lo, hi) = spec
        .p_db
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v.as_f64()), hi.max(v.as_f64()))
        });
    if hi - lo < 1e-9 {
        return Ok(lo);
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for v in &spec.p_db {
        let cell = (((v.as_f64() - lo) / width) as usize).min(n_bins - 1);
        counts[cell] += 1;
    }
    let modal = counts
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
    Ok(lo + (modal as f64 + 0.5) * width)
}

/// Finds the run of bins at or above `(p_v + P_max)/2` that contains the peak.
pub fn detect_band<T: Real>(spec: &PowerSpectrum<T>, p_v: f64) -> Result<BandEstimate> {
    if spec.p_db.is_empty() {
        return Err(Error::Empty("power spectrum"));
    }
    let (peak_idx, peak) = spec.max();
    let peak = peak.as_f64();
    if !(p_v < peak) {
        return Err(Error::param(
            "noise_floor",
            format!("{p_v} dB is not below the spectral peak {peak} dB"),
        ));
    }
    let threshold = T::of((p_v + peak) / 2.0);
    let n = spec.p_db.len();
    let mut start = peak_idx;
    while start > 0 && spec.p_db[start - 1] >= threshold {
        start -= 1;
    }
    let mut end = peak_idx;
    while end + 1 < n && spec.p_db[end + 1] >= threshold {
        end += 1;
    }
    if start == 0 && end == n - 1 {
        return Err(Error::BandFillsSpectrum);
    }
    let (band_start, band_end) = (start + 1, end + 1);
    Ok(BandEstimate {
        noise_floor_db: p_v,
        peak_db: peak,
        band_start,
        band_end,
        center_bin: (band_start + band_end + 1) / 2,
    })
}

/// `B = f_s · M / N`.
pub fn estimate_bandwidth<T: Real>(band: &BandEstimate, spec: &PowerSpectrum<T>) -> f64 {
    spec.sample_rate * band.width_bins() as f64 / spec.n_fft as f64
}

/// `f_c = (N_c - 1) / N · f_s`.
pub fn estimate_carrier<T: Real>(band: &BandEstimate, spec: &PowerSpectrum<T>) -> Result<f64> {
    if band.band_start <= 1 || band.band_end >= spec.n_fft {
        return Err(Error::Wraparound {
            start: band.band_start,
            end: band.band_end,
            n_fft: spec.n_fft,
        });
    }
    let f_c = spec.frequency(band.center_bin);
    if !(f_c < spec.sample_rate / 2.0) {
        return Err(Error::Nyquist(format!(
            "estimated carrier {f_c} lies in the negative-frequency half (f_s/2 = {})",
            spec.sample_rate / 2.0
        )));
    }
    Ok(f_c)
}

/// Returns `(symbol_rate, sps)` with `R_s = B/(1+rho)` and
/// `sps = f_s_baseband / R_s`. The oversampling rate is not rounded.
pub fn estimate_sps(bandwidth: f64, rolloff: f64, baseband_rate: f64) -> Result<(f64, f64)> {
    if !(rolloff > 0.0 && rolloff < 1.0) {
        return Err(Error::param("rolloff", format!("{rolloff} is outside (0, 1)")));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::param("bandwidth", format!("{bandwidth} must be positive")));
    }
    let symbol_rate = bandwidth / (1.0 + rolloff);
    Ok((symbol_rate, baseband_rate / symbol_rate))
}

/// Runs the full estimator chain. `baseband_rate` is the post-decimation
/// sample rate used for the oversampling estimate.
pub fn estimate_parameters<T: Real>(
    x: &ComplexSignal<T>,
    cfg: &EstimatorConfig,
    baseband_rate: f64,
) -> Result<(ParameterEstimate, PowerSpectrum<T>)> {
    x.validate()?;
    let spec = averaged_periodogram(x, cfg.n_fft)?;
    let p_v = estimate_noise_floor(&spec, cfg.hist_bins)?;
    let band = detect_band(&spec, p_v)?;
    let bandwidth = estimate_bandwidth(&band, &spec);
    let carrier = estimate_carrier(&band, &spec)?;
    let (symbol_rate, sps) = estimate_sps(bandwidth, cfg.rolloff, baseband_rate)?;
    Ok((
        ParameterEstimate {
            band,
            bandwidth,
            carrier,
            symbol_rate,
            sps,
        },
        spec,
    ))
}
