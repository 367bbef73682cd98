//! Transmit-side signal model: Gray-mapped symbols, RRC pulse shaping with a
//! fractional timing error, complex carrier, carrier impairments and AWGN.

mod modulation;
mod rrc;
mod synth;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use modulation::{map_symbols, ModulationScheme, SymbolSequence};
pub use rrc::{rrc_closed_form, rrc_taps, RrcFilter};
pub use synth::{add_awgn, apply_carrier_impairment, synthesize_baseband, upconvert};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::ComplexSignal;

/// Default RRC span in symbols.
pub const DEFAULT_SPAN: usize = 10;

/// Generation and impairment parameters of one RF capture.
///
/// Frequencies share the unit of `sample_rate` (Hz, or cycles/sample with
/// `sample_rate = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalParams {
    pub carrier: f64,
    pub symbol_rate: f64,
    pub rolloff: f64,
    pub sample_rate: f64,
    pub snr_db: f64,
    pub freq_offset: f64,
    pub phase_offset: f64,
    /// Timing error in symbol periods.
    pub timing_error: f64,
}

impl Default for SignalParams {
    fn default() -> Self {
        SignalParams {
            carrier: 0.05,
            symbol_rate: 0.0125,
            rolloff: 0.35,
            sample_rate: 1.0,
            snr_db: 25.0,
            freq_offset: 0.0,
            phase_offset: 0.0,
            timing_error: 0.0,
        }
    }
}

impl SignalParams {
    /// Occupied bandwidth `(1 + rolloff) · symbol_rate`.
    pub fn bandwidth(&self) -> f64 {
        (1.0 + self.rolloff) * self.symbol_rate
    }

    pub fn sps(&self) -> f64 {
        self.sample_rate / self.symbol_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::param("sample_rate", "must be positive"));
        }
        if !(self.symbol_rate > 0.0) {
            return Err(Error::param("symbol_rate", "must be positive"));
        }
        if !(self.rolloff > 0.0 && self.rolloff < 1.0) {
            return Err(Error::param("rolloff", format!("{} is outside (0, 1)", self.rolloff)));
        }
        if !(self.phase_offset.abs() < std::f64::consts::PI) {
            return Err(Error::param("phase_offset", "must satisfy |theta_e| < pi"));
        }
        if !(self.freq_offset.abs() < self.symbol_rate) {
            return Err(Error::param("freq_offset", "must be below the symbol rate"));
        }
        if !(self.timing_error.abs() < 1.0) {
            return Err(Error::param("timing_error", "must satisfy |epsilon| < 1"));
        }
        let half = self.bandwidth() / 2.0;
        if !(self.carrier - half > 0.0) {
            return Err(Error::Nyquist(format!(
                "f_c - B/2 = {} must be above 0",
                self.carrier - half
            )));
        }
        if !(self.carrier + half < self.sample_rate / 2.0) {
            return Err(Error::Nyquist(format!(
                "f_c + B/2 = {} must be below f_s/2 = {}",
                self.carrier + half,
                self.sample_rate / 2.0
            )));
        }
        Ok(())
    }
}

/// Generates `n_samples` of a steady-state RF capture (no pulse ramp-up at
/// either end). The seed determines the bits and the noise.
pub fn generate_rf<T: Real>(
    scheme: ModulationScheme,
    params: &SignalParams,
    n_samples: usize,
    seed: u64,
) -> Result<ComplexSignal<T>> {
    params.validate()?;
    if n_samples == 0 {
        return Err(Error::Empty("requested sample count"));
    }
    let sps = params.sps();
    let filter = rrc_taps::<T>(params.rolloff, sps, DEFAULT_SPAN)?;
    let n_sym = (n_samples as f64 / sps).ceil() as usize + DEFAULT_SPAN + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..n_sym * scheme.bits_per_symbol()).map(|_| rng.gen_range(0..2u8)).collect();
    let noise_seed: u64 = rng.gen();
    let symbols = map_symbols::<T>(&bits, scheme)?;
    let base = synthesize_baseband(&symbols, &filter, params.timing_error, params.sample_rate)?;
    let start = filter.len();
    let steady = ComplexSignal::new(base.samples[start..start + n_samples].to_vec(), params.sample_rate);
    let shifted = apply_carrier_impairment(&steady, params.freq_offset, params.phase_offset)?;
    let rf = upconvert(&shifted, params.carrier, params.bandwidth())?;
    add_awgn(&rf, params.snr_db, noise_seed)
}
