use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::modulation::SymbolSequence;
use super::rrc::RrcFilter;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{rotate, ComplexSignal};

/// Pulse-shapes `symbols` with `filter`, delaying every pulse by `epsilon`
/// symbol periods.
///
/// Symbol `n` is centred at sample `center + n·sps + epsilon·sps`, and the
/// pulse is evaluated from its closed form at that fractional position. The
/// pulse carries a `√sps` gain over the unit-energy taps so that a long
/// random stream has unit average power; with one symbol and `epsilon = 0`
/// the output is `√sps · taps`.
pub fn synthesize_baseband<T: Real>(
    symbols: &SymbolSequence<T>,
    filter: &RrcFilter<T>,
    epsilon: f64,
    sample_rate: f64,
) -> Result<ComplexSignal<T>> {
    if symbols.symbols.is_empty() {
        return Err(Error::Empty("symbol sequence"));
    }
    if !(epsilon.abs() < 1.0) {
        return Err(Error::param("epsilon", format!("|{epsilon}| must be below 1")));
    }
    let sps = filter.sps;
    let half = filter.center() as f64;
    let n_sym = symbols.symbols.len();
    let len = ((n_sym - 1) as f64 * sps).ceil() as usize + filter.len();
    let gain = sps.sqrt();
    let mut out = vec![Complex::new(0.0f64, 0.0); len];
    for (n, a) in symbols.symbols.iter().enumerate() {
        let a = Complex::new(a.re.as_f64(), a.im.as_f64());
        let centre = half + (n as f64 + epsilon) * sps;
        let lo = (centre - half).ceil().max(0.0) as usize;
        let hi = ((centre + half).floor() as usize).min(len - 1);
        for (k, o) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *o += a * (gain * filter.eval(k as f64 - centre));
        }
    }
    Ok(ComplexSignal::new(
        out.into_iter().map(|c| Complex::new(T::of(c.re), T::of(c.im))).collect(),
        sample_rate,
    ))
}

/// Shifts `x` up to carrier `f_c`, checking that an occupied band of
/// `bandwidth` centred there stays below Nyquist.
pub fn upconvert<T: Real>(x: &ComplexSignal<T>, f_c: f64, bandwidth: f64) -> Result<ComplexSignal<T>> {
    let nyquist = x.sample_rate / 2.0;
    let upper = f_c.abs() + bandwidth / 2.0;
    if !(upper < nyquist) {
        return Err(Error::Nyquist(format!(
            "|f_c| + B/2 = {upper} must be below f_s/2 = {nyquist}"
        )));
    }
    if f_c == 0.0 {
        return Ok(x.clone());
    }
    Ok(rotate(x, f_c, 0.0))
}

/// Adds complex circular white Gaussian noise at `snr_db` relative to the
/// measured signal power. `snr_db = +inf` returns the input unchanged.
pub fn add_awgn<T: Real>(x: &ComplexSignal<T>, snr_db: f64, seed: u64) -> Result<ComplexSignal<T>> {
    if x.is_empty() {
        return Err(Error::Empty("signal"));
    }
    if snr_db == f64::INFINITY {
        return Ok(x.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::param("snr_db", "NaN"));
    }
    let power = x.power().as_f64();
    if !(power > 0.0) {
        return Err(Error::ZeroPower);
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = x
        .samples
        .iter()
        .map(|s| {
            let ni: f64 = StandardNormal.sample(&mut rng);
            let nq: f64 = StandardNormal.sample(&mut rng);
            s + Complex::new(T::of(sigma * ni), T::of(sigma * nq))
        })
        .collect();
    Ok(ComplexSignal::new(samples, x.sample_rate))
}

/// Applies a residual carrier offset `f_e` and phase `theta_e`.
pub fn apply_carrier_impairment<T: Real>(x: &ComplexSignal<T>, f_e: f64, theta_e: f64) -> Result<ComplexSignal<T>> {
    if !(theta_e.abs() < std::f64::consts::PI) {
        return Err(Error::param("theta_e", format!("|{theta_e}| must be below pi")));
    }
    if f_e == 0.0 && theta_e == 0.0 {
        return Ok(x.clone());
    }
    Ok(rotate(x, f_e, theta_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigsynth::{map_symbols, rrc_taps, ModulationScheme};
    use rustfft::FftPlanner;

    fn fft_peak(x: &[Complex<f64>]) -> usize {
        let mut buf = x.to_vec();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf.iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0
    }

    fn random_bits(n: usize, seed: u64) -> Vec<u8> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0..2u8)).collect()
    }

    #[test]
    fn single_symbol_reproduces_taps() {
        let filt = rrc_taps::<f64>(0.35, 8.0, 10).unwrap();
        let sym = SymbolSequence {
            scheme: ModulationScheme::Bpsk,
            symbols: vec![Complex::new(1.0, 0.0)],
        };
        let y = synthesize_baseband(&sym, &filt, 0.0, 1.0).unwrap();
        assert_eq!(y.len(), filt.len());
        let g = 8f64.sqrt();
        for (s, t) in y.samples.iter().zip(&filt.taps) {
            assert!((s.re - g * t).abs() < 1e-12);
            assert_eq!(s.im, 0.0);
        }
    }

    #[test]
    fn half_symbol_timing_error_shifts_correlation_peak() {
        let filt = rrc_taps::<f64>(0.5, 8.0, 10).unwrap();
        let bits = random_bits(400, 3);
        let sym = map_symbols::<f64>(&bits, ModulationScheme::Qpsk).unwrap();
        let a = synthesize_baseband(&sym, &filt, 0.0, 1.0).unwrap();
        let b = synthesize_baseband(&sym, &filt, 0.5, 1.0).unwrap();
        let best = (-8isize..=8)
            .map(|lag| {
                let c: f64 = (20..a.len() - 20)
                    .map(|k| (a.samples[k] * b.samples[(k as isize + lag) as usize].conj()).re)
                    .sum();
                (lag, c)
            })
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(best, 4);
    }

    #[test]
    fn long_stream_has_unit_power() {
        let filt = rrc_taps::<f64>(0.3, 8.0, 10).unwrap();
        let bits = random_bits(4 * 20_000, 9);
        let sym = map_symbols::<f64>(&bits, ModulationScheme::Qam16).unwrap();
        let y = synthesize_baseband(&sym, &filt, 0.2, 1.0).unwrap();
        assert!(y.len() >= 100_000);
        let p = y.power();
        assert!((p - 1.0).abs() < 0.02, "power {p}");
    }

    #[test]
    fn rejects_empty_symbols() {
        let filt = rrc_taps::<f64>(0.3, 8.0, 10).unwrap();
        let sym = SymbolSequence::<f64> {
            scheme: ModulationScheme::Bpsk,
            symbols: vec![],
        };
        assert!(matches!(synthesize_baseband(&sym, &filt, 0.0, 1.0), Err(Error::Empty(_))));
    }

    #[test]
    fn upconverted_constant_is_a_tone() {
        let n = 1000;
        let x = ComplexSignal::new(vec![Complex::new(1.0, 0.0); n], 1.0);
        let y = upconvert(&x, 0.1, 0.0).unwrap();
        assert_eq!(y.len(), n);
        assert_eq!(fft_peak(&y.samples), (0.1f64 * n as f64).round() as usize);
        for (a, b) in x.samples.iter().zip(&y.samples) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        assert_eq!(upconvert(&x, 0.0, 0.2).unwrap(), x);
    }

    #[test]
    fn upconvert_rejects_band_beyond_nyquist() {
        let x = ComplexSignal::new(vec![Complex::new(1.0, 0.0); 16], 1.0);
        let err = upconvert(&x, 0.45, 0.2).unwrap_err();
        assert!(err.to_string().contains("f_s/2"));
    }

    #[test]
    fn awgn_is_deterministic_and_hits_target_snr() {
        let x = ComplexSignal::new(vec![Complex::new(0.6, 0.8); 1_000_000], 1.0);
        let a = add_awgn(&x, 25.0, 11).unwrap();
        let b = add_awgn(&x, 25.0, 11).unwrap();
        assert_eq!(a, b);
        let noise: f64 = a
            .samples
            .iter()
            .zip(&x.samples)
            .map(|(y, s)| (y - s).norm_sqr())
            .sum::<f64>()
            / x.len() as f64;
        let snr = 10.0 * (x.power() / noise).log10();
        assert!((snr - 25.0).abs() < 0.1, "{snr}");
        assert_eq!(add_awgn(&x, f64::INFINITY, 1).unwrap(), x);
    }

    #[test]
    fn awgn_rejects_silence() {
        let x = ComplexSignal::new(vec![Complex::new(0.0f64, 0.0); 8], 1.0);
        assert!(matches!(add_awgn(&x, 10.0, 0), Err(Error::ZeroPower)));
        let e = ComplexSignal::<f64>::new(vec![], 1.0);
        assert!(add_awgn(&e, 10.0, 0).is_err());
    }

    #[test]
    fn carrier_impairment() {
        let x = ComplexSignal::new(
            (0..64).map(|k| Complex::new((k as f64).cos(), 0.3)).collect::<Vec<_>>(),
            1.0,
        );
        assert_eq!(apply_carrier_impairment(&x, 0.0, 0.0).unwrap(), x);
        let y = apply_carrier_impairment(&x, 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        for (a, b) in x.samples.iter().zip(&y.samples) {
            let want = a * Complex::new(0.0, 1.0);
            assert!((want - b).norm() < 1e-12);
        }
        assert!(apply_carrier_impairment(&x, 0.0, 4.0).is_err());
    }

    #[test]
    fn frequency_offset_moves_tone_peak() {
        let n = 2000;
        let x = upconvert(&ComplexSignal::new(vec![Complex::new(1.0, 0.0); n], 1.0), 0.1, 0.0).unwrap();
        let y = apply_carrier_impairment(&x, 0.01, 0.3).unwrap();
        let shift = fft_peak(&y.samples) as isize - fft_peak(&x.samples) as isize;
        assert_eq!(shift, (0.01 * n as f64).round() as isize);
    }
}
