//! Property checks shared by the proptest suite and the acceptance run.

use blindmod::lstm::softmax_rows;
use blindmod::rbc::mix_down;
use blindmod::sigsynth::{rrc_taps, upconvert};
use blindmod::specest::{blackman_window, detect_band, estimate_noise_floor, PowerSpectrum};
use blindmod::{ComplexSignal, Error};
use ndarray::Array2;
use num_complex::Complex;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use super::band_oracle;

type Check = std::result::Result<(), TestCaseError>;

pub fn spectrum(p: Vec<f64>) -> PowerSpectrum<f64> {
    let n = p.len();
    PowerSpectrum {
        p_db: p,
        n_fft: n,
        segments_used: 1,
        sample_rate: 1.0,
    }
}

/// Runs `check` on `cases` inputs drawn from `strategy` with a fixed seed.
pub fn run<S: Strategy>(cases: u32, strategy: S, check: impl Fn(S::Value) -> Check) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, check)
        .map_err(|e| e.to_string())
}

pub fn blackman_identities(lengths: std::ops::RangeInclusive<usize>) -> Result<(), String> {
    for n in lengths {
        let w = blackman_window::<f64>(n).map_err(|e| e.to_string())?;
        if w[0].abs() >= 1e-15 {
            return Err(format!("n={n}: w(0)={}", w[0]));
        }
        if n % 2 == 1 && (w[(n - 1) / 2] - 1.0).abs() >= 1e-15 {
            return Err(format!("n={n}: centre {}", w[(n - 1) / 2]));
        }
        for k in 0..n {
            if (w[k] - w[n - 1 - k]).abs() >= 1e-12 {
                return Err(format!("n={n} k={k}: asymmetric"));
            }
            if w[k] > 1.0 + 1e-15 || w[k] < -1e-15 {
                return Err(format!("n={n} k={k}: {} out of range", w[k]));
            }
        }
    }
    Ok(())
}

// dB levels on a 1/64 grid keep every histogram subtraction exact under
// integer shifts
pub fn shifted_spectra() -> impl Strategy<Value = (Vec<f64>, i32)> {
    (
        prop::collection::vec((-6400i32..0).prop_map(|v| v as f64 / 64.0), 8..256),
        -60i32..60,
    )
}

pub fn check_db_shift((p, c): (Vec<f64>, i32)) -> Check {
    let a = spectrum(p.clone());
    let b = spectrum(p.iter().map(|v| v + c as f64).collect());
    let pa = estimate_noise_floor(&a, 100).unwrap();
    let pb = estimate_noise_floor(&b, 100).unwrap();
    prop_assert!((pb - pa - c as f64).abs() < 1e-9);
    match (detect_band(&a, pa), detect_band(&b, pb)) {
        (Ok(x), Ok(y)) => prop_assert_eq!(
            (x.band_start, x.band_end, x.center_bin),
            (y.band_start, y.band_end, y.center_bin)
        ),
        (Err(_), Err(_)) => {}
        (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
    }
    Ok(())
}

pub fn short_spectra() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(-120.0f64..0.0, 1..=64), 0.0f64..1.0)
}

pub fn check_band_oracle((p, frac): (Vec<f64>, f64)) -> Check {
    let s = spectrum(p.clone());
    let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // any floor strictly below the peak
    let p_v = lo - 10.0 + frac * (hi - lo + 10.0) * 0.999;
    if p_v >= hi {
        return Ok(());
    }
    match (detect_band(&s, p_v), band_oracle(&p, p_v)) {
        (Ok(b), Some((n1, nm))) => {
            prop_assert_eq!((b.band_start, b.band_end), (n1, nm));
            prop_assert_eq!(b.center_bin, (n1 + nm + 1) / 2);
            prop_assert_eq!(b.width_bins(), nm - n1 + 1);
        }
        (Err(Error::BandFillsSpectrum), None) => {}
        (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
    }
    Ok(())
}

pub fn baseband_signals() -> impl Strategy<Value = (Vec<(f64, f64)>, f64)> {
    (
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..2048),
        -0.45f64..0.45,
    )
}

pub fn check_mix_down((iq, f_c): (Vec<(f64, f64)>, f64)) -> Check {
    let x = ComplexSignal::new(iq.iter().map(|&(a, b)| Complex::new(a, b)).collect(), 1.0);
    let y = mix_down(&upconvert(&x, f_c, 0.0).unwrap(), f_c);
    for (a, b) in x.samples.iter().zip(&y.samples) {
        prop_assert!((a - b).norm() <= 1e-12, "{} vs {}", a, b);
    }
    Ok(())
}

pub fn pulse_shapes() -> impl Strategy<Value = (f64, usize)> {
    (0.1f64..0.9, 2usize..12)
}

/// Matched-filter output at every nonzero multiple of the symbol period.
pub fn check_rrc_isi((rho, sps): (f64, usize)) -> Check {
    let f = rrc_taps::<f64>(rho, sps as f64, 64).unwrap();
    let n = f.len();
    let mid = n - 1;
    for k in (0..=mid).step_by(sps) {
        let lag = mid - k;
        let v: f64 = (0..n)
            .filter(|&i| i + lag < n)
            .map(|i| f.taps[i] * f.taps[i + lag])
            .sum();
        let want = if lag == 0 { 1.0 } else { 0.0 };
        prop_assert!((v - want).abs() < 1e-3, "rho={} sps={} lag={}: {}", rho, sps, lag, v);
    }
    Ok(())
}

pub fn logits() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-500.0f64..500.0, 6 * 8)
}

pub fn check_softmax(logits: Vec<f64>) -> Check {
    let mut a = Array2::from_shape_vec((8, 6), logits).unwrap();
    softmax_rows(&mut a);
    for row in a.rows() {
        prop_assert!((row.sum() - 1.0).abs() <= 1e-9);
        prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
    Ok(())
}
