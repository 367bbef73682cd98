//! Synthesis through estimation and conversion.

use blindmod::rbc::{self, ConverterConfig};
use blindmod::sigsynth::{generate_rf, ModulationScheme};
use blindmod::specest::{estimate_parameters, EstimatorConfig};
use blindmod::SignalParams;

fn capture(scheme: ModulationScheme, symbol_rate: f64, rolloff: f64, seed: u64) -> blindmod::Signal {
    let p = SignalParams {
        symbol_rate,
        rolloff,
        phase_offset: 0.7,
        timing_error: 0.25,
        ..SignalParams::default()
    };
    generate_rf::<f64>(scheme, &p, 65536, seed).unwrap()
}

#[test]
fn carrier_is_found_for_every_scheme_and_rolloff() {
    for (k, scheme) in ModulationScheme::ALL.into_iter().enumerate() {
        for rho in [0.1, 0.5, 0.9] {
            let x = capture(scheme, 0.0125, rho, k as u64);
            let (est, spec) = estimate_parameters(&x, &EstimatorConfig::default(), 0.1).unwrap();
            assert_eq!(spec.segments_used, 64);
            assert!((est.carrier - 0.05).abs() <= 1e-3, "{scheme} rho={rho}: {}", est.carrier);
        }
    }
}

#[test]
fn bandwidth_tracks_occupied_bandwidth() {
    for rho in [0.6, 0.7, 0.8] {
        for rs in [0.0100, 0.0125, 0.0150] {
            let x = capture(ModulationScheme::Qam16, rs, rho, 3);
            let est = EstimatorConfig {
                rolloff: rho,
                ..EstimatorConfig::default()
            };
            let (e, _) = estimate_parameters(&x, &est, 0.1).unwrap();
            let truth = (1.0 + rho) * rs;
            assert!((e.bandwidth - truth).abs() <= 1e-3, "rho={rho} rs={rs}: {} vs {truth}", e.bandwidth);
            assert!((e.symbol_rate - rs).abs() <= 1e-3 / (1.0 + rho));
            // baseband rate is 0.1 after decimation by 10
            assert!((e.sps - 0.1 / e.symbol_rate).abs() < 1e-12);
        }
    }
}

#[test]
fn conversion_yields_unit_power_frames() {
    let x = capture(ModulationScheme::Psk8, 0.0125, 0.35, 5);
    let (est, _) = estimate_parameters(&x, &EstimatorConfig::default(), 0.1).unwrap();
    let cfg = ConverterConfig::default();
    let bb = rbc::convert(&x, &est, &cfg).unwrap();
    assert!((bb.sample_rate - 0.1).abs() < 1e-12);
    let frames = rbc::extract_frames(&bb, cfg.frame_len).unwrap();
    assert_eq!(frames.len(), bb.len() / 128);
    for f in &frames {
        assert_eq!(f.dim(), (128, 2));
        let power = f.iter().map(|v| v * v).sum::<f64>() / 128.0;
        assert!((power - 1.0).abs() < 1e-9);
    }
}
