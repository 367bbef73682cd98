use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::Real;

const SINGULAR_EPS: f64 = 1e-9;

/// Root-raised-cosine pulse sampled on an integer oversampled grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RrcFilter<T> {
    pub taps: Vec<T>,
    pub rolloff: f64,
    pub sps: f64,
    pub span_symbols: usize,
    /// Divides the closed form so that the sampled taps have unit energy.
    pub(crate) energy_norm: f64,
}

impl<T: Real> RrcFilter<T> {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Index of the centre tap.
    pub fn center(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Scaled pulse value at `offset` samples from the centre (fractional allowed).
    pub fn eval(&self, offset: f64) -> f64 {
        rrc_closed_form(offset / self.sps, self.rolloff) / self.energy_norm
    }
}

/// Unnormalised RRC impulse response at `t` symbol periods, with the removable
/// singularities at `t = 0` and `|t| = 1/(4 rho)` replaced by their limits.
pub fn rrc_closed_form(t: f64, rho: f64) -> f64 {
    if t.abs() < SINGULAR_EPS {
        return 1.0 - rho + 4.0 * rho / PI;
    }
    if ((4.0 * rho * t).abs() - 1.0).abs() < SINGULAR_EPS {
        let a = PI / (4.0 * rho);
        return rho / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - rho)).sin() + 4.0 * rho * t * (PI * t * (1.0 + rho)).cos();
    let den = PI * t * (1.0 - (4.0 * rho * t).powi(2));
    num / den
}

/// Designs an RRC filter whose self-convolution peaks at exactly one.
pub fn rrc_taps<T: Real>(rho: f64, sps: f64, span_symbols: usize) -> Result<RrcFilter<T>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::param("rolloff", format!("{rho} is outside (0, 1)")));
    }
    if !(sps >= 2.0) || !sps.is_finite() {
        return Err(Error::param("sps", format!("{sps} must be at least 2")));
    }
    if span_symbols < 4 {
        return Err(Error::param("span_symbols", format!("{span_symbols} must be at least 4")));
    }
    let width = span_symbols * sps.round() as usize;
    if width % 2 != 0 {
        return Err(Error::param(
            "span_symbols",
            format!("span {span_symbols} x {} samples gives an even tap count", sps.round()),
        ));
    }
    let half = (width / 2) as isize;
    let raw: Vec<f64> = (-half..=half).map(|j| rrc_closed_form(j as f64 / sps, rho)).collect();
    let energy_norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(RrcFilter {
        taps: raw.iter().map(|v| T::of(v / energy_norm)).collect(),
        rolloff: rho,
        sps,
        span_symbols,
        energy_norm,
    })
}
