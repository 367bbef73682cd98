//! Blind modulation recognition for sampled RF signals.
//!
//! The pipeline estimates carrier frequency and occupied bandwidth from an
//! averaged periodogram ([`specest`]), mixes the capture to baseband and
//! decimates it ([`rbc`]), and classifies power-normalised I/Q frames with a
//! two-layer LSTM ([`lstm`]). [`sigsynth`] generates impaired training
//! captures and [`dataharness`] builds, splits and benchmarks datasets.
//! [`pipeline`] ties the stages together behind one configuration.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the precisions used by the command-line tool.

pub mod dataharness;
pub mod error;
pub mod lstm;
pub mod pipeline;
pub mod rbc;
pub mod scalar;
pub mod signal;
pub mod sigsynth;
pub mod specest;

pub use error::{Error, Result};
pub use scalar::Real;
pub use signal::ComplexSignal;
pub use sigsynth::{ModulationScheme, SignalParams};

/// Signal-processing precision.
pub type Sample = f64;
/// Training and inference precision.
pub type Weight = f32;

pub type Signal = ComplexSignal<Sample>;
pub type Spectrum = specest::PowerSpectrum<Sample>;
pub type Frame = rbc::Frame<Sample>;
pub type Network = lstm::LstmNetwork<Weight>;
/// Double-precision network for gradient checks.
pub type NetworkF64 = lstm::LstmNetwork<f64>;
