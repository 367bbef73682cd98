use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Digital modulation formats recognised by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModulationScheme {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8PSK")]
    Psk8,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "64QAM")]
    Qam64,
    #[serde(rename = "256QAM")]
    Qam256,
}

impl ModulationScheme {
    /// All schemes in class-label order.
    pub const ALL: [ModulationScheme; 6] = [
        ModulationScheme::Bpsk,
        ModulationScheme::Qpsk,
        ModulationScheme::Psk8,
        ModulationScheme::Qam16,
        ModulationScheme::Qam64,
        ModulationScheme::Qam256,
    ];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModulationScheme::Bpsk => 1,
            ModulationScheme::Qpsk => 2,
            ModulationScheme::Psk8 => 3,
            ModulationScheme::Qam16 => 4,
            ModulationScheme::Qam64 => 6,
            ModulationScheme::Qam256 => 8,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn label(self) -> usize {
        self as usize
    }

    pub fn from_label(label: usize) -> Option<Self> {
        Self::ALL.get(label).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModulationScheme::Bpsk => "BPSK",
            ModulationScheme::Qpsk => "QPSK",
            ModulationScheme::Psk8 => "8PSK",
            ModulationScheme::Qam16 => "16QAM",
            ModulationScheme::Qam64 => "64QAM",
            ModulationScheme::Qam256 => "256QAM",
        }
    }

    /// Constellation indexed by the Gray-coded bit label of each point,
    /// scaled to unit average power.
    pub fn constellation<T: Real>(self) -> Vec<Complex<T>> {
        let m = self.order();
        let points: Vec<Complex<f64>> = match self {
            ModulationScheme::Bpsk => vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)],
            ModulationScheme::Qpsk | ModulationScheme::Psk8 => {
                // label -> position on the circle through the inverse Gray map
                let offset = if m == 4 { std::f64::consts::FRAC_PI_4 } else { 0.0 };
                (0..m)
                    .map(|label| {
                        let pos = gray_decode(label);
                        Complex::from_polar(1.0, offset + 2.0 * std::f64::consts::PI * pos as f64 / m as f64)
                    })
                    .collect()
            }
            ModulationScheme::Qam16 | ModulationScheme::Qam64 | ModulationScheme::Qam256 => {
                let side = 1usize << (self.bits_per_symbol() / 2);
                let half_bits = self.bits_per_symbol() / 2;
                let norm = (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
                (0..m)
                    .map(|label| {
                        let i_bits = label >> half_bits;
                        let q_bits = label & (side - 1);
                        let level = |bits: usize| (2 * gray_decode(bits) as i64 - (side as i64 - 1)) as f64;
                        Complex::new(level(i_bits) / norm, level(q_bits) / norm)
                    })
                    .collect()
            }
        };
        points
            .into_iter()
            .map(|p| Complex::new(T::of(p.re), T::of(p.im)))
            .collect()
    }
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        match norm.as_str() {
            "BPSK" => Ok(ModulationScheme::Bpsk),
            "QPSK" => Ok(ModulationScheme::Qpsk),
            "8PSK" | "PSK8" => Ok(ModulationScheme::Psk8),
            "16QAM" | "QAM16" => Ok(ModulationScheme::Qam16),
            "64QAM" | "QAM64" => Ok(ModulationScheme::Qam64),
            "256QAM" | "QAM256" => Ok(ModulationScheme::Qam256),
            _ => Err(Error::param("scheme", format!("unknown modulation `{s}`"))),
        }
    }
}

/// Constellation points drawn for a bit stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence<T> {
    pub scheme: ModulationScheme,
    pub symbols: Vec<Complex<T>>,
}

/// Gray-maps `bits` (one bit per element, MSB first within each symbol).
pub fn map_symbols<T: Real>(bits: &[u8], scheme: ModulationScheme) -> Result<SymbolSequence<T>> {
    let k = scheme.bits_per_symbol();
    let remainder = bits.len() % k;
    if remainder != 0 {
        return Err(Error::BitCount {
            len: bits.len(),
            bits_per_symbol: k,
            remainder,
        });
    }
    let table = scheme.constellation::<T>();
    let symbols = bits
        .chunks_exact(k)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            table[label]
        })
        .collect();
    Ok(SymbolSequence { scheme, symbols })
}
