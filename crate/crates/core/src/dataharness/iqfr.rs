//! `IQFR` frame container.
//!
//! Little-endian layout:
//!
//! | offset | type | field |
//! |---|---|---|
//! | 0 | `[u8; 4]` | magic `b"IQFR"` |
//! | 4 | `u32` | version (1) |
//! | 8 | `u32` | `frame_len` (I/Q pairs per frame) |
//! | 12 | `u64` | frame count `n` |
//! | 20 | `f32 x 2 x frame_len x n` | frames, interleaved `I, Q` |
//! | 20 + 8 frame_len n | `u16 x n` | labels |
//!
//! A single signal is stored as one frame whose length is the signal length.
//! [`UNLABELED`] marks frames without a class.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array3, Axis};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lstm::FrameSet;
use crate::signal::ComplexSignal;

pub const MAGIC: &[u8; 4] = b"IQFR";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 20;
/// Label value for frames of unknown class.
pub const UNLABELED: u16 = u16::MAX;

/// Frames `(count, frame_len, 2)` with one label each.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrames {
    pub frames: Array3<f32>,
    pub labels: Vec<u16>,
}

impl IqFrames {
    pub fn frame_len(&self) -> usize {
        self.frames.len_of(Axis(1))
    }

    pub fn count(&self) -> usize {
        self.frames.len_of(Axis(0))
    }

    /// Byte offset of frame `i` within the file.
    pub fn frame_offset(frame_len: usize, i: usize) -> u64 {
        HEADER_LEN + (i * frame_len * 8) as u64
    }

    pub fn from_signal<T: crate::Real>(x: &ComplexSignal<T>, label: u16) -> Self {
        let frames = Array3::from_shape_fn((1, x.len(), 2), |(_, t, c)| {
            let s = x.samples[t];
            (if c == 0 { s.re } else { s.im }).as_f64() as f32
        });
        IqFrames {
            frames,
            labels: vec![label],
        }
    }

    /// Concatenates every frame into one signal at `sample_rate`.
    pub fn to_signal(&self, sample_rate: f64) -> ComplexSignal<f64> {
        let samples = self
            .frames
            .outer_iter()
            .flat_map(|f| {
                f.outer_iter()
                    .map(|iq| Complex::new(iq[0] as f64, iq[1] as f64))
                    .collect::<Vec<_>>()
            })
            .collect();
        ComplexSignal::new(samples, sample_rate)
    }

    /// Labelled subset as a training set; fails on [`UNLABELED`] frames.
    pub fn to_frame_set(&self, num_classes: usize) -> Result<FrameSet<f32>> {
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if l == UNLABELED {
                    Err(Error::Format {
                        what: "frame file",
                        reason: "frame has no label".into(),
                    })
                } else {
                    Ok(l as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        FrameSet::new(self.frames.clone(), labels, num_classes)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.frame_len() as u32).to_le_bytes())?;
        out.write_all(&(self.count() as u64).to_le_bytes())?;
        for v in self.frames.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        for l in &self.labels {
            out.write_all(&l.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            what: "frame file",
            reason,
        };
        let mut head = [0u8; HEADER_LEN as usize];
        input.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(bad(format!("bad magic {:?}", &head[..4])));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let frame_len = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
        let count = u64::from_le_bytes(head[12..20].try_into().expect("8 bytes")) as usize;
        if frame_len == 0 {
            return Err(bad("zero frame length".into()));
        }
        let n_values = count
            .checked_mul(frame_len)
            .and_then(|v| v.checked_mul(2))
            .ok_or_else(|| bad("frame count overflows".into()))?;
        let mut raw = vec![0u8; n_values * 4];
        input.read_exact(&mut raw)?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        let mut lab = vec![0u8; count * 2];
        input.read_exact(&mut lab)?;
        let labels = lab
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes(b.try_into().expect("2 bytes")))
            .collect();
        let frames = Array3::from_shape_vec((count, frame_len, 2), values)
            .map_err(|e| bad(e.to_string()))?;
        Ok(IqFrames { frames, labels })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout() {
        let frames = Array3::from_shape_vec((2, 3, 2), (0..12).map(|v| v as f32).collect()).unwrap();
        let f = IqFrames {
            frames,
            labels: vec![4, UNLABELED],
        };
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"IQFR");
        assert_eq!(buf.len(), 20 + 2 * 3 * 8 + 2 * 2);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 2);
        // second frame, first Q value
        let off = IqFrames::frame_offset(3, 1) as usize + 4;
        assert_eq!(f32::from_le_bytes(buf[off..off + 4].try_into().unwrap()), 7.0);
        assert_eq!(u16::from_le_bytes(buf[68..70].try_into().unwrap()), 4);
        assert_eq!(IqFrames::read(&buf[..]).unwrap(), f);
        assert!(IqFrames::read(&buf[..buf.len() - 1]).is_err());
        assert!(f.to_frame_set(6).is_err());
    }

    #[test]
    fn signal_round_trip() {
        let x = ComplexSignal::new(vec![Complex::new(0.5f64, -0.25), Complex::new(1.0, 2.0)], 1.0);
        let f = IqFrames::from_signal(&x, 2);
        assert_eq!(f.frame_len(), 2);
        assert_eq!(f.to_signal(1.0), x);
    }
}
