//! Binary model checkpoint plus JSON sidecar.
//!
//! Layout (little-endian): `b"LSTM"`, version `u32`, then `input`, `hidden`,
//! `layers`, `classes` as `u32`, then every parameter as `f32` in the order
//! given by [`LstmNetwork::slices`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::Evaluation;
use super::network::{Dims, LstmNetwork};
use super::train::{History, TrainConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"LSTM";
pub const VERSION: u32 = 1;

/// Training metadata stored next to the checkpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub classes: Vec<String>,
    pub config: TrainConfig,
    pub history: History,
    #[serde(default)]
    pub test: Option<Evaluation>,
}

pub fn write_checkpoint<T: Real, W: Write>(net: &LstmNetwork<T>, mut out: W) -> Result<()> {
    let d = net.dims();
    out.write_all(MAGIC)?;
    for v in [VERSION, d.input as u32, d.hidden as u32, d.layers as u32, d.classes as u32] {
        out.write_all(&v.to_le_bytes())?;
    }
    for tensor in net.slices() {
        for v in tensor {
            out.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_checkpoint<T: Real, R: Read>(mut input: R) -> Result<LstmNetwork<T>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format {
            what: "model checkpoint",
            reason: format!("bad magic {magic:?}"),
        });
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Format {
            what: "model checkpoint",
            reason: format!("unsupported version {version}"),
        });
    }
    let dims = Dims {
        input: read_u32(&mut input)? as usize,
        hidden: read_u32(&mut input)? as usize,
        layers: read_u32(&mut input)? as usize,
        classes: read_u32(&mut input)? as usize,
    };
    if dims.input == 0 || dims.hidden == 0 || dims.layers == 0 || dims.classes == 0 {
        return Err(Error::Format {
            what: "model checkpoint",
            reason: format!("degenerate dims {dims:?}"),
        });
    }
    let mut net = LstmNetwork::<T>::zeros(dims);
    let mut b = [0u8; 4];
    for tensor in net.slices_mut() {
        for v in tensor.iter_mut() {
            input.read_exact(&mut b)?;
            let x = f32::from_le_bytes(b);
            if !x.is_finite() {
                return Err(Error::NonFinite("checkpoint parameter".into()));
            }
            *v = T::of(x as f64);
        }
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format {
            what: "model checkpoint",
            reason: "trailing bytes after parameters".into(),
        });
    }
    Ok(net)
}

/// `model.bin` -> `model.bin.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_model<T: Real>(path: &Path, net: &LstmNetwork<T>, sidecar: &ModelSidecar) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(net, &mut w)?;
    w.flush()?;
    let js = File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(BufWriter::new(js), sidecar)?;
    Ok(())
}

/// Loads a checkpoint and, when present, its sidecar.
pub fn load_model<T: Real>(path: &Path) -> Result<(LstmNetwork<T>, Option<ModelSidecar>)> {
    let net = read_checkpoint(BufReader::new(File::open(path)?))?;
    let side = sidecar_path(path);
    let sidecar = if side.exists() {
        Some(serde_json::from_reader(BufReader::new(File::open(side)?))?)
    } else {
        None
    };
    Ok((net, sidecar))
}
