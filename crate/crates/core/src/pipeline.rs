//! End-to-end configuration and the estimate, convert, classify chain.
//!
//! [`PipelineConfig`] is stored as TOML. Every field has a default, so a
//! file only needs the keys it changes.

use std::path::{Path, PathBuf};

use ndarray::{Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::dataharness::{DatasetManifest, Grid};
use crate::error::{Error, Result};
use crate::lstm::{LstmNetwork, TrainConfig};
use crate::rbc::{self, ConverterConfig};
use crate::scalar::Real;
use crate::signal::ComplexSignal;
use crate::sigsynth::{ModulationScheme, SignalParams};
use crate::specest::{self, EstimatorConfig, ParameterEstimate, PowerSpectrum};

/// Synthesis settings for single captures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub scheme: ModulationScheme,
    pub samples: usize,
    pub params: SignalParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            scheme: ModulationScheme::Qpsk,
            samples: 64 * 1024,
            params: SignalParams::default(),
        }
    }
}

/// Dataset composition; estimator, converter and seed come from the
/// enclosing [`PipelineConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub classes: Vec<ModulationScheme>,
    pub frames_per_class: usize,
    pub frames_per_signal: usize,
    pub signal_len: usize,
    pub snr_jitter_db: f64,
    pub split_ratios: [f64; 3],
    pub grid: Grid,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let m = DatasetManifest::default();
        DatasetConfig {
            classes: m.classes,
            frames_per_class: m.frames_per_class,
            frames_per_signal: m.frames_per_signal,
            signal_len: m.signal_len,
            snr_jitter_db: m.snr_jitter_db,
            split_ratios: m.split_ratios,
            grid: m.grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub dataset_dir: PathBuf,
    pub model: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            dataset_dir: PathBuf::from("dataset"),
            model: PathBuf::from("model.bin"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub synth: SynthConfig,
    pub estimator: EstimatorConfig,
    pub converter: ConverterConfig,
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
    pub paths: Paths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            synth: SynthConfig::default(),
            estimator: EstimatorConfig::default(),
            converter: ConverterConfig::default(),
            dataset: DatasetConfig::default(),
            train: TrainConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format {
            what: "config",
            reason: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format {
            what: "config",
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn manifest(&self) -> DatasetManifest {
        let d = &self.dataset;
        DatasetManifest {
            classes: d.classes.clone(),
            frames_per_class: d.frames_per_class,
            frame_len: self.converter.frame_len,
            frames_per_signal: d.frames_per_signal,
            signal_len: d.signal_len,
            grid: d.grid.clone(),
            snr_jitter_db: d.snr_jitter_db,
            seed: self.seed,
            split_ratios: d.split_ratios,
            estimator: self.estimator,
            converter: self.converter,
            ..Default::default()
        }
    }
}

/// Estimates the signal parameters; the oversampling estimate refers to the
/// post-decimation rate.
pub fn estimate<T: Real>(
    x: &ComplexSignal<T>,
    cfg: &PipelineConfig,
) -> Result<(ParameterEstimate, PowerSpectrum<T>)> {
    let baseband_rate = x.sample_rate / cfg.converter.decimation.max(1) as f64;
    specest::estimate_parameters(x, &cfg.estimator, baseband_rate)
}

/// Converts to baseband and cuts unit-power frames `(N, frame_len, 2)`.
pub fn convert<T: Real>(x: &ComplexSignal<T>, est: &ParameterEstimate, cfg: &PipelineConfig) -> Result<Array3<T>> {
    let bb = rbc::convert(x, est, &cfg.converter)?;
    let frames = rbc::extract_frames(&bb, cfg.converter.frame_len)?;
    let mut out = Array3::zeros((frames.len(), cfg.converter.frame_len, 2));
    for (mut dst, f) in out.outer_iter_mut().zip(&frames) {
        dst.assign(f);
    }
    Ok(out)
}

/// Per-frame predictions and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: usize,
    pub label: String,
    /// Mean frame probability of `class`.
    pub probability: f64,
    pub mean_probs: Vec<f64>,
    pub frame_classes: Vec<usize>,
}

/// Classifies each frame on its own and picks the class with the highest
/// mean probability.
pub fn classify<T: Real>(net: &LstmNetwork<T>, frames: &Array3<T>, classes: &[String]) -> Result<Classification> {
    let n = frames.len_of(Axis(0));
    if n == 0 {
        return Err(Error::Empty("frames"));
    }
    let k = net.dims().classes;
    if classes.len() != k {
        return Err(Error::shape("class names", k, classes.len()));
    }
    let mut mean = vec![0.0; k];
    let mut frame_classes = Vec::with_capacity(n);
    for f in frames.outer_iter() {
        let p = net.forward(f)?;
        let mut best = 0;
        for (j, v) in p.iter().enumerate() {
            mean[j] += v.as_f64() / n as f64;
            if *v > p[best] {
                best = j;
            }
        }
        frame_classes.push(best);
    }
    let class = (0..k).fold(0, |b, j| if mean[j] > mean[b] { j } else { b });
    Ok(Classification {
        class,
        label: classes[class].clone(),
        probability: mean[class],
        mean_probs: mean,
        frame_classes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub estimate: ParameterEstimate,
    pub classification: Classification,
}

/// RF capture to predicted class: [`estimate`], [`convert`], [`classify`].
/// Signal processing runs in the signal's precision and the frames are cast
/// to the network's, as during dataset generation.
pub fn run<S: Real, W: Real>(
    x: &ComplexSignal<S>,
    net: &LstmNetwork<W>,
    classes: &[String],
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    let (est, _) = estimate(x, cfg)?;
    let frames = convert(x, &est, cfg)?.mapv(|v| W::of(v.as_f64()));
    let classification = classify(net, &frames, classes)?;
    Ok(PipelineOutput {
        estimate: est,
        classification,
    })
}
