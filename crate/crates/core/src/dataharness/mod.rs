//! Desk-scale dataset generation, persistence, splitting and latency
//! benchmarking.
//!
//! A dataset is a pair of files in one directory: `frames.iqfr` (see
//! [`iqfr`]) and `manifest.json` ([`DatasetManifest`]). Every signal is
//! synthesised at RF, run through the estimator and the converter, and cut
//! into frames, so the frames carry the estimator's real residual errors.

mod bench;
pub mod iqfr;

use std::fs;
use std::path::Path;

use ndarray::Array3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bench::{benchmark_inference, LatencyReport, MachineInfo};
pub use iqfr::IqFrames;

use crate::error::{Error, Result};
use crate::lstm::FrameSet;
use crate::rbc::{self, ConverterConfig};
use crate::sigsynth::{generate_rf, ModulationScheme, SignalParams};
use crate::specest::{self, EstimatorConfig, ParameterEstimate};

pub const FRAMES_FILE: &str = "frames.iqfr";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Estimation error bound, as a fraction of the sample rate.
pub const PE_TOLERANCE: f64 = 1e-3;
/// Attempts per signal slot before generation gives up.
pub const MAX_ATTEMPTS: u32 = 4;

/// Generation grid. Rates are relative to the RF sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub symbol_rates: Vec<f64>,
    pub rolloffs: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub carrier: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            symbol_rates: (0..=10).map(|i| round4(0.0100 + 0.0005 * i as f64)).collect(),
            rolloffs: (1..=9).map(|i| i as f64 / 10.0).collect(),
            snr_db: vec![25.0],
            carrier: 0.05,
        }
    }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

impl Grid {
    pub fn len(&self) -> usize {
        self.symbol_rates.len() * self.rolloffs.len() * self.snr_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `i` as `(symbol_rate, rolloff, snr_db)`, symbol rate slowest.
    pub fn point(&self, i: usize) -> (f64, f64, f64) {
        let i = i % self.len();
        let s = i % self.snr_db.len();
        let r = (i / self.snr_db.len()) % self.rolloffs.len();
        let q = i / (self.snr_db.len() * self.rolloffs.len());
        (self.symbol_rates[q], self.rolloffs[r], self.snr_db[s])
    }
}

/// Train/validation/test frame indices, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Estimator outcome for one generated signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub id: usize,
    pub class: usize,
    pub scheme: ModulationScheme,
    pub params: SignalParams,
    pub seed: u64,
    pub estimate: ParameterEstimate,
    pub carrier_error: f64,
    pub bandwidth_error: f64,
    /// Index of this signal's first frame in the frame file.
    pub first_frame: usize,
    pub frame_count: usize,
}

impl SignalRecord {
    pub fn within_tolerance(&self) -> bool {
        let tol = PE_TOLERANCE * self.params.sample_rate;
        self.carrier_error.abs() <= tol && self.bandwidth_error.abs() <= tol
    }
}

/// A signal the estimator or converter rejected. The slot is retried with a
/// fresh seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub id: usize,
    pub attempt: u32,
    pub scheme: ModulationScheme,
    pub params: SignalParams,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetManifest {
    pub classes: Vec<ModulationScheme>,
    pub frames_per_class: usize,
    pub frame_len: usize,
    /// Frames drawn from each generated signal.
    pub frames_per_signal: usize,
    /// RF samples per signal.
    pub signal_len: usize,
    pub grid: Grid,
    /// Half-width of the uniform SNR jitter; 0 disables it.
    pub snr_jitter_db: f64,
    pub seed: u64,
    pub split_ratios: [f64; 3],
    pub estimator: EstimatorConfig,
    pub converter: ConverterConfig,
    pub split: Option<Split>,
    /// Byte offset of every frame in the frame file.
    pub frame_offsets: Vec<u64>,
    pub signals: Vec<SignalRecord>,
    pub failures: Vec<GenerationFailure>,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        DatasetManifest {
            classes: ModulationScheme::ALL.to_vec(),
            frames_per_class: 1000,
            frame_len: 128,
            frames_per_signal: 10,
            signal_len: 64 * 1024,
            grid: Grid::default(),
            snr_jitter_db: 0.0,
            seed: 0,
            split_ratios: [0.6, 0.2, 0.2],
            estimator: EstimatorConfig::default(),
            converter: ConverterConfig::default(),
            split: None,
            frame_offsets: Vec::new(),
            signals: Vec::new(),
            failures: Vec::new(),
        }
    }
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::SingleClass(self.classes.len()));
        }
        if self.frames_per_class == 0 || self.frames_per_signal == 0 || self.frame_len == 0 {
            return Err(Error::param("frames", "counts and frame length must be positive"));
        }
        if self.grid.is_empty() {
            return Err(Error::Empty("generation grid"));
        }
        if self.snr_jitter_db < 0.0 || !self.snr_jitter_db.is_finite() {
            return Err(Error::param("snr_jitter_db", "must be finite and non-negative"));
        }
        validate_ratios(&self.split_ratios)?;
        let available = self.signal_len / self.converter.decimation.max(1) / self.frame_len;
        if available < self.frames_per_signal {
            return Err(Error::TooShort {
                required: self.frames_per_signal * self.frame_len * self.converter.decimation,
                actual: self.signal_len,
            });
        }
        Ok(())
    }

    pub fn signals_per_class(&self) -> usize {
        self.frames_per_class.div_ceil(self.frames_per_signal)
    }

    pub fn total_frames(&self) -> usize {
        self.frames_per_class * self.classes.len()
    }

    /// Frame-to-signal map derived from the signal records.
    pub fn frame_groups(&self) -> Vec<usize> {
        let mut groups = vec![0; self.total_frames()];
        for s in &self.signals {
            groups[s.first_frame..s.first_frame + s.frame_count].fill(s.id);
        }
        groups
    }

    pub fn pe_report(&self) -> PeReport {
        PeReport::from_records(&self.signals)
    }
}

fn validate_ratios(r: &[f64; 3]) -> Result<()> {
    if r.iter().any(|v| !(*v >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param("split_ratios", format!("{r:?} must be non-negative and sum to 1")));
    }
    Ok(())
}

/// Fraction of signals whose carrier or bandwidth estimate misses by more
/// than [`PE_TOLERANCE`]` · f_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeReport {
    pub signals: usize,
    pub carrier_misses: usize,
    pub bandwidth_misses: usize,
    pub misses: usize,
    pub miss_fraction: f64,
    pub max_carrier_error: f64,
    pub max_bandwidth_error: f64,
}

impl PeReport {
    pub fn from_records(records: &[SignalRecord]) -> Self {
        let tol = |r: &SignalRecord| PE_TOLERANCE * r.params.sample_rate;
        let carrier_misses = records.iter().filter(|r| r.carrier_error.abs() > tol(r)).count();
        let bandwidth_misses = records.iter().filter(|r| r.bandwidth_error.abs() > tol(r)).count();
        let misses = records.iter().filter(|r| !r.within_tolerance()).count();
        let max_abs = |f: fn(&SignalRecord) -> f64| records.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
        PeReport {
            signals: records.len(),
            carrier_misses,
            bandwidth_misses,
            misses,
            miss_fraction: if records.is_empty() { 0.0 } else { misses as f64 / records.len() as f64 },
            max_carrier_error: max_abs(|r| r.carrier_error),
            max_bandwidth_error: max_abs(|r| r.bandwidth_error),
        }
    }
}

/// Frames plus the manifest describing them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub frames: IqFrames,
}

impl Dataset {
    pub fn frame_set(&self) -> Result<FrameSet<f32>> {
        self.frames.to_frame_set(self.manifest.classes.len())
    }

    /// Training, validation and test sets from the stored split.
    pub fn partitions(&self) -> Result<(FrameSet<f32>, FrameSet<f32>, FrameSet<f32>)> {
        let split = self
            .manifest
            .split
            .as_ref()
            .ok_or(Error::EmptyPartition("split not computed"))?;
        let all = self.frame_set()?;
        Ok((all.select(&split.train), all.select(&split.val), all.select(&split.test)))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.frames.save(&dir.join(FRAMES_FILE))?;
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(dir.join(MANIFEST_FILE), json + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        let frames = IqFrames::load(&dir.join(FRAMES_FILE))?;
        if frames.count() != manifest.total_frames() || frames.frame_len() != manifest.frame_len {
            return Err(Error::Format {
                what: "dataset",
                reason: format!(
                    "manifest describes {} frames of {}, file holds {} of {}",
                    manifest.total_frames(),
                    manifest.frame_len,
                    frames.count(),
                    frames.frame_len()
                ),
            });
        }
        Ok(Dataset { manifest, frames })
    }
}

/// Per-slot RNG: one ChaCha stream per `(slot, attempt)` under the master
/// seed, independent of scheduling order.
fn slot_rng(seed: u64, slot: usize, attempt: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((slot as u64) << 8) | attempt as u64);
    rng
}

struct SlotOutput {
    record: SignalRecord,
    frames: Vec<ndarray::Array2<f64>>,
    failures: Vec<GenerationFailure>,
}

fn run_slot(m: &DatasetManifest, slot: usize) -> Result<SlotOutput> {
    let per_class = m.signals_per_class();
    let class = slot / per_class;
    let index = slot % per_class;
    let scheme = m.classes[class];
    let frame_count = m.frames_per_signal.min(m.frames_per_class - index * m.frames_per_signal);
    let (symbol_rate, rolloff, snr) = m.grid.point(index);
    let mut failures = Vec::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = slot_rng(m.seed, slot, attempt);
        let jitter = if m.snr_jitter_db > 0.0 {
            rng.gen_range(-m.snr_jitter_db..m.snr_jitter_db)
        } else {
            0.0
        };
        let params = SignalParams {
            carrier: m.grid.carrier,
            symbol_rate,
            rolloff,
            sample_rate: 1.0,
            snr_db: snr + jitter,
            freq_offset: 0.0,
            phase_offset: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            timing_error: rng.gen_range(-0.5..0.5),
        };
        let seed: u64 = rng.gen();
        let attempt_result = (|| {
            let rf = generate_rf::<f64>(scheme, &params, m.signal_len, seed)?;
            let baseband_rate = rf.sample_rate / m.converter.decimation as f64;
            let (estimate, _) = specest::estimate_parameters(&rf, &m.estimator, baseband_rate)?;
            let bb = rbc::convert(&rf, &estimate, &m.converter)?;
            let frames = rbc::extract_frames(&bb, m.frame_len)?;
            Ok::<_, Error>((estimate, frames))
        })();
        match attempt_result {
            Ok((estimate, all)) => {
                let mut picks = rand::seq::index::sample(&mut rng, all.len(), frame_count).into_vec();
                picks.sort_unstable();
                let frames = picks.into_iter().map(|i| all[i].clone()).collect();
                let record = SignalRecord {
                    id: slot,
                    class,
                    scheme,
                    params,
                    seed,
                    estimate,
                    carrier_error: estimate.carrier - params.carrier,
                    bandwidth_error: estimate.bandwidth - params.bandwidth(),
                    first_frame: class * m.frames_per_class + index * m.frames_per_signal,
                    frame_count,
                };
                return Ok(SlotOutput {
                    record,
                    frames,
                    failures,
                });
            }
            Err(e) => failures.push(GenerationFailure {
                id: slot,
                attempt,
                scheme,
                params,
                reason: e.to_string(),
            }),
        }
    }
    let last = failures.last().map(|f| f.reason.clone()).unwrap_or_default();
    Err(Error::Format {
        what: "dataset generation",
        reason: format!("signal {slot} failed {MAX_ATTEMPTS} attempts: {last}"),
    })
}

/// Generates every frame described by `manifest` and computes the split.
/// Signals are produced in parallel; the result does not depend on the
/// thread count.
pub fn generate_dataset(manifest: &DatasetManifest) -> Result<Dataset> {
    manifest.validate()?;
    let mut m = manifest.clone();
    let slots = m.signals_per_class() * m.classes.len();
    let outputs = (0..slots)
        .into_par_iter()
        .map(|slot| run_slot(&m, slot))
        .collect::<Result<Vec<_>>>()?;

    let total = m.total_frames();
    let mut frames = Array3::<f32>::zeros((total, m.frame_len, 2));
    let mut labels = vec![0u16; total];
    m.signals.clear();
    m.failures.clear();
    for out in outputs {
        let r = &out.record;
        for (k, f) in out.frames.iter().enumerate() {
            let i = r.first_frame + k;
            frames
                .index_axis_mut(ndarray::Axis(0), i)
                .assign(&f.mapv(|v| v as f32));
            labels[i] = r.class as u16;
        }
        m.failures.extend(out.failures);
        m.signals.push(out.record);
    }
    m.frame_offsets = (0..total).map(|i| IqFrames::frame_offset(m.frame_len, i)).collect();
    let split = split_dataset(&m, m.split_ratios, m.seed)?;
    m.split = Some(split);
    Ok(Dataset {
        manifest: m,
        frames: IqFrames { frames, labels },
    })
}

/// Stratified, group-aware split: each class's signals are shuffled and
/// dealt into the three partitions by `ratios`, and a signal's frames all
/// land in the same partition.
pub fn split_dataset(manifest: &DatasetManifest, ratios: [f64; 3], seed: u64) -> Result<Split> {
    validate_ratios(&ratios)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for class in 0..manifest.classes.len() {
        let mut signals: Vec<&SignalRecord> = manifest.signals.iter().filter(|s| s.class == class).collect();
        signals.sort_by_key(|s| s.id);
        signals.shuffle(&mut rng);
        let n = signals.len();
        let n_train = (ratios[0] * n as f64).round() as usize;
        let n_val = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
        let parts = [
            (&mut split.train, &signals[..n_train], "train"),
            (&mut split.val, &signals[n_train..n_train + n_val], "validation"),
            (&mut split.test, &signals[n_train + n_val..], "test"),
        ];
        for (dest, group, name) in parts {
            if group.is_empty() {
                return Err(Error::EmptyPartition(name));
            }
            for s in group {
                dest.extend(s.first_frame..s.first_frame + s.frame_count);
            }
        }
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Runs the estimator once per `(scheme, grid point)` and reports the
/// estimation errors. Grid points are evaluated in parallel.
pub fn pe_sweep(
    schemes: &[ModulationScheme],
    grid: &Grid,
    signal_len: usize,
    estimator: &EstimatorConfig,
    seed: u64,
) -> Result<Vec<SignalRecord>> {
    let jobs: Vec<(usize, usize)> = (0..schemes.len())
        .flat_map(|c| (0..grid.len()).map(move |p| (c, p)))
        .collect();
    jobs.into_par_iter()
        .enumerate()
        .map(|(id, (class, point))| {
            let (symbol_rate, rolloff, snr_db) = grid.point(point);
            let mut rng = slot_rng(seed, id, 0);
            let params = SignalParams {
                carrier: grid.carrier,
                symbol_rate,
                rolloff,
                sample_rate: 1.0,
                snr_db,
                freq_offset: 0.0,
                phase_offset: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                timing_error: rng.gen_range(-0.5..0.5),
            };
            let sig_seed: u64 = rng.gen();
            let rf = generate_rf::<f64>(schemes[class], &params, signal_len, sig_seed)?;
            let (estimate, _) = specest::estimate_parameters(&rf, estimator, rf.sample_rate)?;
            Ok(SignalRecord {
                id,
                class,
                scheme: schemes[class],
                params,
                seed: sig_seed,
                estimate,
                carrier_error: estimate.carrier - params.carrier,
                bandwidth_error: estimate.bandwidth - params.bandwidth(),
                first_frame: 0,
                frame_count: 0,
            })
        })
        .collect()
}
