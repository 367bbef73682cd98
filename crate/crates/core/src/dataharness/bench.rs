//! Single-frame inference latency.

use std::time::Instant;

use ndarray::{ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::LstmNetwork;
use crate::scalar::Real;

/// Minimum timed repetitions.
pub const MIN_REPETITIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub cpu: String,
    pub threads: usize,
}

impl MachineInfo {
    pub fn current() -> Self {
        let cpu = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|v| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        MachineInfo {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            cpu,
            threads: rayon::current_num_threads(),
        }
    }
}

/// Per-frame wall-clock statistics over the timed repetitions, in
/// microseconds. Each repetition classifies every frame one at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub frames: usize,
    pub repetitions: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub min_us: f64,
    pub frames_per_sec: f64,
    pub machine: MachineInfo,
}

impl std::fmt::Display for LatencyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "frames        {}", self.frames)?;
        writeln!(f, "repetitions   {}", self.repetitions)?;
        writeln!(f, "mean          {:.2} us/frame", self.mean_us)?;
        writeln!(f, "median        {:.2} us/frame", self.median_us)?;
        writeln!(f, "min           {:.2} us/frame", self.min_us)?;
        writeln!(f, "throughput    {:.1} frames/s", self.frames_per_sec)?;
        write!(
            f,
            "machine       {} {} ({}, {} threads)",
            self.machine.os, self.machine.arch, self.machine.cpu, self.machine.threads
        )
    }
}

/// Times single-frame inference on `frames` `(N, steps, features)` after one
/// untimed warm-up pass.
pub fn benchmark_inference<T: Real>(
    net: &LstmNetwork<T>,
    frames: ArrayView3<'_, T>,
    repetitions: usize,
) -> Result<LatencyReport> {
    if repetitions < MIN_REPETITIONS {
        return Err(Error::param(
            "repetitions",
            format!("{repetitions} is below the minimum of {MIN_REPETITIONS}"),
        ));
    }
    let n = frames.len_of(Axis(0));
    if n == 0 {
        return Err(Error::Empty("benchmark frames"));
    }
    let run = || -> Result<f64> {
        let start = Instant::now();
        for f in frames.outer_iter() {
            std::hint::black_box(net.forward(f)?);
        }
        Ok(start.elapsed().as_secs_f64() * 1e6 / n as f64)
    };
    run()?;
    let mut per_frame = (0..repetitions).map(|_| run()).collect::<Result<Vec<_>>>()?;
    per_frame.sort_by(|a, b| a.total_cmp(b));
    let mean_us = per_frame.iter().sum::<f64>() / repetitions as f64;
    let mid = repetitions / 2;
    let median_us = if repetitions % 2 == 0 {
        (per_frame[mid - 1] + per_frame[mid]) / 2.0
    } else {
        per_frame[mid]
    };
    Ok(LatencyReport {
        frames: n,
        repetitions,
        mean_us,
        median_us,
        min_us: per_frame[0],
        frames_per_sec: 1e6 / mean_us,
        machine: MachineInfo::current(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::{init_params, Dims};
    use ndarray::Array3;

    #[test]
    fn order_statistics() {
        let net = init_params::<f32>(Dims { input: 2, hidden: 8, layers: 2, classes: 3 }, 1).unwrap();
        let frames = Array3::<f32>::from_elem((4, 16, 2), 0.5);
        let r = benchmark_inference(&net, frames.view(), 10).unwrap();
        assert!(r.min_us <= r.median_us && r.median_us <= r.mean_us * 1.5);
        assert!(r.frames_per_sec > 0.0);
        assert!(r.to_string().contains("us/frame"));
        assert!(benchmark_inference(&net, frames.view(), 9).is_err());
    }
}
