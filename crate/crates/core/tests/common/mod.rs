//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod props;

use blindmod::lstm::{batch_cross_entropy, init_params, Dims, LstmNetwork};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive search over every interval: the band is the longest interval
/// of bins at or above the midpoint threshold that contains the first
/// maximum. Returns 1-based `(start, end)`, or `None` when that interval is
/// the whole spectrum.
pub fn band_oracle(p: &[f64], p_v: f64) -> Option<(usize, usize)> {
    let peak = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let arg = p.iter().position(|&v| v == peak).unwrap();
    let t = (p_v + peak) / 2.0;
    let mut best: Option<(usize, usize)> = None;
    for a in 0..=arg {
        for b in arg..p.len() {
            if p[a..=b].iter().all(|&v| v >= t) && best.map_or(true, |(x, y)| b - a > y - x) {
                best = Some((a, b));
            }
        }
    }
    let (a, b) = best.unwrap();
    if a == 0 && b == p.len() - 1 {
        None
    } else {
        Some((a + 1, b + 1))
    }
}

pub fn loss(net: &LstmNetwork<f64>, x: &Array3<f64>, labels: &[usize]) -> f64 {
    let cache = net.forward_batch(x.view()).unwrap();
    batch_cross_entropy(cache.probs.view(), labels).unwrap().value
}

/// Initialised network with every parameter jittered, so no gate sits at
/// its symmetric starting point.
pub fn random_net(dims: Dims, seed: u64) -> LstmNetwork<f64> {
    let mut net = init_params::<f64>(dims, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    for t in net.slices_mut() {
        for v in t.iter_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    net
}

pub fn set_flat(net: &mut LstmNetwork<f64>, mut flat: usize, delta: f64) {
    for t in net.slices_mut() {
        if flat < t.len() {
            t[flat] += delta;
            return;
        }
        flat -= t.len();
    }
    panic!("coordinate out of range");
}

pub struct GradCheck {
    pub checked: usize,
    pub worst: f64,
}

/// Central differences with step `delta` against the BPTT gradient on the
/// given coordinates (all of them when `coords` is `None`). The error is
/// `|analytic - numeric| / max(1, |analytic|)`.
pub fn gradient_check(dims: Dims, steps: usize, batch: usize, seed: u64, coords: Option<usize>, delta: f64) -> GradCheck {
    let net = random_net(dims, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let x = Array3::from_shape_simple_fn((steps, batch, dims.input), || rng.gen_range(-1.5..1.5));
    let labels: Vec<usize> = (0..batch).map(|b| b % dims.classes).collect();
    let cache = net.forward_batch(x.view()).unwrap();
    let grads = net.backward(&cache, &labels).unwrap();
    let analytic: Vec<f64> = grads.slices().iter().flat_map(|s| s.iter().copied()).collect();
    let picked: Vec<usize> = match coords {
        None => (0..analytic.len()).collect(),
        Some(n) => rand::seq::index::sample(&mut rng, analytic.len(), n.min(analytic.len())).into_vec(),
    };
    let mut worst: f64 = 0.0;
    for &flat in &picked {
        let mut plus = net.clone();
        let mut minus = net.clone();
        set_flat(&mut plus, flat, delta);
        set_flat(&mut minus, flat, -delta);
        let fd = (loss(&plus, &x, &labels) - loss(&minus, &x, &labels)) / (2.0 * delta);
        worst = worst.max((analytic[flat] - fd).abs() / analytic[flat].abs().max(1.0));
    }
    GradCheck {
        checked: picked.len(),
        worst,
    }
}
