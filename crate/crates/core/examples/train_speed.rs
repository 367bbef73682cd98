//! Times one forward/backward/Adam step for the standard 2x128 network.

use std::time::Instant;

use blindmod::lstm::{adam_step, init_params, AdamConfig, AdamState, Dims};
use ndarray::Array3;

fn main() {
    let batch: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(400);
    let net0 = init_params::<f32>(Dims::STANDARD, 1).unwrap();
    let mut net = net0.clone();
    let mut opt = AdamState::for_network(&net);
    let x = Array3::from_shape_fn((128, batch, 2), |(t, b, c)| ((t * 7 + b * 3 + c) % 11) as f32 / 11.0 - 0.5);
    let labels: Vec<usize> = (0..batch).map(|b| b % 6).collect();
    for it in 0..3 {
        let t0 = Instant::now();
        let cache = net.forward_batch(x.view()).unwrap();
        let t1 = Instant::now();
        let g = net.backward(&cache, &labels).unwrap();
        let t2 = Instant::now();
        adam_step(&mut net, &g, &mut opt, &AdamConfig::default()).unwrap();
        println!(
            "iter {it}: forward {:.3}s backward {:.3}s total {:.3}s",
            (t1 - t0).as_secs_f64(),
            (t2 - t1).as_secs_f64(),
            t0.elapsed().as_secs_f64()
        );
    }
}
