//! Finite-difference checks of the BPTT gradients in 64-bit.

mod common;

use blindmod::lstm::{init_params, Dims};
use common::{gradient_check, random_net};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn bptt_matches_central_differences() {
    let dims = Dims {
        input: 2,
        hidden: 4,
        layers: 2,
        classes: 3,
    };
    // every coordinate of a hidden-4, 3-step network
    let r = gradient_check(dims, 3, 5, 21, None, 1e-4);
    assert!(r.checked >= 100, "only {} coordinates", r.checked);
    assert!(r.worst <= 1e-4, "worst relative error {:e}", r.worst);
}

#[test]
fn duplicated_sample_gives_single_sample_gradient() {
    let dims = Dims {
        input: 2,
        hidden: 3,
        layers: 2,
        classes: 4,
    };
    let net = random_net(dims, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let one = Array3::from_shape_simple_fn((4, 1, 2), || rng.gen_range(-1.0..1.0));
    let mut two = Array3::zeros((4, 2, 2));
    two.slice_mut(ndarray::s![.., 0..1, ..]).assign(&one);
    two.slice_mut(ndarray::s![.., 1..2, ..]).assign(&one);
    let g1 = net.backward(&net.forward_batch(one.view()).unwrap(), &[2]).unwrap();
    let g2 = net.backward(&net.forward_batch(two.view()).unwrap(), &[2, 2]).unwrap();
    for (a, b) in g1.slices().iter().zip(g2.slices()) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn saturated_head_has_vanishing_head_gradient() {
    let dims = Dims {
        input: 2,
        hidden: 3,
        layers: 1,
        classes: 2,
    };
    let mut net = init_params::<f64>(dims, 3).unwrap();
    net.head.weights.fill(0.0);
    net.head.bias[0] = 40.0;
    net.head.bias[1] = -40.0;
    let x = Array3::from_elem((3, 2, 2), 0.3);
    let cache = net.forward_batch(x.view()).unwrap();
    let g = net.backward(&cache, &[0, 0]).unwrap();
    let mag: f64 = g.head.weights.iter().chain(g.head.bias.iter()).map(|v| v * v).sum::<f64>().sqrt();
    assert!(mag < 1e-12, "{mag:e}");
}

#[test]
fn backward_without_forward_is_rejected() {
    use blindmod::lstm::TrainStep;
    let net = init_params::<f64>(
        Dims {
            input: 2,
            hidden: 2,
            layers: 1,
            classes: 2,
        },
        0,
    )
    .unwrap();
    let mut step = TrainStep::new();
    assert!(matches!(step.backward(&net, &[0]), Err(blindmod::Error::MissingCache)));
    let x = Array3::zeros((2, 1, 2));
    step.forward(&net, x.view()).unwrap();
    step.backward(&net, &[0]).unwrap();
    assert!(matches!(step.backward(&net, &[0]), Err(blindmod::Error::MissingCache)));
}
