//! Seeded network and input generators used by tests, fixtures and benchmarks.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::model::{Activation, DenseLayer, InputVector, Model};
use crate::pwl::{pwl_to_network, Breakpoint, PwlFunction};

/// Fully connected network with the given unit counts (input layer first).
///
/// Weights are uniform in `[-1, 1] / sqrt(fan_in)` so activations stay of
/// order one regardless of width; biases are uniform in `[-0.5, 0.5]`.
pub fn random_model<R: Rng>(rng: &mut R, widths: &[usize], output: Activation) -> Model {
    assert!(widths.len() >= 2, "need at least an input and an output layer");
    let depth = widths.len() - 1;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            let weights = Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-1.0..=1.0) * scale);
            let bias = Array1::from_shape_fn(fan_out, |_| rng.gen_range(-0.5..=0.5));
            let act = if k + 1 == depth { output } else { Activation::Relu };
            DenseLayer::new(weights, bias, act)
        })
        .collect();
    Model::new(format!("random-{}", widths.iter().map(usize::to_string).collect::<Vec<_>>().join("x")), layers)
        .expect("generated shapes are consistent")
}

/// Random unit counts: `depth` weight layers, widths in `1..=max_width`,
/// input length in `1..=max_inputs`.
pub fn random_widths<R: Rng>(rng: &mut R, depth: usize, max_width: usize, max_inputs: usize) -> Vec<usize> {
    let mut widths = vec![rng.gen_range(1..=max_inputs)];
    widths.extend((0..depth).map(|_| rng.gen_range(1..=max_width)));
    widths
}

pub fn random_inputs<R: Rng>(rng: &mut R, dim: usize, count: usize) -> Vec<InputVector> {
    (0..count)
        .map(|v| InputVector::new(v as i64, (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()))
        .collect()
}

/// 1-input, `width`-hidden, 1-output network with identity output, the shape
/// whose geometry can be reconstructed.
pub fn random_geometry_model<R: Rng>(rng: &mut R, width: usize) -> Model {
    let hidden = DenseLayer::new(
        Array2::from_shape_fn((width, 1), |_| rng.gen_range(-2.0..=2.0)),
        Array1::from_shape_fn(width, |_| rng.gen_range(-2.0..=2.0)),
        Activation::Relu,
    );
    let output = DenseLayer::new(
        Array2::from_shape_fn((1, width), |_| rng.gen_range(-1.0..=1.0)),
        Array1::from_shape_fn(1, |_| rng.gen_range(-1.0..=1.0)),
        Activation::Identity,
    );
    Model::new(format!("geometry-{width}"), vec![hidden, output]).expect("consistent shapes")
}

pub const SINE_KNOTS: usize = 16;

/// Interpolant of `sin` on `[0, 2π]` through the 16 knots `(2k + 1)π / 16`.
///
/// The knots are symmetric about `π` and both end pieces run through the
/// zeros at `0` and `2π`, so the interpolant is odd about `π` and integrates
/// to zero over the period.
pub fn sine_interpolant() -> (PwlFunction, f64, f64) {
    let points: Vec<Breakpoint> = (0..SINE_KNOTS)
        .map(|k| {
            let x = (2 * k + 1) as f64 * PI / SINE_KNOTS as f64;
            Breakpoint { x, y: x.sin() }
        })
        .collect();
    let edge_slope = points[0].y / points[0].x;
    let pwl = PwlFunction::through_points(edge_slope, points, edge_slope).expect("valid knots");
    (pwl, 0.0, 2.0 * PI)
}

/// The shipped `sine16` fixture: 1 input, 17 hidden units, 1 output.
pub fn sine16() -> Model {
    let (pwl, lo, hi) = sine_interpolant();
    pwl_to_network(&pwl, lo, hi, "sine16").expect("knots inside the domain")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sine_fixture_shape() {
        assert_eq!(sine16().widths(), vec![1, 17, 1]);
    }

    #[test]
    fn sine_interpolant_is_odd_about_pi() {
        let (f, _, _) = sine_interpolant();
        for i in 0..50 {
            let t = i as f64 * PI / 50.0;
            assert!((f.eval(PI + t) + f.eval(PI - t)).abs() < 1e-12);
        }
        assert!(f.eval(0.0).abs() < 1e-15 && f.eval(2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = random_model(&mut ChaCha8Rng::seed_from_u64(3), &[3, 4, 2], Activation::Identity);
        let b = random_model(&mut ChaCha8Rng::seed_from_u64(3), &[3, 4, 2], Activation::Identity);
        assert_eq!(a, b);
    }
}
