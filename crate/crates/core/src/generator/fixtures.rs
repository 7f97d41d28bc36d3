//! Deterministically authored generator models.
//!
//! No trained weights ship with the crate, so tests, benchmarks and the
//! `gen-fixture` command build networks here from a seed.

use std::f32::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::{Activation, LayerSpec, Shape};
use super::GeneratorModel;

/// Default latent size of generators in this crate.
pub const LATENT_DIM: usize = 100;

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f32) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn conv(rng: &mut ChaCha8Rng, input: Shape, out_channels: usize, k: usize) -> LayerSpec {
    let fan_in = (input.channels * k * k) as f32;
    LayerSpec::Conv2d {
        input,
        out_channels,
        kernel_h: k,
        kernel_w: k,
        stride: 1,
        padding: k / 2,
        weight: uniform(rng, out_channels * input.channels * k * k, (3.0 / fan_in).sqrt()),
        bias: uniform(rng, out_channels, 0.05),
    }
}

fn batchnorm(rng: &mut ChaCha8Rng, shape: Shape) -> LayerSpec {
    let c = shape.channels;
    LayerSpec::BatchNorm {
        shape,
        gamma: (0..c).map(|_| rng.random_range(0.8..1.2)).collect(),
        beta: uniform(rng, c, 0.1),
        mean: uniform(rng, c, 0.1),
        var: (0..c).map(|_| rng.random_range(0.5..1.5)).collect(),
    }
}

/// Five-layer model with an 8-dim latent and 32×32 output:
/// dense → upsample ×2 → conv 3×3 → batchnorm → tanh.
pub fn tiny_generator() -> GeneratorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(0x71_4e);
    let s0 = Shape::new(4, 16, 16);
    let s1 = Shape::new(4, 32, 32);
    let out = Shape::new(1, 32, 32);
    let layers = vec![
        LayerSpec::Dense {
            in_features: 8,
            out: s0,
            weight: uniform(&mut rng, s0.len() * 8, 0.5),
            bias: uniform(&mut rng, s0.len(), 0.1),
        },
        LayerSpec::Upsample {
            input: s0,
            factor: 2,
        },
        conv(&mut rng, s1, 1, 3),
        batchnorm(&mut rng, out),
        LayerSpec::Activation {
            shape: out,
            kind: Activation::Tanh,
        },
    ];
    GeneratorModel::new(8, layers).expect("tiny fixture is valid")
}

/// The canonical DCGAN-style architecture with random weights:
/// dense 100 → 8·8·256, then four `[upsample ×2, conv 5×5, batchnorm, ReLU]`
/// blocks (256 → 128 → 64 → 32 → 32 channels) and a final 5×5 conv to one
/// channel with tanh, giving 128×128 images.
pub fn canonical_generator(seed: u64) -> GeneratorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = Shape::new(256, 8, 8);
    let mut layers = vec![
        LayerSpec::Dense {
            in_features: LATENT_DIM,
            out: shape,
            weight: uniform(&mut rng, shape.len() * LATENT_DIM, (3.0 / LATENT_DIM as f32).sqrt()),
            bias: uniform(&mut rng, shape.len(), 0.05),
        },
        LayerSpec::Activation {
            shape,
            kind: Activation::Relu,
        },
    ];
    for out_c in [128, 64, 32, 32] {
        layers.push(LayerSpec::Upsample {
            input: shape,
            factor: 2,
        });
        shape = Shape::new(shape.channels, shape.height * 2, shape.width * 2);
        layers.push(conv(&mut rng, shape, out_c, 5));
        shape = Shape::new(out_c, shape.height, shape.width);
        layers.push(batchnorm(&mut rng, shape));
        layers.push(LayerSpec::Activation {
            shape,
            kind: Activation::Relu,
        });
    }
    layers.push(conv(&mut rng, shape, 1, 5));
    let out = Shape::new(1, shape.height, shape.width);
    layers.push(LayerSpec::Activation {
        shape: out,
        kind: Activation::Tanh,
    });
    GeneratorModel::new(LATENT_DIM, layers).expect("canonical fixture is valid")
}

/// A small model with randomly chosen geometry, for property tests.
pub fn random_architecture(seed: u64) -> GeneratorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent = rng.random_range(1..=12);
    let mut shape = Shape::new(
        rng.random_range(1..=3),
        rng.random_range(2..=6),
        rng.random_range(2..=6),
    );
    let mut layers = vec![LayerSpec::Dense {
        in_features: latent,
        out: shape,
        weight: uniform(&mut rng, shape.len() * latent, 0.6),
        bias: uniform(&mut rng, shape.len(), 0.2),
    }];
    for _ in 0..rng.random_range(1..=4) {
        match rng.random_range(0..4) {
            0 if shape.height <= 16 && shape.width <= 16 => {
                let factor = rng.random_range(1..=3);
                layers.push(LayerSpec::Upsample {
                    input: shape,
                    factor,
                });
                shape = Shape::new(shape.channels, shape.height * factor, shape.width * factor);
            }
            1 => {
                let k = [1, 3, 5][rng.random_range(0..3)];
                let stride = rng.random_range(1..=2);
                let padding = rng.random_range(0..=k / 2 + 1);
                if shape.height + 2 * padding < k || shape.width + 2 * padding < k {
                    continue;
                }
                let out_c = rng.random_range(1..=4);
                let fan_in = (shape.channels * k * k) as f32;
                let layer = LayerSpec::Conv2d {
                    input: shape,
                    out_channels: out_c,
                    kernel_h: k,
                    kernel_w: k,
                    stride,
                    padding,
                    weight: uniform(&mut rng, out_c * shape.channels * k * k, (3.0 / fan_in).sqrt()),
                    bias: uniform(&mut rng, out_c, 0.1),
                };
                shape = layer.output_shape();
                layers.push(layer);
            }
            2 => layers.push(batchnorm(&mut rng, shape)),
            _ => {
                let kind = [Activation::Relu, Activation::LeakyRelu, Activation::Identity]
                    [rng.random_range(0..3)];
                layers.push(LayerSpec::Activation { shape, kind });
            }
        }
    }
    layers.push(conv(&mut rng, shape, 1, 3));
    shape = Shape::new(1, shape.height, shape.width);
    layers.push(LayerSpec::Activation {
        shape,
        kind: Activation::Tanh,
    });
    GeneratorModel::new(latent, layers).expect("random fixture is valid")
}

/// Ridge period of [`ridge_generator`] output, in output pixels.
pub const RIDGE_PERIOD: f32 = 9.0;

/// A generator whose images are fingerprint-like ridge textures.
///
/// Each latent coordinate owns one localized grating patch in the dense
/// layer; patches follow a whorl-shaped orientation flow, so any latent
/// yields ridges along that flow, and the latent decides where ridges
/// split, end and shift phase. Output is `size`×`size` (`size` even).
pub fn ridge_generator(seed: u64, size: usize) -> GeneratorModel {
    assert!(size.is_multiple_of(2) && size >= 16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = size / 2;
    let period = RIDGE_PERIOD / 2.0;
    let envelope = base as f32 * 0.16;
    let core = (
        base as f32 * rng.random_range(0.35..0.65),
        base as f32 * rng.random_range(0.35..0.65),
    );

    let plane = base * base;
    // column-major construction: one patch per latent coordinate
    let mut patches = vec![0.0f32; plane * LATENT_DIM];
    for i in 0..LATENT_DIM {
        let cx = rng.random_range(-0.1..1.1) * base as f32;
        let cy = rng.random_range(-0.1..1.1) * base as f32;
        // ridges circle the core; gratings vary across the normal direction
        let tangent = (cy - core.1).atan2(cx - core.0) + PI / 2.0 + rng.random_range(-0.2..0.2);
        let (nx, ny) = (-tangent.sin(), tangent.cos());
        let phase = rng.random_range(0.0..2.0 * PI);
        for y in 0..base {
            for x in 0..base {
                let (dx, dy) = (x as f32 - cx, y as f32 - cy);
                let g = (-(dx * dx + dy * dy) / (2.0 * envelope * envelope)).exp();
                let wave = (2.0 * PI * (dx * nx + dy * ny) / period + phase).cos();
                patches[(y * base + x) * LATENT_DIM + i] = g * wave;
            }
        }
    }
    // unit output variance at every pixel for z ~ N(0, I)
    for row in patches.chunks_exact_mut(LATENT_DIM) {
        let norm = row.iter().map(|v| v * v).sum::<f32>().sqrt().max(1e-3);
        row.iter_mut().for_each(|v| *v /= norm);
    }

    let s0 = Shape::new(1, base, base);
    let s1 = Shape::new(1, size, size);
    let binomial = [1.0f32, 4.0, 6.0, 4.0, 1.0];
    let blur = binomial
        .iter()
        .flat_map(|a| binomial.iter().map(move |b| a * b / 256.0))
        .collect();
    let layers = vec![
        LayerSpec::Dense {
            in_features: LATENT_DIM,
            out: s0,
            weight: patches,
            bias: vec![0.0; plane],
        },
        LayerSpec::Upsample {
            input: s0,
            factor: 2,
        },
        LayerSpec::Conv2d {
            input: s1,
            out_channels: 1,
            kernel_h: 5,
            kernel_w: 5,
            stride: 1,
            padding: 2,
            weight: blur,
            bias: vec![0.0],
        },
        LayerSpec::BatchNorm {
            shape: s1,
            gamma: vec![2.5],
            beta: vec![0.0],
            mean: vec![0.0],
            var: vec![1.0],
        },
        LayerSpec::Activation {
            shape: s1,
            kind: Activation::Tanh,
        },
    ];
    GeneratorModel::new(LATENT_DIM, layers).expect("ridge fixture is valid")
}
