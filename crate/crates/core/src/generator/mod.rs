//! Generator runtime: maps latent vectors to fingerprint images.
//!
//! Models are loaded from `.lvw` weight files (see [`format`]) and are
//! immutable afterwards, so a single model can serve any number of
//! concurrent [`generate`] calls.

pub mod fixtures;
pub mod format;
pub mod layer;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::raster::GrayImage;

pub use format::{load_generator, save_generator};
pub use layer::{forward_layer, Activation, LayerSpec, Shape, Tensor};

/// Input to the generator. Values are unconstrained reals; evolved latents
/// routinely leave the N(0, 1) training prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("latent entry {i} is not finite")));
        }
        Ok(LatentVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        LatentVector(vec![0.0; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// One value per line, full round-trip precision.
    pub fn to_csv(&self) -> String {
        self.0.iter().map(|v| format!("{v:?}\n")).collect()
    }

    /// Accepts values separated by commas and/or newlines.
    pub fn from_csv(text: &str) -> Result<Self> {
        let values = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("latent value {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        LatentVector::new(values)
    }
}

/// `n` latents of dimension `dim` drawn from `N(0, I)`, one seeded stream
/// consumed latent by latent.
pub fn random_latents(dim: usize, n: usize, seed: u64) -> Vec<LatentVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| LatentVector((0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()))
        .collect()
}

impl From<LatentVector> for Vec<f64> {
    fn from(z: LatentVector) -> Self {
        z.0
    }
}

/// A validated, inference-only generator network.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorModel {
    latent_dim: usize,
    layers: Vec<LayerSpec>,
}

impl GeneratorModel {
    /// Validates the layer chain: every layer's input matches the previous
    /// output, the first layer consumes the latent vector, and the network
    /// ends in a single-channel tanh.
    pub fn new(latent_dim: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        let model = GeneratorModel { latent_dim, layers };
        model.validate_chain()?;
        match model.layers.last() {
            Some(LayerSpec::Activation {
                kind: Activation::Tanh,
                ..
            }) => {}
            _ => {
                return Err(Error::Structure(
                    "final layer must be a tanh activation".into(),
                ))
            }
        }
        Ok(model)
    }

    fn validate_chain(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::Structure("latent dimension must be positive".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Structure("model has no layers".into()));
        }
        let mut current = Shape::new(self.latent_dim, 1, 1);
        for (i, layer) in self.layers.iter().enumerate() {
            layer
                .validate()
                .map_err(|e| Error::Structure(format!("layer {i}: {e}")))?;
            let fits = match layer.input_shape() {
                Some(shape) => shape == current,
                None => layer.input_len() == current.len(),
            };
            if !fits {
                return Err(Error::Structure(format!(
                    "layer {i} ({}) cannot consume {current}",
                    layer.name()
                )));
            }
            current = layer.output_shape();
        }
        if current.channels != 1 {
            return Err(Error::Structure(format!(
                "output must have one channel, got {current}"
            )));
        }
        if let Some((i, _)) = self
            .layers
            .iter()
            .enumerate()
            .find(|(_, l)| l.parameters().any(|p| !p.is_finite()))
        {
            return Err(Error::Corruption(format!("layer {i} has non-finite parameters")));
        }
        Ok(())
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// `(height, width)` of generated images.
    pub fn output_shape(&self) -> (usize, usize) {
        let s = self.layers.last().expect("validated").output_shape();
        (s.height, s.width)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.parameters().count()).sum()
    }
}

/// Runs the network and returns the pre-quantization output in `[-1, 1]`.
pub fn generate_raw(model: &GeneratorModel, z: &LatentVector) -> Result<Tensor> {
    if z.len() != model.latent_dim {
        return Err(Error::Argument(format!(
            "latent has {} entries, model expects {}",
            z.len(),
            model.latent_dim
        )));
    }
    let mut x = Tensor::vector(z.values().iter().map(|v| *v as f32).collect());
    for layer in &model.layers {
        x = forward_layer(layer, &x)?;
    }
    Ok(x)
}

/// Maps a tanh output to 8 bits: `(v + 1) / 2 * 255`, rounded half to even.
#[inline]
pub fn quantize(v: f32) -> u8 {
    ((v + 1.0) * 0.5 * 255.0).round_ties_even().clamp(0.0, 255.0) as u8
}

/// Renders the image for `z`. Bit-identical for identical inputs.
pub fn generate(model: &GeneratorModel, z: &LatentVector) -> Result<GrayImage> {
    let out = generate_raw(model, z)?;
    GrayImage::new(
        out.shape.width,
        out.shape.height,
        out.data.iter().map(|v| quantize(*v)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantization_rounds_half_to_even() {
        assert_eq!(quantize(-1.0), 0);
        assert_eq!(quantize(1.0), 255);
        // (v+1)/2*255 = 127.5 exactly at v = 0
        assert_eq!(quantize(0.0), 128);
    }

    #[test]
    fn dimension_mismatch_is_argument_error() {
        let model = fixtures::tiny_generator();
        let err = generate(&model, &LatentVector::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn rejects_non_finite_latent() {
        assert!(LatentVector::new(vec![0.0, f64::NAN]).is_err());
        // no clamp on magnitude
        assert!(LatentVector::new(vec![12.0, -40.0]).is_ok());
    }

    #[test]
    fn latent_csv_round_trip() {
        let z = LatentVector::new(vec![0.1, -3.25, 1e-300, 7.0]).unwrap();
        assert_eq!(LatentVector::from_csv(&z.to_csv()).unwrap(), z);
        assert_eq!(LatentVector::from_csv("1,2, 3\n").unwrap().len(), 3);
    }

    #[test]
    fn chain_validation_catches_mismatch() {
        let layers = vec![
            LayerSpec::Dense {
                in_features: 4,
                out: Shape::new(1, 2, 2),
                weight: vec![0.0; 16],
                bias: vec![0.0; 4],
            },
            LayerSpec::Activation {
                shape: Shape::new(1, 3, 3),
                kind: Activation::Tanh,
            },
        ];
        assert!(matches!(GeneratorModel::new(4, layers), Err(Error::Structure(_))));
    }

    /// Same architecture as the tiny fixture but with every nonlinearity and
    /// normalization removed, so the network is affine in `z`.
    fn linear_probe_model(seed: u64) -> GeneratorModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = |n: usize| (0..n).map(|_| rng.random_range(-0.5f32..0.5)).collect::<Vec<_>>();
        let layers = vec![
            LayerSpec::Dense {
                in_features: 6,
                out: Shape::new(3, 4, 4),
                weight: w(48 * 6),
                bias: w(48),
            },
            LayerSpec::Upsample {
                input: Shape::new(3, 4, 4),
                factor: 2,
            },
            LayerSpec::Conv2d {
                input: Shape::new(3, 8, 8),
                out_channels: 1,
                kernel_h: 3,
                kernel_w: 3,
                stride: 1,
                padding: 1,
                weight: w(27),
                bias: w(1),
            },
            LayerSpec::Activation {
                shape: Shape::new(1, 8, 8),
                kind: Activation::Identity,
            },
        ];
        let model = GeneratorModel {
            latent_dim: 6,
            layers,
        };
        model.validate_chain().unwrap();
        model
    }

    #[test]
    fn linear_probe_superposition() {
        let model = linear_probe_model(5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let z1: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let z2: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let sum: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a + b).collect();
            let run = |z: Vec<f64>| generate_raw(&model, &LatentVector::new(z).unwrap()).unwrap().data;
            let (a, b, s, o) = (run(z1), run(z2), run(sum), run(vec![0.0; 6]));
            for i in 0..a.len() {
                assert!((s[i] - (a[i] + b[i] - o[i])).abs() < 1e-5);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_architectures_generate_in_range(seed in any::<u64>()) {
            let model = fixtures::random_architecture(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let z = LatentVector::new(
                (0..model.latent_dim()).map(|_| rng.random_range(-4.0..4.0)).collect(),
            ).unwrap();
            let raw = generate_raw(&model, &z).unwrap();
            prop_assert!(raw.data.iter().all(|v| (-1.0..=1.0).contains(v)));
            let img = generate(&model, &z).unwrap();
            prop_assert_eq!((img.height(), img.width()), model.output_shape());
            prop_assert_eq!(img, generate(&model, &z).unwrap());
        }
    }
}
