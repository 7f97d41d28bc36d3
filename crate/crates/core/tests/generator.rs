// expected values are printed at f32 round-trip precision
#![allow(clippy::excessive_precision)]

use std::path::Path;

use lve_core::generator::format::{encode, load_generator, load_generator_file};
use lve_core::generator::layer::{Activation, LayerSpec};
use lve_core::generator::{fixtures, generate, generate_raw, quantize, LatentVector};
use lve_core::Error;

fn fixture() -> Vec<u8> {
    std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny_gen.lvw")).unwrap()
}

fn latent(s: usize) -> LatentVector {
    LatentVector::new((0..8).map(|j| (0.37 * (j + 1) as f64 * (s + 1) as f64).sin()).collect()).unwrap()
}

/// Outputs of an independent torch implementation reading the same file.
fn torch_outputs() -> Vec<Vec<f32>> {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny_gen_torch.txt")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fixture_fields_match_independent_parse() {
    let model = load_generator(&fixture()).unwrap();
    assert_eq!(model.latent_dim(), 8);
    assert_eq!(model.layers().len(), 5);
    match &model.layers()[0] {
        LayerSpec::Dense { in_features, out, weight, bias } => {
            assert_eq!((*in_features, out.channels, out.height, out.width), (8, 4, 16, 16));
            assert_eq!(&weight[..3], &[0.3750875, -0.179853916, -0.367725372]);
            assert_eq!(&bias[..2], &[-0.0308206826, 0.026201345]);
        }
        other => panic!("expected dense, got {}", other.name()),
    }
    assert!(matches!(model.layers()[1], LayerSpec::Upsample { factor: 2, .. }));
    match &model.layers()[2] {
        LayerSpec::Conv2d { out_channels, kernel_h, kernel_w, stride, padding, weight, bias, .. } => {
            assert_eq!((*out_channels, *kernel_h, *kernel_w, *stride, *padding), (1, 3, 3, 1, 1));
            assert_eq!(&weight[..3], &[0.0430631638, 0.0995674729, 0.00372284651]);
            assert_eq!(bias, &[0.0453718416]);
        }
        other => panic!("expected conv2d, got {}", other.name()),
    }
    match &model.layers()[3] {
        LayerSpec::BatchNorm { gamma, beta, mean, var, .. } => {
            assert_eq!((gamma[0], beta[0], mean[0], var[0]), (1.08987701, 0.0970053747, 0.0586355403, 1.18003798));
        }
        other => panic!("expected batchnorm, got {}", other.name()),
    }
    assert!(matches!(model.layers()[4], LayerSpec::Activation { kind: Activation::Tanh, .. }));
    assert_eq!(model.output_shape(), (32, 32));
}

#[test]
fn forward_pass_matches_torch() {
    let model = load_generator(&fixture()).unwrap();
    for (s, expected) in torch_outputs().iter().enumerate() {
        let out = generate_raw(&model, &latent(s)).unwrap();
        assert_eq!(out.data.len(), expected.len());
        let max_err = out
            .data
            .iter()
            .zip(expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_err <= 1e-5, "latent {s}: max abs error {max_err}");
        let img = generate(&model, &latent(s)).unwrap();
        for (p, e) in img.pixels().iter().zip(expected) {
            assert!((*p as i32 - quantize(*e) as i32).abs() <= 1);
        }
    }
}

#[test]
fn fixture_is_reencoded_byte_for_byte() {
    let bytes = fixture();
    assert_eq!(encode(&load_generator(&bytes).unwrap()), bytes);
    assert_eq!(encode(&fixtures::tiny_generator()), bytes);
}

#[test]
fn corrupted_fixture_is_rejected() {
    let mut bytes = fixture();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    assert!(matches!(load_generator(&bytes), Err(Error::Corruption(_))));
    assert!(matches!(load_generator(&bytes[..100]), Err(Error::Corruption(_))));
    assert!(load_generator_file(Path::new("/nonexistent.lvw")).is_err());
}

#[test]
fn canonical_architecture_shape_range_determinism() {
    let model = fixtures::canonical_generator(3);
    assert_eq!(model.latent_dim(), 100);
    assert_eq!(model.output_shape(), (128, 128));
    let z = LatentVector::new((0..100).map(|i| ((i * 7919) % 13) as f64 / 6.0 - 1.0).collect()).unwrap();
    let raw = generate_raw(&model, &z).unwrap();
    assert!(raw.data.iter().all(|v| (-1.0..=1.0).contains(v)));
    let a = generate(&model, &z).unwrap();
    assert_eq!((a.width(), a.height()), (128, 128));
    assert_eq!(a, generate(&model, &z).unwrap());
    let reloaded = load_generator(&encode(&model)).unwrap();
    assert_eq!(generate(&reloaded, &z).unwrap(), a);
}
