//! Synthetic fingerprints for galleries and tests.
//!
//! A finger is a ridge phase field: a smooth, warped, anisotropic distance
//! from a core point sets the ridge flow, and each seeded phase spiral
//! `±atan2(y - yj, x - xj)` adds or removes one ridge, which is exactly a
//! ridge ending or bifurcation at `(xj, yj)`. Partial prints are crops of
//! the rendered finger.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::raster::GrayImage;

/// Side of a partial print, pixels.
pub const PARTIAL_SIZE: usize = 128;
/// Side of a whole synthetic finger, pixels.
pub const FINGER_SIZE: usize = 224;

#[derive(Debug, Clone)]
pub struct SyntheticFinger {
    pub size: usize,
    pub period: f64,
    core: (f64, f64),
    aspect: f64,
    warps: Vec<(f64, f64, f64, f64)>,
    /// Phase singularities `(x, y, ±1)`.
    pub spirals: Vec<(f64, f64, f64)>,
}

impl SyntheticFinger {
    /// Draws a finger of `size`×`size` pixels.
    pub fn random(rng: &mut impl Rng, size: usize) -> Self {
        let s = size as f64;
        let core = (
            s * rng.random_range(0.3..0.7),
            s * rng.random_range(0.3..0.7),
        );
        let warps = (0..3)
            .map(|_| {
                let dir = rng.random_range(0.0..TAU);
                let freq = TAU / (s * rng.random_range(0.4..1.2));
                (
                    rng.random_range(3.0..9.0),
                    freq * dir.cos(),
                    freq * dir.sin(),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        // Poisson-disk-ish placement, about one singularity per 700 px²
        let target = (s * s / 700.0) as usize;
        let mut spirals: Vec<(f64, f64, f64)> = Vec::with_capacity(target);
        let mut attempts = 0;
        while spirals.len() < target && attempts < target * 50 {
            attempts += 1;
            let (x, y) = (rng.random_range(0.0..s), rng.random_range(0.0..s));
            let clear = spirals
                .iter()
                .all(|(sx, sy, _)| (sx - x).powi(2) + (sy - y).powi(2) >= 14.0 * 14.0)
                && (x - core.0).powi(2) + (y - core.1).powi(2) >= 20.0 * 20.0;
            if clear {
                spirals.push((x, y, if rng.random_bool(0.5) { 1.0 } else { -1.0 }));
            }
        }
        SyntheticFinger {
            size,
            period: rng.random_range(8.5..10.0),
            core,
            aspect: rng.random_range(0.6..1.6),
            warps,
            spirals,
        }
    }

    pub fn phase(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.core.0, y - self.core.1);
        let mut s = (dx * dx + self.aspect * dy * dy).sqrt();
        for (amp, fx, fy, ph) in &self.warps {
            s += amp * (fx * x + fy * y + ph).sin();
        }
        let mut phase = TAU * s / self.period;
        for (sx, sy, sign) in &self.spirals {
            phase += sign * (y - sy).atan2(x - sx);
        }
        phase
    }

    /// Renders the `w`×`h` window at `(x0, y0)` with additive Gaussian noise.
    pub fn render(&self, x0: usize, y0: usize, w: usize, h: usize, noise: f64, rng: &mut impl Rng) -> GrayImage {
        let normal = Normal::new(0.0, noise.max(1e-12)).expect("valid sigma");
        GrayImage::from_fn(w, h, |x, y| {
            let phase = self.phase((x0 + x) as f64, (y0 + y) as f64);
            let v = 128.0 - 100.0 * phase.cos() + if noise > 0.0 { normal.sample(rng) } else { 0.0 };
            v.round().clamp(0.0, 255.0) as u8
        })
    }

    /// Singularities inside the given window, in window coordinates.
    pub fn spirals_in(&self, x0: usize, y0: usize, w: usize, h: usize) -> Vec<(f64, f64)> {
        self.spirals
            .iter()
            .map(|(x, y, _)| (x - x0 as f64, y - y0 as f64))
            .filter(|(x, y)| (0.0..w as f64).contains(x) && (0.0..h as f64).contains(y))
            .collect()
    }
}

/// One synthetic identity: a finger and `k` partial crops of it.
pub struct SyntheticIdentity {
    pub finger: SyntheticFinger,
    pub partials: Vec<GrayImage>,
    pub offsets: Vec<(usize, usize)>,
}

/// Builds `identities` synthetic identities with `k` partials each.
///
/// Each identity is seeded from `(seed, index)` so galleries of different
/// sizes share their leading identities.
pub fn synthetic_gallery(identities: usize, k: usize, seed: u64) -> Vec<SyntheticIdentity> {
    (0..identities)
        .map(|i| synthetic_identity(seed, i as u64, k))
        .collect()
}

pub fn synthetic_identity(seed: u64, index: u64, k: usize) -> SyntheticIdentity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index + 1);
    let finger = SyntheticFinger::random(&mut rng, FINGER_SIZE);
    let span = FINGER_SIZE - PARTIAL_SIZE;
    let mut partials = Vec::with_capacity(k);
    let mut offsets = Vec::with_capacity(k);
    for _ in 0..k {
        let (x0, y0) = (rng.random_range(0..=span), rng.random_range(0..=span));
        partials.push(finger.render(x0, y0, PARTIAL_SIZE, PARTIAL_SIZE, 12.0, &mut rng));
        offsets.push((x0, y0));
    }
    SyntheticIdentity {
        finger,
        partials,
        offsets,
    }
}

/// Uniform i.i.d. 8-bit noise.
pub fn white_noise(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(width, height, |_, _| rng.random())
}

/// A single fingerprint-like image with seeded singularities.
pub fn ridge_image(size: usize, seed: u64) -> (GrayImage, SyntheticFinger) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let finger = SyntheticFinger::random(&mut rng, size);
    (finger.render(0, 0, size, size, 8.0, &mut rng), finger)
}

/// Angle of `(dx, dy)` in `[0, 2π)`.
pub fn direction(dx: f64, dy: f64) -> f64 {
    dy.atan2(dx).rem_euclid(TAU)
}

