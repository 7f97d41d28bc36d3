use std::f64::consts::PI;

use crate::raster::GrayImage;

/// Block-wise ridge orientation and its reliability.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    pub block_size: usize,
    pub cols: usize,
    pub rows: usize,
    /// Ridge direction in `[0, π)`, row-major over blocks. Angles follow
    /// image axes (x right, y down).
    pub angles: Vec<f64>,
    /// Normalized eigenvalue gap of the smoothed structure tensor, `[0, 1]`.
    pub coherence: Vec<f64>,
    /// Intensity variance of each block.
    pub variance: Vec<f64>,
}

impl OrientationField {
    pub fn block_of(&self, x: usize, y: usize) -> usize {
        (y / self.block_size).min(self.rows - 1) * self.cols + (x / self.block_size).min(self.cols - 1)
    }

    pub fn angle_at(&self, x: usize, y: usize) -> f64 {
        self.angles[self.block_of(x, y)]
    }

    pub fn coherence_at(&self, x: usize, y: usize) -> f64 {
        self.coherence[self.block_of(x, y)]
    }

    pub fn mean_coherence(&self) -> f64 {
        self.coherence.iter().sum::<f64>() / self.coherence.len().max(1) as f64
    }
}

/// Sobel gradients, replicating edge pixels.
pub(crate) fn gradients(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let at = |x: isize, y: isize| {
        img.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize) as f64
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Estimates ridge orientation per `block_size` block by averaging squared
/// gradients. The tensor of each block is summed with its 8 neighbours
/// before the angle and coherence are read off.
pub fn orientation_field(img: &GrayImage, block_size: usize) -> OrientationField {
    assert!(block_size >= 4, "block size must be at least 4");
    let (w, h) = (img.width(), img.height());
    let cols = w.div_ceil(block_size).max(1);
    let rows = h.div_ceil(block_size).max(1);
    let (gx, gy) = gradients(img);

    let nb = cols * rows;
    let mut gxx = vec![0.0; nb];
    let mut gxy = vec![0.0; nb];
    let mut gmag = vec![0.0; nb];
    let mut sum = vec![0.0; nb];
    let mut sum2 = vec![0.0; nb];
    let mut count = vec![0usize; nb];
    for y in 0..h {
        for x in 0..w {
            let b = (y / block_size) * cols + x / block_size;
            let i = y * w + x;
            let (dx, dy) = (gx[i], gy[i]);
            gxx[b] += dx * dx - dy * dy;
            gxy[b] += 2.0 * dx * dy;
            gmag[b] += dx * dx + dy * dy;
            let p = img.get(x, y) as f64;
            sum[b] += p;
            sum2[b] += p * p;
            count[b] += 1;
        }
    }

    let mut angles = vec![0.0; nb];
    let mut coherence = vec![0.0; nb];
    let mut variance = vec![0.0; nb];
    for r in 0..rows {
        for c in 0..cols {
            let (mut a, mut b, mut m) = (0.0, 0.0, 0.0);
            for rr in r.saturating_sub(1)..(r + 2).min(rows) {
                for cc in c.saturating_sub(1)..(c + 2).min(cols) {
                    let k = rr * cols + cc;
                    a += gxx[k];
                    b += gxy[k];
                    m += gmag[k];
                }
            }
            let k = r * cols + c;
            // dominant gradient direction, rotated a quarter turn onto the ridge
            let grad = 0.5 * b.atan2(a);
            angles[k] = (grad + PI / 2.0).rem_euclid(PI);
            coherence[k] = if m > 0.0 { (a * a + b * b).sqrt() / m } else { 0.0 };
            let n = count[k].max(1) as f64;
            variance[k] = (sum2[k] / n - (sum[k] / n).powi(2)).max(0.0);
        }
    }
    OrientationField {
        block_size,
        cols,
        rows,
        angles,
        coherence,
        variance,
    }
}

/// Smallest difference between two orientations modulo π.
pub fn orientation_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Sinusoidal ridges whose direction is `ridge_angle` (image axes).
    fn grating(size: usize, ridge_angle: f64, period: f64) -> GrayImage {
        let (nx, ny) = (-ridge_angle.sin(), ridge_angle.cos());
        GrayImage::from_fn(size, size, |x, y| {
            let t = (x as f64 * nx + y as f64 * ny) * 2.0 * PI / period;
            (128.0 + 100.0 * t.cos()).round() as u8
        })
    }

    #[test]
    fn vertical_ridges() {
        let img = GrayImage::from_fn(64, 64, |x, _| {
            (128.0 + 100.0 * (x as f64 * 2.0 * PI / 8.0).sin()).round() as u8
        });
        let f = orientation_field(&img, 16);
        assert_eq!((f.cols, f.rows), (4, 4));
        for (a, c) in f.angles.iter().zip(&f.coherence) {
            assert!(orientation_diff(*a, PI / 2.0) < 0.05, "angle {a}");
            assert!(*c > 0.9, "coherence {c}");
        }
    }

    #[test]
    fn white_noise_is_incoherent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = GrayImage::from_fn(128, 128, |_, _| rng.random());
        assert!(orientation_field(&img, 16).mean_coherence() < 0.3);
    }

    #[test]
    fn rotation_shifts_angles() {
        let base = 0.4;
        let turn = 30f64.to_radians();
        let a = orientation_field(&grating(96, base, 9.0), 16);
        let b = orientation_field(&grating(96, base + turn, 9.0), 16);
        for (x, y) in a.angles.iter().zip(&b.angles) {
            assert!(orientation_diff(*y - *x, turn) < 0.1);
        }
    }

    #[test]
    fn grid_rounds_up() {
        let f = orientation_field(&GrayImage::filled(33, 17, 9), 16);
        assert_eq!((f.cols, f.rows), (3, 2));
        assert!(f.coherence.iter().all(|c| *c == 0.0));
    }
}
