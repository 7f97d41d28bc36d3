//! Minutiae extraction: normalize → orientation field → adaptive binarize →
//! Zhang–Suen thinning → crossing-number detection and filtering.

mod detect;
mod normalize;
mod orientation;
mod skeleton;

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

pub use detect::{detect_minutiae, segment, BORDER_MARGIN, DUPLICATE_RADIUS, SPUR_RADIUS};
pub use normalize::normalize;
pub use orientation::{orientation_diff, orientation_field, OrientationField};
pub use skeleton::{binarize, binarize_and_thin, thin, BinaryImage};

/// Orientation block size used by [`extract`].
pub const BLOCK_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MinutiaKind {
    Ending,
    Bifurcation,
}

impl MinutiaKind {
    fn code(self) -> char {
        match self {
            MinutiaKind::Ending => 'E',
            MinutiaKind::Bifurcation => 'B',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minutia {
    pub x: f64,
    pub y: f64,
    /// Direction in `[0, 2π)`, stored at the 4-decimal precision of `.mnt`.
    pub theta: f64,
    pub kind: MinutiaKind,
    /// `[0, 1]`, stored at 4 decimals.
    pub quality: f64,
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Normalizes an angle to `[0, 2π)` at 4-decimal precision.
pub fn canonical_angle(theta: f64) -> f64 {
    let t = round4(theta.rem_euclid(TAU));
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl Minutia {
    pub fn new(x: f64, y: f64, theta: f64, kind: MinutiaKind, quality: f64) -> Self {
        Minutia {
            x,
            y,
            theta: canonical_angle(theta),
            kind,
            quality: round4(quality.clamp(0.0, 1.0)),
        }
    }
}

/// Extracted minutiae of one image, sorted by `(y, x)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MinutiaeTemplate {
    pub minutiae: Vec<Minutia>,
    pub height: usize,
    pub width: usize,
}

impl MinutiaeTemplate {
    pub fn new(mut minutiae: Vec<Minutia>, height: usize, width: usize) -> Self {
        minutiae.sort_by(|a, b| {
            a.y.total_cmp(&b.y)
                .then(a.x.total_cmp(&b.x))
                .then(a.theta.total_cmp(&b.theta))
                .then(a.kind.cmp(&b.kind))
        });
        MinutiaeTemplate {
            minutiae,
            height,
            width,
        }
    }

    pub fn empty(height: usize, width: usize) -> Self {
        MinutiaeTemplate {
            minutiae: Vec::new(),
            height,
            width,
        }
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }

    /// `.mnt` text: a `MNT <count> <height> <width>` header, then
    /// `x y theta kind quality` per minutia.
    pub fn to_mnt(&self) -> String {
        let mut out = format!("MNT {} {} {}\n", self.len(), self.height, self.width);
        for m in &self.minutiae {
            writeln!(
                out,
                "{} {} {:.4} {} {:.4}",
                m.x,
                m.y,
                m.theta,
                m.kind.code(),
                m.quality
            )
            .unwrap();
        }
        out
    }

    pub fn from_mnt(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty .mnt".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "MNT" {
            return Err(Error::Format(format!("bad .mnt header {header:?}")));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Format(format!(".mnt header {s:?}: {e}")))
        };
        let (count, height, width) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        let mut minutiae = Vec::with_capacity(count);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(Error::Format(format!("bad minutia line {line:?}")));
            }
            let real = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("bad number {s:?}")))
            };
            let kind = match f[3] {
                "E" => MinutiaKind::Ending,
                "B" => MinutiaKind::Bifurcation,
                other => return Err(Error::Format(format!("bad minutia kind {other:?}"))),
            };
            minutiae.push(Minutia::new(real(f[0])?, real(f[1])?, real(f[2])?, kind, real(f[4])?));
        }
        if minutiae.len() != count {
            return Err(Error::Format(format!(
                ".mnt declares {count} minutiae, found {}",
                minutiae.len()
            )));
        }
        Ok(MinutiaeTemplate::new(minutiae, height, width))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_mnt()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MinutiaeTemplate::from_mnt(&text)
    }
}

/// Full extraction pipeline on one image.
pub fn extract(img: &GrayImage) -> MinutiaeTemplate {
    let norm = normalize(img);
    let field = orientation_field(&norm, BLOCK_SIZE);
    let skeleton = binarize_and_thin(&norm);
    detect_minutiae(&skeleton, &field)
}
