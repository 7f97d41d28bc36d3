//! The `.lvw` weight file.
//!
//! ```text
//! "LVEW" | u32 version (=1) | u32 latent_dim | u32 layer_count
//! per layer: u8 kind | u32 shape header | f32 parameters
//! u32 CRC32 of every preceding byte
//! ```
//!
//! All integers and floats are little-endian. Shape headers per kind:
//!
//! | kind | layer      | header                                                   | parameters                  |
//! |------|------------|----------------------------------------------------------|-----------------------------|
//! | 0    | dense      | in_features, out_c, out_h, out_w                         | weight (out × in), bias     |
//! | 1    | upsample   | c, h, w, factor                                          | none                        |
//! | 2    | conv2d     | in_c, in_h, in_w, out_c, kh, kw, stride, padding         | weight (out, in, kh, kw), bias |
//! | 3    | batchnorm  | c, h, w                                                  | gamma, beta, mean, var      |
//! | 4    | activation | c, h, w, code (0 identity, 1 relu, 2 leaky 0.2, 3 tanh)  | none                        |

use std::path::Path;

use super::layer::{Activation, LayerSpec, Shape};
use super::GeneratorModel;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LVEW";
pub const VERSION: u32 = 1;

const KIND_DENSE: u8 = 0;
const KIND_UPSAMPLE: u8 = 1;
const KIND_CONV2D: u8 = 2;
const KIND_BATCHNORM: u8 = 3;
const KIND_ACTIVATION: u8 = 4;

/// Serializes a model to `.lvw` bytes.
pub fn encode(model: &GeneratorModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, model.latent_dim() as u32);
    put_u32(&mut out, model.layers().len() as u32);
    for layer in model.layers() {
        match layer {
            LayerSpec::Dense {
                in_features, out: o, ..
            } => {
                out.push(KIND_DENSE);
                put_u32s(&mut out, &[*in_features, o.channels, o.height, o.width]);
            }
            LayerSpec::Upsample { input, factor } => {
                out.push(KIND_UPSAMPLE);
                put_u32s(&mut out, &[input.channels, input.height, input.width, *factor]);
            }
            LayerSpec::Conv2d {
                input,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
                ..
            } => {
                out.push(KIND_CONV2D);
                put_u32s(
                    &mut out,
                    &[
                        input.channels,
                        input.height,
                        input.width,
                        *out_channels,
                        *kernel_h,
                        *kernel_w,
                        *stride,
                        *padding,
                    ],
                );
            }
            LayerSpec::BatchNorm { shape, .. } => {
                out.push(KIND_BATCHNORM);
                put_u32s(&mut out, &[shape.channels, shape.height, shape.width]);
            }
            LayerSpec::Activation { shape, kind } => {
                out.push(KIND_ACTIVATION);
                put_u32s(
                    &mut out,
                    &[shape.channels, shape.height, shape.width, kind.code() as usize],
                );
            }
        }
        for p in layer.parameters() {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    out
}

/// Parses and fully validates a `.lvw` blob.
pub fn load_generator(blob: &[u8]) -> Result<GeneratorModel> {
    if blob.len() < 4 || &blob[..4] != MAGIC {
        return Err(Error::Format("missing LVEW magic".into()));
    }
    if blob.len() < 8 {
        return Err(Error::Corruption("truncated header".into()));
    }
    let version = u32::from_le_bytes(blob[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    if blob.len() < 20 {
        return Err(Error::Corruption("truncated header".into()));
    }
    let (body, tail) = blob.split_at(blob.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::Corruption("CRC mismatch".into()));
    }

    let mut r = Reader { buf: body, pos: 8 };
    let latent_dim = r.u32()? as usize;
    let layer_count = r.u32()? as usize;
    let mut layers = Vec::with_capacity(layer_count.min(1024));
    for i in 0..layer_count {
        let kind = r.u8()?;
        let layer = match kind {
            KIND_DENSE => {
                let [in_features, c, h, w] = r.u32s()?;
                let out = Shape::new(c, h, w);
                LayerSpec::Dense {
                    in_features,
                    out,
                    weight: r.f32s(out.len().saturating_mul(in_features))?,
                    bias: r.f32s(out.len())?,
                }
            }
            KIND_UPSAMPLE => {
                let [c, h, w, factor] = r.u32s()?;
                LayerSpec::Upsample {
                    input: Shape::new(c, h, w),
                    factor,
                }
            }
            KIND_CONV2D => {
                let [in_c, in_h, in_w, out_c, kh, kw, stride, padding] = r.u32s()?;
                LayerSpec::Conv2d {
                    input: Shape::new(in_c, in_h, in_w),
                    out_channels: out_c,
                    kernel_h: kh,
                    kernel_w: kw,
                    stride,
                    padding,
                    weight: r.f32s(out_c.saturating_mul(in_c).saturating_mul(kh).saturating_mul(kw))?,
                    bias: r.f32s(out_c)?,
                }
            }
            KIND_BATCHNORM => {
                let [c, h, w] = r.u32s()?;
                LayerSpec::BatchNorm {
                    shape: Shape::new(c, h, w),
                    gamma: r.f32s(c)?,
                    beta: r.f32s(c)?,
                    mean: r.f32s(c)?,
                    var: r.f32s(c)?,
                }
            }
            KIND_ACTIVATION => {
                let [c, h, w, code] = r.u32s()?;
                LayerSpec::Activation {
                    shape: Shape::new(c, h, w),
                    kind: Activation::from_code(code as u32).ok_or_else(|| {
                        Error::Format(format!("layer {i}: unknown activation code {code}"))
                    })?,
                }
            }
            other => return Err(Error::Format(format!("layer {i}: unknown kind {other}"))),
        };
        if layer.parameters().any(|p| !p.is_finite()) {
            return Err(Error::Corruption(format!("layer {i}: non-finite parameter")));
        }
        layers.push(layer);
    }
    if r.pos != body.len() {
        return Err(Error::Corruption(format!(
            "{} trailing bytes after last layer",
            body.len() - r.pos
        )));
    }
    GeneratorModel::new(latent_dim, layers)
}

pub fn save_generator(model: &GeneratorModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load_generator_file(path: &Path) -> Result<GeneratorModel> {
    let blob = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_generator(&blob)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32s(out: &mut Vec<u8>, vs: &[usize]) {
    for v in vs {
        put_u32(out, *v as u32);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.buf.len())
            .ok_or_else(|| Error::Corruption(format!("unexpected end of data at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u32s<const N: usize>(&mut self) -> Result<[usize; N]> {
        let mut out = [0usize; N];
        for v in &mut out {
            *v = self.u32()? as usize;
        }
        Ok(out)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::Corruption("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
