//! Inference-only layer kernels over `(channels, height, width)` tensors.

use crate::error::{Error, Result};

/// Batch-norm variance epsilon shared with the trainer.
pub const BATCHNORM_EPS: f32 = 1e-5;

/// Leaky ReLU negative slope.
pub const LEAKY_SLOPE: f32 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Shape {
            channels,
            height,
            width,
        }
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// Dense CHW tensor of `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Shape,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f32>) -> Result<Self> {
        if shape.len() != data.len() {
            return Err(Error::Structure(format!(
                "tensor {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    /// A flat vector viewed as `(n, 1, 1)`.
    pub fn vector(values: Vec<f32>) -> Self {
        Tensor {
            shape: Shape::new(values.len(), 1, 1),
            data: values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu,
    Tanh,
}

impl Activation {
    pub fn code(self) -> u32 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::LeakyRelu => 2,
            Activation::Tanh => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::LeakyRelu,
            3 => Activation::Tanh,
            _ => return None,
        })
    }

    #[inline]
    fn apply(self, v: f32) -> f32 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
            Activation::LeakyRelu => {
                if v >= 0.0 {
                    v
                } else {
                    LEAKY_SLOPE * v
                }
            }
            Activation::Tanh => v.tanh(),
        }
    }
}

/// One layer of a generator, with its frozen parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    /// Affine map from a flattened input to a reshaped output.
    /// `weight` is `(out.len(), in_features)` row-major.
    Dense {
        in_features: usize,
        out: Shape,
        weight: Vec<f32>,
        bias: Vec<f32>,
    },
    /// Nearest-neighbour upsampling by an integer factor.
    Upsample { input: Shape, factor: usize },
    /// Cross-correlation, weight ordered `(out_ch, in_ch, kh, kw)`.
    Conv2d {
        input: Shape,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        padding: usize,
        weight: Vec<f32>,
        bias: Vec<f32>,
    },
    /// Batch normalization with frozen running statistics.
    BatchNorm {
        shape: Shape,
        gamma: Vec<f32>,
        beta: Vec<f32>,
        mean: Vec<f32>,
        var: Vec<f32>,
    },
    Activation { shape: Shape, kind: Activation },
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Upsample { .. } => "upsample",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::BatchNorm { .. } => "batchnorm",
            LayerSpec::Activation { .. } => "activation",
        }
    }

    /// Expected input element count and, where it is fixed, the input shape.
    /// Dense layers accept any shape with the right element count.
    pub fn input_len(&self) -> usize {
        match self {
            LayerSpec::Dense { in_features, .. } => *in_features,
            other => other.input_shape().map(|s| s.len()).unwrap_or(0),
        }
    }

    pub fn input_shape(&self) -> Option<Shape> {
        match self {
            LayerSpec::Dense { .. } => None,
            LayerSpec::Upsample { input, .. } | LayerSpec::Conv2d { input, .. } => Some(*input),
            LayerSpec::BatchNorm { shape, .. } | LayerSpec::Activation { shape, .. } => {
                Some(*shape)
            }
        }
    }

    pub fn output_shape(&self) -> Shape {
        match self {
            LayerSpec::Dense { out, .. } => *out,
            LayerSpec::Upsample { input, factor } => {
                Shape::new(input.channels, input.height * factor, input.width * factor)
            }
            LayerSpec::Conv2d {
                input,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
                ..
            } => Shape::new(
                *out_channels,
                (input.height + 2 * padding - kernel_h) / stride + 1,
                (input.width + 2 * padding - kernel_w) / stride + 1,
            ),
            LayerSpec::BatchNorm { shape, .. } | LayerSpec::Activation { shape, .. } => *shape,
        }
    }

    /// Checks parameter counts and geometry of a single layer.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Structure(format!("{}: {msg}", self.name())));
        match self {
            LayerSpec::Dense {
                in_features,
                out,
                weight,
                bias,
            } => {
                if *in_features == 0 || out.is_empty() {
                    return bad("zero-sized dense layer".into());
                }
                if weight.len() != out.len() * in_features || bias.len() != out.len() {
                    return bad(format!(
                        "expected {}x{} weights and {} biases",
                        out.len(),
                        in_features,
                        out.len()
                    ));
                }
            }
            LayerSpec::Upsample { input, factor } => {
                if *factor == 0 || input.is_empty() {
                    return bad("zero factor or empty input".into());
                }
            }
            LayerSpec::Conv2d {
                input,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
                weight,
                bias,
            } => {
                if input.is_empty() || *out_channels == 0 || *kernel_h == 0 || *kernel_w == 0 {
                    return bad("zero-sized convolution".into());
                }
                if *stride == 0 {
                    return bad("stride must be positive".into());
                }
                if input.height + 2 * padding < *kernel_h || input.width + 2 * padding < *kernel_w
                {
                    return bad(format!("kernel larger than padded input {input}"));
                }
                let n = out_channels * input.channels * kernel_h * kernel_w;
                if weight.len() != n || bias.len() != *out_channels {
                    return bad(format!("expected {n} weights and {out_channels} biases"));
                }
            }
            LayerSpec::BatchNorm {
                shape,
                gamma,
                beta,
                mean,
                var,
            } => {
                let c = shape.channels;
                if [gamma.len(), beta.len(), mean.len(), var.len()] != [c, c, c, c] {
                    return bad(format!("expected {c} values per statistic"));
                }
                if var.iter().any(|v| *v < 0.0) {
                    return bad("negative running variance".into());
                }
            }
            LayerSpec::Activation { shape, .. } => {
                if shape.is_empty() {
                    return bad("empty shape".into());
                }
            }
        }
        Ok(())
    }

    /// Iterator over every stored parameter.
    pub fn parameters(&self) -> impl Iterator<Item = &f32> {
        let slices: Vec<&[f32]> = match self {
            LayerSpec::Dense { weight, bias, .. } | LayerSpec::Conv2d { weight, bias, .. } => {
                vec![weight, bias]
            }
            LayerSpec::BatchNorm {
                gamma,
                beta,
                mean,
                var,
                ..
            } => vec![gamma, beta, mean, var],
            _ => vec![],
        };
        slices.into_iter().flatten()
    }
}

/// Applies one layer to a tensor.
pub fn forward_layer(layer: &LayerSpec, input: &Tensor) -> Result<Tensor> {
    match layer.input_shape() {
        Some(shape) if shape != input.shape => {
            return Err(Error::Structure(format!(
                "{} expects {shape}, got {}",
                layer.name(),
                input.shape
            )));
        }
        None if input.data.len() != layer.input_len() => {
            return Err(Error::Structure(format!(
                "dense expects {} inputs, got {}",
                layer.input_len(),
                input.data.len()
            )));
        }
        _ => {}
    }
    Ok(match layer {
        LayerSpec::Dense {
            in_features,
            out,
            weight,
            bias,
        } => dense(&input.data, *in_features, *out, weight, bias),
        LayerSpec::Upsample { input: s, factor } => upsample(input, *s, *factor),
        LayerSpec::Conv2d {
            out_channels,
            kernel_h,
            kernel_w,
            stride,
            padding,
            weight,
            bias,
            ..
        } => conv2d(
            input,
            layer.output_shape(),
            (*out_channels, *kernel_h, *kernel_w),
            *stride,
            *padding,
            weight,
            bias,
        ),
        LayerSpec::BatchNorm {
            shape,
            gamma,
            beta,
            mean,
            var,
        } => {
            let mut data = input.data.clone();
            let plane = shape.plane();
            for c in 0..shape.channels {
                let scale = gamma[c] / (var[c] + BATCHNORM_EPS).sqrt();
                let shift = beta[c] - mean[c] * scale;
                for v in &mut data[c * plane..(c + 1) * plane] {
                    *v = *v * scale + shift;
                }
            }
            Tensor {
                shape: *shape,
                data,
            }
        }
        LayerSpec::Activation { shape, kind } => Tensor {
            shape: *shape,
            data: input.data.iter().map(|v| kind.apply(*v)).collect(),
        },
    })
}

fn dense(x: &[f32], in_features: usize, out: Shape, weight: &[f32], bias: &[f32]) -> Tensor {
    let data = weight
        .chunks_exact(in_features)
        .zip(bias)
        .map(|(row, b)| row.iter().zip(x).fold(*b, |acc, (w, v)| acc + w * v))
        .collect();
    Tensor { shape: out, data }
}

fn upsample(input: &Tensor, s: Shape, factor: usize) -> Tensor {
    let (oh, ow) = (s.height * factor, s.width * factor);
    let mut data = Vec::with_capacity(s.channels * oh * ow);
    for c in 0..s.channels {
        let plane = &input.data[c * s.plane()..(c + 1) * s.plane()];
        for y in 0..oh {
            let row = &plane[(y / factor) * s.width..(y / factor + 1) * s.width];
            for x in 0..ow {
                data.push(row[x / factor]);
            }
        }
    }
    Tensor {
        shape: Shape::new(s.channels, oh, ow),
        data,
    }
}

fn conv2d(
    input: &Tensor,
    out_shape: Shape,
    (out_c, kh, kw): (usize, usize, usize),
    stride: usize,
    pad: usize,
    weight: &[f32],
    bias: &[f32],
) -> Tensor {
    let s = input.shape;
    let (oh, ow) = (out_shape.height, out_shape.width);
    let mut data = vec![0.0f32; out_c * oh * ow];
    for oc in 0..out_c {
        let out = &mut data[oc * oh * ow..(oc + 1) * oh * ow];
        out.fill(bias[oc]);
        for ic in 0..s.channels {
            let plane = &input.data[ic * s.plane()..(ic + 1) * s.plane()];
            let kernel = &weight[(oc * s.channels + ic) * kh * kw..][..kh * kw];
            for ky in 0..kh {
                for kx in 0..kw {
                    let w = kernel[ky * kw + kx];
                    if w == 0.0 {
                        continue;
                    }
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= s.height as isize {
                            continue;
                        }
                        let src = &plane[iy as usize * s.width..(iy as usize + 1) * s.width];
                        let dst = &mut out[oy * ow..(oy + 1) * ow];
                        if stride == 1 {
                            // valid ox range: 0 <= ox + kx - pad < width
                            let lo = pad.saturating_sub(kx);
                            let hi = (s.width + pad).saturating_sub(kx).min(ow);
                            if lo >= hi {
                                continue;
                            }
                            let off = lo + kx - pad;
                            for (d, v) in dst[lo..hi].iter_mut().zip(&src[off..off + hi - lo]) {
                                *d += w * v;
                            }
                        } else {
                            for (ox, d) in dst.iter_mut().enumerate() {
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if ix >= 0 && (ix as usize) < s.width {
                                    *d += w * src[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor {
        shape: out_shape,
        data,
    }
}
