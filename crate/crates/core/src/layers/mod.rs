//! Network layers and the loss.

mod dense;
mod pool;
mod qfe;

pub use dense::{Dense, DenseActivation, DenseCache, DenseGrads};
pub use pool::{gap_backward, gap_forward, maxpool_backward, maxpool_forward, PoolCache};
pub use qfe::{QfeCache, QfeConfig, QfeGrads, QfeLayer};

use std::f64::consts::PI;

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Dense `channels × height × width` tensor, row-major within each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "feature map dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "{} values do not fill a {channels}x{height}x{width} map",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "feature map holds non-finite value {v}"
            )));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        FeatureMap::new(
            channels,
            height,
            width,
            vec![0.0; channels * height * width],
        )
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, c: usize, i: usize, j: usize) -> usize {
        (c * self.height + i) * self.width + j
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> f64 {
        self.data[self.index(c, i, j)]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Shape-checked constructor that admits non-finite values, for gradients
    /// that the trainer inspects before use.
    pub(crate) fn from_raw(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "{} values do not fill a {channels}x{height}x{width} map",
                data.len()
            )));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Output activation of a QFE layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// `2π / (1 + e^{-p})`, onto `(0, 2π)`.
    ScaledSigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, p: f64) -> f64 {
        match self {
            Activation::ScaledSigmoid => scaled_sigmoid(p),
            Activation::Identity => p,
        }
    }

    pub fn derivative(self, p: f64) -> f64 {
        match self {
            Activation::ScaledSigmoid => scaled_sigmoid_derivative(p),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::ScaledSigmoid => "scaled-sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "scaled-sigmoid" | "sigmoid" => Ok(Activation::ScaledSigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

pub fn scaled_sigmoid(p: f64) -> f64 {
    if p >= 0.0 {
        TWO_PI / (1.0 + (-p).exp())
    } else {
        let e = p.exp();
        TWO_PI * e / (1.0 + e)
    }
}

/// `σ'(p) = σ(p)(2π − σ(p)) / 2π`.
pub fn scaled_sigmoid_derivative(p: f64) -> f64 {
    let s = scaled_sigmoid(p);
    s * (TWO_PI - s) / TWO_PI
}

/// Cross-entropy of `softmax(logits)` against a target distribution (usually
/// one-hot). Returns the loss and `softmax − target`.
pub fn softmax_cross_entropy(logits: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.is_empty() || logits.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} logits against a {}-class target",
            logits.len(),
            target.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
    let log_z = max + sum.ln();
    let loss = target
        .iter()
        .zip(logits)
        .filter(|(&t, _)| t != 0.0)
        .map(|(&t, &l)| -t * (l - log_z))
        .sum();
    let grad = logits
        .iter()
        .zip(target)
        .map(|(&l, &t)| (l - log_z).exp() - t)
        .collect();
    Ok((loss, grad))
}

/// Output side length of a valid (unpadded) window sweep.
pub fn conv_output_size(input: usize, kernel: usize, stride: usize) -> Result<usize> {
    if kernel == 0 || stride == 0 {
        return Err(Error::Shape("kernel and stride must be positive".into()));
    }
    if input < kernel {
        return Err(Error::Shape(format!(
            "input size {input} smaller than kernel {kernel}"
        )));
    }
    Ok((input - kernel) / stride + 1)
}
