use super::FeatureMap;
use crate::error::{Error, Result};

/// Argmax positions (flat input indices) of a 2×2 max pool, one per output.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolCache {
    input_shape: (usize, usize, usize),
    argmax: Vec<usize>,
}

/// 2×2, stride-2 max pooling. Ties go to the first maximum in row-major
/// order within the window.
pub fn maxpool_forward(input: &FeatureMap) -> Result<(FeatureMap, PoolCache)> {
    let (c, h, w) = input.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!(
            "max pool needs even spatial dims, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for i in 0..oh {
            for j in 0..ow {
                let mut best = input.index(ch, 2 * i, 2 * j);
                for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = input.index(ch, 2 * i + di, 2 * j + dj);
                    if input.data()[idx] > input.data()[best] {
                        best = idx;
                    }
                }
                out.push(input.data()[best]);
                argmax.push(best);
            }
        }
    }
    Ok((
        FeatureMap::new(c, oh, ow, out)?,
        PoolCache {
            input_shape: (c, h, w),
            argmax,
        },
    ))
}

pub fn maxpool_backward(cache: &PoolCache, upstream: &FeatureMap) -> Result<FeatureMap> {
    let (c, h, w) = cache.input_shape;
    if upstream.shape() != (c, h / 2, w / 2) {
        return Err(Error::Shape(format!(
            "pool upstream {:?} does not match output ({c}, {}, {})",
            upstream.shape(),
            h / 2,
            w / 2
        )));
    }
    let mut grad = FeatureMap::zeros(c, h, w)?;
    for (&idx, &g) in cache.argmax.iter().zip(upstream.data()) {
        grad.data_mut()[idx] += g;
    }
    Ok(grad)
}

/// Per-channel spatial mean.
pub fn gap_forward(input: &FeatureMap) -> Vec<f64> {
    let plane = (input.height() * input.width()) as f64;
    (0..input.channels())
        .map(|c| input.channel(c).iter().sum::<f64>() / plane)
        .collect()
}

/// Spreads each channel's upstream gradient uniformly over its `h·w` positions.
pub fn gap_backward(upstream: &[f64], shape: (usize, usize, usize)) -> Result<FeatureMap> {
    let (c, h, w) = shape;
    if upstream.len() != c {
        return Err(Error::Shape(format!(
            "{} upstream values for {c} channels",
            upstream.len()
        )));
    }
    let scale = 1.0 / (h * w) as f64;
    let data = upstream
        .iter()
        .flat_map(|&g| std::iter::repeat_n(g * scale, h * w))
        .collect();
    FeatureMap::from_raw(c, h, w, data)
}
