//! MNIST ingestion and preprocessing.
//!
//! IDX containers are big-endian: two zero bytes, a type byte (`0x08` for
//! unsigned bytes), a dimension count, one `u32` per dimension, then the
//! payload. Image files carry magic `0x00000803`, label files `0x00000801`.
//! Gzip-compressed files are detected by their magic bytes.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layers::FeatureMap;

pub const MNIST_SIDE: usize = 28;
pub const CROP_SIDE: usize = 22;
const CROP_MARGIN: usize = (MNIST_SIDE - CROP_SIDE) / 2;
const IDX_UBYTE: u8 = 0x08;
// generous bound on decompressed size; the full training set is ~47 MB
const MAX_DECOMPRESSED: u64 = 1 << 30;

/// A decoded IDX array of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

/// Decodes an uncompressed IDX byte buffer.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.len() < 4 {
        return Err(format_err(bytes.len(), "truncated IDX header"));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(format_err(0, "IDX magic must start with two zero bytes"));
    }
    if bytes[2] != IDX_UBYTE {
        return Err(format_err(
            2,
            format!("unsupported IDX element type 0x{:02x}", bytes[2]),
        ));
    }
    let ndim = bytes[3] as usize;
    if ndim == 0 {
        return Err(format_err(3, "IDX array with zero dimensions"));
    }
    let header_len = 4 + 4 * ndim;
    if bytes.len() < header_len {
        return Err(format_err(bytes.len(), "truncated IDX dimension list"));
    }
    let mut dims = Vec::with_capacity(ndim);
    let mut total: usize = 1;
    for k in 0..ndim {
        let at = 4 + 4 * k;
        let d = u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
        total = total
            .checked_mul(d)
            .ok_or_else(|| format_err(at, "IDX dimensions overflow"))?;
        dims.push(d);
    }
    let payload = &bytes[header_len..];
    if payload.len() < total {
        return Err(format_err(
            bytes.len(),
            format!(
                "truncated IDX payload: expected {total} bytes, found {}",
                payload.len()
            ),
        ));
    }
    if payload.len() > total {
        return Err(format_err(
            header_len + total,
            format!("{} trailing bytes after IDX payload", payload.len() - total),
        ));
    }
    Ok(IdxArray {
        dims,
        data: payload.to_vec(),
    })
}

/// Decodes IDX bytes that may be gzip-compressed.
pub fn decode_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut raw = Vec::new();
        GzDecoder::new(bytes)
            .take(MAX_DECOMPRESSED)
            .read_to_end(&mut raw)
            .map_err(|e| format_err(0, format!("gzip stream: {e}")))?;
        parse_idx(&raw)
    } else {
        parse_idx(bytes)
    }
}

pub fn read_idx(path: impl AsRef<Path>) -> Result<IdxArray> {
    let bytes = std::fs::read(path.as_ref())?;
    decode_idx(&bytes)
}

/// Raw 28×28 images and their digit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMnist {
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

impl RawMnist {
    pub fn from_idx(images: IdxArray, labels: IdxArray) -> Result<Self> {
        if images.dims.len() != 3 || images.dims[1] != MNIST_SIDE || images.dims[2] != MNIST_SIDE {
            return Err(format_err(
                4,
                format!("expected N×28×28 images, got dims {:?}", images.dims),
            ));
        }
        if labels.dims.len() != 1 {
            return Err(format_err(
                3,
                format!("expected 1-d labels, got {:?}", labels.dims),
            ));
        }
        if labels.dims[0] != images.dims[0] {
            return Err(Error::Data(format!(
                "{} images but {} labels",
                images.dims[0], labels.dims[0]
            )));
        }
        if let Some(pos) = labels.data.iter().position(|&l| l > 9) {
            return Err(format_err(
                8 + pos,
                format!("label {} out of 0..=9", labels.data[pos]),
            ));
        }
        let plane = MNIST_SIDE * MNIST_SIDE;
        Ok(RawMnist {
            images: images
                .data
                .chunks_exact(plane)
                .map(<[u8]>::to_vec)
                .collect(),
            labels: labels.data,
        })
    }

    /// Loads `<prefix>-images-idx3-ubyte[.gz]` and `<prefix>-labels-idx1-ubyte[.gz]`
    /// from `dir`.
    pub fn load(dir: impl AsRef<Path>, prefix: &str) -> Result<Self> {
        let dir = dir.as_ref();
        let find = |stem: String| -> Result<std::path::PathBuf> {
            let plain = dir.join(&stem);
            let gz = dir.join(format!("{stem}.gz"));
            if gz.exists() {
                Ok(gz)
            } else if plain.exists() {
                Ok(plain)
            } else {
                Err(Error::Data(format!(
                    "neither {} nor {} exists",
                    plain.display(),
                    gz.display()
                )))
            }
        };
        let images = read_idx(find(format!("{prefix}-images-idx3-ubyte"))?)?;
        let labels = read_idx(find(format!("{prefix}-labels-idx1-ubyte"))?)?;
        RawMnist::from_idx(images, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Keeps rows and columns 3..25 of a 28×28 image.
pub fn center_crop_22(image: &[u8]) -> Result<Vec<u8>> {
    if image.len() != MNIST_SIDE * MNIST_SIDE {
        return Err(Error::Shape(format!(
            "crop expects a 28x28 image, got {} pixels",
            image.len()
        )));
    }
    Ok((CROP_MARGIN..CROP_MARGIN + CROP_SIDE)
        .flat_map(|r| {
            let start = r * MNIST_SIDE + CROP_MARGIN;
            image[start..start + CROP_SIDE].iter().copied()
        })
        .collect())
}

/// Maps pixel bytes onto rotation angles, `v → π·v/255`.
pub fn scale_to_angles(pixels: &[u8]) -> Vec<f64> {
    pixels.iter().map(|&v| PI * f64::from(v) / 255.0).collect()
}

/// 2×2 average pooling (stride 2). Spatial dims must be even.
pub fn downsample_avg2(map: &FeatureMap) -> Result<FeatureMap> {
    let (c, h, w) = map.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("cannot halve a {h}x{w} map")));
    }
    let mut out = Vec::with_capacity(c * h * w / 4);
    for ch in 0..c {
        for i in (0..h).step_by(2) {
            for j in (0..w).step_by(2) {
                let s = map.get(ch, i, j)
                    + map.get(ch, i, j + 1)
                    + map.get(ch, i + 1, j)
                    + map.get(ch, i + 1, j + 1);
                out.push(s / 4.0);
            }
        }
    }
    FeatureMap::new(c, h / 2, w / 2, out)
}

/// Preprocessed images with class indices `0..n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<FeatureMap>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(images: Vec<FeatureMap>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Data(format!("label {l} out of {n_classes} classes")));
        }
        if let Some(first) = images.first() {
            if images.iter().any(|m| m.shape() != first.shape()) {
                return Err(Error::Data("images have mixed shapes".into()));
            }
        }
        Ok(Dataset {
            images,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image_shape(&self) -> Option<(usize, usize, usize)> {
        self.images.first().map(FeatureMap::shape)
    }

    pub fn one_hot(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_classes];
        v[self.labels[i]] = 1.0;
        v
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.n_classes];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }
}

/// Draws `train_per_class` and `test_per_class` disjoint samples of every
/// digit in `digits`. Returned index lists are sorted.
pub fn balanced_subset(
    labels: &[u8],
    digits: &[u8],
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(digits.len() * train_per_class);
    let mut test = Vec::with_capacity(digits.len() * test_per_class);
    for &digit in digits {
        let mut pool: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == digit)
            .map(|(i, _)| i)
            .collect();
        if pool.len() < train_per_class + test_per_class {
            return Err(Error::Data(format!(
                "digit {digit} has {} samples, need {}",
                pool.len(),
                train_per_class + test_per_class
            )));
        }
        pool.shuffle(&mut rng);
        train.extend_from_slice(&pool[..train_per_class]);
        test.extend_from_slice(&pool[train_per_class..train_per_class + test_per_class]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Crops, scales and optionally halves the selected images; labels become
/// positions in `digits`.
pub fn prepare(raw: &RawMnist, indices: &[usize], digits: &[u8], halve: bool) -> Result<Dataset> {
    let mut images = Vec::with_capacity(indices.len());
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        let digit = raw.labels[i];
        let class = digits
            .iter()
            .position(|&d| d == digit)
            .ok_or_else(|| Error::Data(format!("sample {i} has unselected digit {digit}")))?;
        let cropped = center_crop_22(&raw.images[i])?;
        let mut map = FeatureMap::new(1, CROP_SIDE, CROP_SIDE, scale_to_angles(&cropped))?;
        if halve {
            map = downsample_avg2(&map)?;
        }
        images.push(map);
        labels.push(class);
    }
    Dataset::new(images, labels, digits.len())
}

/// Small synthetic dataset: each class is a fixed random pattern on `[0, π]`
/// and samples add bounded noise. Classes cycle so counts stay balanced.
pub fn stub_dataset(samples: usize, side: usize, n_classes: usize, seed: u64) -> Result<Dataset> {
    if side == 0 || n_classes == 0 {
        return Err(Error::Config(
            "stub dataset needs positive side and classes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plane = side * side;
    let patterns: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| (0..plane).map(|_| rng.random_range(0.0..=PI)).collect())
        .collect();
    let mut images = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for s in 0..samples {
        let class = s % n_classes;
        let data = patterns[class]
            .iter()
            .map(|&v| (v + rng.random_range(-0.3..=0.3)).clamp(0.0, PI))
            .collect();
        images.push(FeatureMap::new(1, side, side, data)?);
        labels.push(class);
    }
    Dataset::new(images, labels, n_classes)
}
