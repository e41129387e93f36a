//! The MNIST pipeline checked against a hand-rolled IDX reader over the
//! bundled files in `data/mnist`.

use std::f64::consts::PI;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use qfe_core::data::{self, RawMnist, CROP_SIDE, MNIST_SIDE};
use qfe_core::layers::FeatureMap;

fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

fn gunzip(path: &Path) -> Vec<u8> {
    let mut out = Vec::new();
    GzDecoder::new(std::fs::File::open(path).unwrap())
        .read_to_end(&mut out)
        .unwrap();
    out
}

fn be_u32(b: &[u8], at: usize) -> usize {
    u32::from_be_bytes(b[at..at + 4].try_into().unwrap()) as usize
}

/// (count, rows, cols, pixels) straight from the byte layout.
fn reference_images(path: &Path) -> (usize, usize, usize, Vec<u8>) {
    let b = gunzip(path);
    assert_eq!(be_u32(&b, 0), 0x0803);
    let (n, r, c) = (be_u32(&b, 4), be_u32(&b, 8), be_u32(&b, 12));
    assert_eq!(b.len(), 16 + n * r * c);
    (n, r, c, b[16..].to_vec())
}

fn reference_labels(path: &Path) -> Vec<u8> {
    let b = gunzip(path);
    assert_eq!(be_u32(&b, 0), 0x0801);
    let n = be_u32(&b, 4);
    assert_eq!(b.len(), 8 + n);
    b[8..].to_vec()
}

#[test]
fn loader_agrees_with_reference_reader() {
    let dir = bundled_dir();
    let (n, r, c, pixels) = reference_images(&dir.join("train-images-idx3-ubyte.gz"));
    let labels = reference_labels(&dir.join("train-labels-idx1-ubyte.gz"));
    assert_eq!((r, c), (MNIST_SIDE, MNIST_SIDE));
    assert_eq!(labels.len(), n);

    let raw = RawMnist::load(&dir, "train").unwrap();
    assert_eq!(raw.len(), n);
    assert_eq!(raw.labels, labels);
    for (i, img) in raw.images.iter().enumerate() {
        assert_eq!(
            img.as_slice(),
            &pixels[i * r * c..(i + 1) * r * c],
            "image {i}"
        );
    }
}

#[test]
fn prepared_images_are_cropped_scaled_pixels() {
    let raw = RawMnist::load(bundled_dir(), "train").unwrap();
    let digits: Vec<u8> = (0..10).collect();
    let all: Vec<usize> = (0..raw.len()).collect();
    let ds = data::prepare(&raw, &all, &digits, false).unwrap();
    assert_eq!(ds.image_shape(), Some((1, CROP_SIDE, CROP_SIDE)));
    for (i, (img, src)) in ds.images.iter().zip(&raw.images).enumerate() {
        assert_eq!(ds.labels[i], raw.labels[i] as usize);
        let mut kept = 0.0;
        for r in 0..CROP_SIDE {
            for c in 0..CROP_SIDE {
                let v = src[(r + 3) * MNIST_SIDE + c + 3];
                assert_eq!(img.get(0, r, c), PI * f64::from(v) / 255.0);
                kept += f64::from(v);
            }
        }
        // the 3-pixel border carries little ink in every bundled digit
        let total: f64 = src.iter().map(|&v| f64::from(v)).sum();
        assert!(kept >= 0.85 * total, "image {i} keeps {kept} of {total}");
    }
}

#[test]
fn halving_averages_two_by_two_blocks() {
    let raw = RawMnist::load(bundled_dir(), "train").unwrap();
    let idx = [0, 1, 2, 3];
    let digits: Vec<u8> = (0..10).collect();
    let full = data::prepare(&raw, &idx, &digits, false).unwrap();
    let half = data::prepare(&raw, &idx, &digits, true).unwrap();
    assert_eq!(half.image_shape(), Some((1, CROP_SIDE / 2, CROP_SIDE / 2)));
    for (f, h) in full.images.iter().zip(&half.images) {
        for r in 0..CROP_SIDE / 2 {
            for c in 0..CROP_SIDE / 2 {
                let mean = (f.get(0, 2 * r, 2 * c)
                    + f.get(0, 2 * r, 2 * c + 1)
                    + f.get(0, 2 * r + 1, 2 * c)
                    + f.get(0, 2 * r + 1, 2 * c + 1))
                    / 4.0;
                assert!((h.get(0, r, c) - mean).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn balanced_split_has_exact_class_counts() {
    let raw = RawMnist::load(bundled_dir(), "train").unwrap();
    let digits: Vec<u8> = (0..10).collect();
    let (train, test) = data::balanced_subset(&raw.labels, &digits, 600, 60, 7).unwrap();
    assert!(train.iter().all(|i| test.binary_search(i).is_err()));
    let train_ds = data::prepare(&raw, &train, &digits, false).unwrap();
    let test_ds = data::prepare(&raw, &test, &digits, false).unwrap();
    assert_eq!(train_ds.class_histogram(), vec![600; 10]);
    assert_eq!(test_ds.class_histogram(), vec![60; 10]);

    let again = data::balanced_subset(&raw.labels, &digits, 600, 60, 7).unwrap();
    assert_eq!(again, (train.clone(), test));
    let other = data::balanced_subset(&raw.labels, &digits, 600, 60, 8).unwrap();
    assert_ne!(other.0, train);
}

#[test]
fn digit_subset_relabels_by_position() {
    let raw = RawMnist::load(bundled_dir(), "train").unwrap();
    let digits = [7, 3];
    let (train, _) = data::balanced_subset(&raw.labels, &digits, 5, 1, 0).unwrap();
    let ds = data::prepare(&raw, &train, &digits, false).unwrap();
    assert_eq!(ds.n_classes, 2);
    for (&i, &label) in train.iter().zip(&ds.labels) {
        assert_eq!(digits[label], raw.labels[i]);
    }
}

#[test]
fn downsample_rejects_odd_sides() {
    let m = FeatureMap::zeros(1, 3, 4).unwrap();
    assert!(data::downsample_avg2(&m).is_err());
}

/// Runs against the official 60 000-image training files when
/// `QFE_MNIST_OFFICIAL_DIR` points at them; a no-op otherwise.
#[test]
fn official_training_files_when_available() {
    let Ok(dir) = std::env::var("QFE_MNIST_OFFICIAL_DIR") else {
        return;
    };
    let raw = RawMnist::load(&dir, "train").unwrap();
    assert_eq!(raw.len(), 60_000);
    assert_eq!(raw.labels[0], 5);
}
