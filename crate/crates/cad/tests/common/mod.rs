#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lesion_cad::pgm::save_image;
use lesion_core::features::{FeatureFile, FeatureRecord};
use lesion_core::imaging::{ImageGrid, SegMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const SIDE: usize = 128;

/// Bright disk on a dark background with additive Gaussian noise, as 8-bit
/// gray levels, plus the noise-free disk.
pub fn disk_phantom(cx: f64, cy: f64, r: f64, noise: f64, seed: u64) -> (ImageGrid, SegMask) {
    let truth = SegMask::from_fn(SIDE, SIDE, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        dx * dx + dy * dy <= r * r
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    let img = ImageGrid::from_fn(SIDE, SIDE, |x, y| {
        let base = if truth.get(x, y) { 0.85 } else { 0.2 };
        let n = if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        ((base + n).clamp(0.0, 1.0) * 255.0).round()
    });
    (img, truth)
}

/// Lesion-free slice: constant level plus optional noise.
pub fn flat_image(level: f64, noise: f64, seed: u64) -> ImageGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    ImageGrid::from_fn(SIDE, SIDE, |_, _| {
        let n = if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        ((level + n).clamp(0.0, 1.0) * 255.0).round()
    })
}

pub fn write_image(dir: &Path, name: &str, img: &ImageGrid) -> PathBuf {
    let path = dir.join(format!("{name}.pgm"));
    save_image(img, &path).unwrap();
    path
}

/// Two classes on either side of `x0 + x1 = 0` with a gap of 0.2.
pub fn separable_features(n: usize, seed: u64) -> FeatureFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    while records.len() < n {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let d = (a + b) / std::f64::consts::SQRT_2;
        if d.abs() < 0.1 {
            continue;
        }
        records.push(FeatureRecord::new(format!("s{:04}", records.len()), Some((d > 0.0) as u8), vec![a, b]));
    }
    FeatureFile::new(2, records).unwrap()
}

/// Writes a training set of phantoms and lesion-free slices plus a manifest naming them.
pub fn training_images(dir: &Path, per_class: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = String::new();
    for i in 0..per_class {
        let (cx, cy) = (rng.random_range(35.0..93.0), rng.random_range(35.0..93.0));
        let r = rng.random_range(10.0..22.0);
        let noise = rng.random_range(0.0..0.08);
        let (img, _) = disk_phantom(cx, cy, r, noise, rng.random());
        write_image(dir, &format!("pos{i:03}"), &img);
        manifest.push_str(&format!("pos{i:03}.pgm 1\n"));

        let level = rng.random_range(0.05..0.9);
        let noise = if i % 2 == 0 { 0.0 } else { rng.random_range(0.01..0.08) };
        write_image(dir, &format!("neg{i:03}"), &flat_image(level, noise, rng.random()));
        manifest.push_str(&format!("neg{i:03}.pgm 0\n"));
    }
    let path = dir.join("manifest.txt");
    std::fs::write(&path, manifest).unwrap();
    path
}

pub fn lesioncad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lesioncad")).args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
