//! Seeded synthetic datasets.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{default_names, Dataset, Task};
use crate::error::{Error, Result};

/// Noise-free Friedman #1 response on the first five coordinates:
/// `10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4`.
pub fn friedman1_response(x: &[f64]) -> f64 {
    10.0 * libm::sin(PI * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4]
}

/// Friedman #1 with ten `U[0, 1]` features (five informative) and unit
/// Gaussian noise.
pub fn gen_friedman1(n: usize, seed: u64) -> Result<Dataset> {
    gen_friedman1_with_noise(n, 1.0, seed)
}

pub fn gen_friedman1_with_noise(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("friedman1 needs n >= 1".into()));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise must be >= 0, got {noise}")));
    }
    const D: usize = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * D);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        features.extend((0..D).map(|_| rng.gen::<f64>()));
        let eps: f64 = rng.sample(StandardNormal);
        targets.push(friedman1_response(&features[start..]) + noise * eps);
    }
    Dataset::new(features, D, targets, default_names(D), Task::Regression)
}

/// Two interleaving half circles. Class 0 is the upper unit half circle,
/// class 1 the lower one shifted by `(1, -0.5)`; `n / 2` points go to class
/// 0 and the rest to class 1. Rows are shuffled.
pub fn gen_two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidArgument("two moons needs n >= 2".into()));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise must be >= 0, got {noise}")));
    }
    let n_upper = n / 2;
    let n_lower = n - n_upper;
    let angle = |i: usize, count: usize| {
        if count == 1 {
            0.0
        } else {
            PI * i as f64 / (count - 1) as f64
        }
    };
    let mut rows: Vec<([f64; 2], f64)> = Vec::with_capacity(n);
    for i in 0..n_upper {
        let t = angle(i, n_upper);
        rows.push(([libm::cos(t), libm::sin(t)], 0.0));
    }
    for i in 0..n_lower {
        let t = angle(i, n_lower);
        rows.push(([1.0 - libm::cos(t), 1.0 - libm::sin(t) - 0.5], 1.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if noise > 0.0 {
        for (p, _) in &mut rows {
            for v in p.iter_mut() {
                let eps: f64 = rng.sample(StandardNormal);
                *v += noise * eps;
            }
        }
    }
    rows.shuffle(&mut rng);
    let features = rows.iter().flat_map(|(p, _)| p.iter().copied()).collect();
    let targets = rows.iter().map(|(_, y)| *y).collect();
    Dataset::new(features, 2, targets, default_names(2), Task::BinaryClassification)
}

/// Isotropic Gaussian blobs, one per class, with centers drawn from
/// `U[-10, 10]^d`. Labels are balanced within one.
pub fn gen_blobs(n: usize, classes: usize, d: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 || n < classes || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "blobs need classes >= 2, n >= classes and d >= 1 (got n={n}, classes={classes}, d={d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> =
        (0..classes).map(|_| (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect()).collect();
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        for &mu in &centers[c] {
            let eps: f64 = rng.sample(StandardNormal);
            features.push(mu + spread * eps);
        }
        targets.push(c as f64);
    }
    Dataset::new(features, d, targets, default_names(d), Task::Multiclass { classes })
}
