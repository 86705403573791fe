//! Shared fixtures and naive reference implementations for integration tests.
//! Oracles favour the most literal formula over speed or numerical care.

#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use gridsense::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian noise, a random walk, or a noisy sinusoid, picked by the seed.
pub fn random_window(seed: u64, len: usize) -> Vec<f64> {
    let mut r = rng(seed);
    let level: f64 = r.random_range(-5.0..5.0);
    let scale: f64 = r.random_range(0.1..3.0);
    match seed % 3 {
        0 => (0..len).map(|_| level + scale * r.sample::<f64, _>(StandardNormal)).collect(),
        1 => {
            let mut acc = level;
            (0..len)
                .map(|_| {
                    acc += scale * r.sample::<f64, _>(StandardNormal);
                    acc
                })
                .collect()
        }
        _ => {
            let f: f64 = r.random_range(0.01..0.45);
            (0..len)
                .map(|i| {
                    level
                        + scale * (2.0 * std::f64::consts::PI * f * i as f64).sin()
                        + 0.3 * scale * r.sample::<f64, _>(StandardNormal)
                })
                .collect()
        }
    }
}

pub fn white_noise(seed: u64, len: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..len).map(|_| r.sample(StandardNormal)).collect()
}

/// Gaussian rows whose class shifts the first `informative` columns.
pub fn gaussian_classes(seed: u64, counts: &[usize], n_cols: usize, informative: usize, shift: f64) -> FeatureMatrix {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            let row: Vec<f64> = (0..n_cols)
                .map(|j| {
                    let z: f64 = r.sample(StandardNormal);
                    if j < informative {
                        z + shift * c as f64 * if j % 2 == 0 { 1.0 } else { -1.0 }
                    } else {
                        z
                    }
                })
                .collect();
            rows.push(row);
            labels.push(c);
        }
    }
    let columns = (0..n_cols).map(|j| format!("f{j}")).collect();
    let classes = (0..counts.len()).map(|c| format!("c{c}")).collect();
    FeatureMatrix::new(columns, rows, labels, classes).unwrap()
}

/// `|a - b| <= tol * max(|a|, |b|)`; exact equality covers zeros.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
