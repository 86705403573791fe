//! SMOTE oversampling up to the majority class count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// How a synthetic row was made: `base + gap * (neighbor - base)`, indices into the input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest same-class rows of `members[i]` (Euclidean, ties by row index), as row indices.
pub fn class_neighbors(m: &FeatureMatrix, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .iter()
        .map(|&i| {
            let mut d: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (sq_dist(&m.rows[i], &m.rows[j]), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Appends synthetic rows so every class reaches the majority count.
/// Originals keep their order and come first.
pub fn smote(m: &FeatureMatrix, k: usize, seed: u64) -> Result<(FeatureMatrix, Vec<SmoteOrigin>)> {
    m.validate()?;
    if k == 0 {
        return Err(Error::Smote("k must be at least 1".into()));
    }
    let counts = m.class_counts();
    let target = counts.iter().copied().max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = m.clone();
    let mut origins = Vec::new();

    for (class, &count) in counts.iter().enumerate() {
        if count == 0 || count == target {
            continue;
        }
        if count < 2 {
            return Err(Error::Smote(format!(
                "class {} has {count} row; SMOTE needs at least 2",
                m.classes[class]
            )));
        }
        let members: Vec<usize> = (0..m.len()).filter(|&i| m.labels[i] == class).collect();
        let neighbors = class_neighbors(m, &members, k.min(count - 1));
        for _ in 0..target - count {
            let pick = rng.random_range(0..members.len());
            let base = members[pick];
            let nb = &neighbors[pick];
            let neighbor = nb[rng.random_range(0..nb.len())];
            let gap: f64 = rng.random();
            let row = m.rows[base]
                .iter()
                .zip(&m.rows[neighbor])
                .map(|(x, z)| x + gap * (z - x))
                .collect();
            out.rows.push(row);
            out.labels.push(class);
            out.synthetic.push(true);
            out.ids.push(format!("syn-{}", origins.len()));
            origins.push(SmoteOrigin { base, neighbor, gap });
        }
    }
    Ok((out, origins))
}
