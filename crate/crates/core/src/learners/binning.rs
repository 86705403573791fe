use crate::error::{Error, Result};

/// Column-major bin indices of a training matrix.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub columns: Vec<Vec<u8>>,
    /// Number of bins per feature (`edges.len() + 1`).
    pub n_bins: Vec<usize>,
}

/// Quantile bin upper edges computed once on the training rows.
///
/// A value `x` falls in bin `b` when `edges[b-1] < x <= edges[b]`, so the
/// split "bin <= b" is exactly the raw test `x <= edges[b]`.
pub fn compute_bin_edges(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let Some(&max) = sorted.last() else {
        return Vec::new();
    };
    let mut distinct = sorted.clone();
    distinct.dedup();
    let mut edges = Vec::new();
    if distinct.len() <= n_bins {
        edges.extend_from_slice(&distinct[..distinct.len() - 1]);
    } else {
        let n = sorted.len();
        for i in 1..n_bins {
            let q = sorted[(i * n) / n_bins];
            // ties collapse bins
            if q < max && edges.last().is_none_or(|&e| q > e) {
                edges.push(q);
            }
        }
    }
    edges
}

#[inline]
pub fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e < x)
}

pub fn fit_bins(rows: &[Vec<f64>], n_cols: usize, n_bins: usize) -> Result<Vec<Vec<f64>>> {
    if !(2..=256).contains(&n_bins) {
        return Err(Error::Learner(format!("n_bins must be in 2..=256, got {n_bins}")));
    }
    Ok((0..n_cols)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            compute_bin_edges(&col, n_bins)
        })
        .collect())
}

pub fn bin_rows(rows: &[Vec<f64>], edges: &[Vec<f64>]) -> BinnedMatrix {
    let columns = edges
        .iter()
        .enumerate()
        .map(|(j, e)| rows.iter().map(|r| bin_of(e, r[j]) as u8).collect())
        .collect();
    BinnedMatrix {
        columns,
        n_bins: edges.iter().map(|e| e.len() + 1).collect(),
    }
}
