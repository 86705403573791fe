//! Moment, order, block, energy and autocorrelation statistics of a window.

use crate::error::{Error, Result};

/// Variance floor below which shape statistics are reported as zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasicStats {
    pub mean: f64,
    pub var: f64,
    pub skewness: f64,
    /// Excess kurtosis (Gaussian → 0).
    pub kurtosis: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn stats_basic(x: &[f64]) -> Result<BasicStats> {
    if x.len() < 4 {
        return Err(Error::Precondition(format!(
            "basic statistics need at least 4 samples, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = mean(x);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        min = min.min(v);
        max = max.max(v);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 < DEGENERATE_VARIANCE {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    Ok(BasicStats {
        mean,
        var: m2,
        skewness,
        kurtosis,
        min,
        max,
        median: median(x),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Splits `x` into `n_blocks` contiguous blocks (remainder joins the last block).
pub fn stats_blocks(x: &[f64], n_blocks: usize) -> Result<BlockStats> {
    if n_blocks == 0 || x.len() < n_blocks {
        return Err(Error::Precondition(format!(
            "cannot split {} samples into {n_blocks} blocks",
            x.len()
        )));
    }
    let len = x.len() / n_blocks;
    let (means, stds) = (0..n_blocks)
        .map(|b| {
            let end = if b + 1 == n_blocks { x.len() } else { (b + 1) * len };
            let block = &x[b * len..end];
            (mean(block), std_dev(block))
        })
        .unzip();
    Ok(BlockStats { means, stds })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyFeatures {
    pub energy: f64,
    pub rms: f64,
    pub ptp: f64,
}

pub fn energy_features(x: &[f64]) -> Result<EnergyFeatures> {
    if x.is_empty() {
        return Err(Error::Precondition("energy of an empty window".into()));
    }
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let (min, max) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(EnergyFeatures {
        energy,
        rms: (energy / x.len() as f64).sqrt(),
        ptp: max - min,
    })
}

/// Lag-k autocorrelation: biased autocovariance normalized by the population variance.
pub fn autocov(x: &[f64], lags: &[usize]) -> Result<Vec<f64>> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if x.len() <= max_lag + 1 {
        return Err(Error::Precondition(format!(
            "autocovariance at lag {max_lag} needs more than {} samples",
            max_lag + 1
        )));
    }
    let n = x.len() as f64;
    let m = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let m2 = c.iter().map(|v| v * v).sum::<f64>() / n;
    if m2 < DEGENERATE_VARIANCE {
        return Ok(vec![0.0; lags.len()]);
    }
    Ok(lags
        .iter()
        .map(|&k| {
            let s: f64 = c.iter().zip(&c[k..]).map(|(a, b)| a * b).sum();
            s / n / m2
        })
        .collect())
}
