//! Detrended fluctuation analysis with first-order (linear) box detrending.

use crate::error::{Error, Result};

/// Floor applied to F(n) before taking logs.
pub const FLUCTUATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DfaFit {
    pub scales: Vec<usize>,
    /// Raw fluctuation F(n) per scale, before flooring.
    pub fluctuations: Vec<f64>,
    /// Scales whose F(n) was raised to the floor.
    pub floored: usize,
    pub alpha: f64,
}

/// `count` log-spaced integer box sizes in `[4, n/4]`, deduplicated.
pub fn dfa_scales(n: usize, count: usize) -> Vec<usize> {
    let lo = 4.0f64;
    let hi = (n / 4) as f64;
    if hi < lo || count == 0 {
        return Vec::new();
    }
    let mut scales: Vec<usize> = (0..count)
        .map(|i| {
            let f = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            (lo.ln() + f * (hi.ln() - lo.ln())).exp().round() as usize
        })
        .collect();
    scales.dedup();
    scales
}

/// Root-mean-square residual of per-box linear fits to the integrated profile.
pub fn fluctuation(profile: &[f64], box_len: usize) -> f64 {
    let boxes = profile.len() / box_len;
    let t_mean = (box_len as f64 - 1.0) / 2.0;
    let t_ss: f64 = (0..box_len).map(|t| (t as f64 - t_mean).powi(2)).sum();
    let mut ss = 0.0;
    for b in 0..boxes {
        let y = &profile[b * box_len..(b + 1) * box_len];
        let y_mean = y.iter().sum::<f64>() / box_len as f64;
        let cov: f64 = y
            .iter()
            .enumerate()
            .map(|(t, v)| (t as f64 - t_mean) * (v - y_mean))
            .sum();
        let slope = cov / t_ss;
        ss += y
            .iter()
            .enumerate()
            .map(|(t, v)| (v - y_mean - slope * (t as f64 - t_mean)).powi(2))
            .sum::<f64>();
    }
    (ss / (boxes * box_len) as f64).sqrt()
}

pub fn dfa_fit(x: &[f64], n_scales: usize) -> Result<DfaFit> {
    if x.len() < 64 {
        return Err(Error::Precondition(format!(
            "DFA needs at least 64 samples, got {}",
            x.len()
        )));
    }
    let scales = dfa_scales(x.len(), n_scales);
    if scales.len() < 3 {
        return Err(Error::Precondition(format!(
            "DFA needs at least 3 usable scales, got {}",
            scales.len()
        )));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let profile: Vec<f64> = x
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v - mean;
            Some(*acc)
        })
        .collect();
    let fluctuations: Vec<f64> = scales.iter().map(|&n| fluctuation(&profile, n)).collect();
    let floored = fluctuations.iter().filter(|&&f| f < FLUCTUATION_FLOOR).count();
    let lx: Vec<f64> = scales.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = fluctuations
        .iter()
        .map(|&f| f.max(FLUCTUATION_FLOOR).ln())
        .collect();
    let alpha = ols_slope(&lx, &ly);
    Ok(DfaFit {
        scales,
        fluctuations,
        floored,
        alpha,
    })
}

pub fn dfa_exponent(x: &[f64], n_scales: usize) -> Result<f64> {
    dfa_fit(x, n_scales).map(|f| f.alpha)
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    // + 0.0 folds -0.0 (flat log-log line) into 0.0
    sxy / sxx + 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_grid() {
        assert_eq!(dfa_scales(64, 10), vec![4, 5, 6, 7, 9, 10, 12, 14, 16]);
        let s = dfa_scales(5400, 10);
        assert_eq!(s.first(), Some(&4));
        assert_eq!(s.last(), Some(&1350));
        assert_eq!(s.len(), 10);
    }

    #[test]
    fn constant_window_takes_floor_path() {
        let fit = dfa_fit(&[2.0; 256], 10).unwrap();
        assert_eq!(fit.floored, fit.scales.len());
        assert!(fit.fluctuations.iter().all(|&f| f <= 1e-10));
        assert_eq!(fit.alpha, 0.0);
    }

    #[test]
    fn too_short() {
        assert!(dfa_exponent(&[0.0; 63], 10).is_err());
        assert!(dfa_exponent(&[0.0; 64], 2).is_err());
    }
}
