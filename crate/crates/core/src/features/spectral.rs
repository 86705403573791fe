//! DFT magnitude features. The window mean is removed before transforming;
//! this only touches the DC bin, which every feature here excludes.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const DEGENERATE_POWER: f64 = 1e-24;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One-sided magnitude spectrum `|X_k|` for `k = 0..=N/2`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub n: usize,
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn of(x: &[f64]) -> Spectrum {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
        let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
        fft.process(&mut buf);
        let magnitudes = buf[..=n / 2].iter().map(|c| c.norm()).collect();
        Spectrum { n, magnitudes }
    }

    /// `2 |X_{i+1}| / N` for `i = 0..count`.
    pub fn coeffs(&self, count: usize) -> Vec<f64> {
        (1..=count)
            .map(|k| 2.0 * self.magnitudes[k] / self.n as f64)
            .collect()
    }

    pub fn shape(&self, rate_hz: f64) -> SpectralShape {
        let half = self.n / 2;
        let mags = &self.magnitudes[1..=half];
        let power: Vec<f64> = mags.iter().map(|m| m * m).collect();
        let total: f64 = power.iter().sum();
        if total < DEGENERATE_POWER {
            return SpectralShape::default();
        }
        let df = rate_hz / self.n as f64;
        let mut entropy = 0.0;
        let mut centroid = 0.0;
        for (i, &p) in power.iter().enumerate() {
            let p = p / total;
            if p > 0.0 {
                entropy -= p * p.ln();
            }
            centroid += (i + 1) as f64 * df * p;
        }
        let spread: f64 = power
            .iter()
            .enumerate()
            .map(|(i, &p)| ((i + 1) as f64 * df - centroid).powi(2) * p / total)
            .sum();
        let norm = if half > 1 { (half as f64).ln() } else { 1.0 };
        let mag_mean = mags.iter().sum::<f64>() / half as f64;
        let mag_var = mags.iter().map(|m| (m - mag_mean).powi(2)).sum::<f64>() / half as f64;
        SpectralShape {
            entropy: entropy / norm,
            centroid,
            bandwidth: spread.sqrt(),
            mag_std: mag_var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpectralShape {
    /// Normalized spectral entropy in [0, 1].
    pub entropy: f64,
    /// Hz.
    pub centroid: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Population std of the one-sided magnitudes (DC excluded).
    pub mag_std: f64,
}

pub fn fft_coeffs(x: &[f64], count: usize) -> Result<Vec<f64>> {
    if x.len() < 2 * (count + 1) {
        return Err(Error::Precondition(format!(
            "{count} FFT coefficients need at least {} samples, got {}",
            2 * (count + 1),
            x.len()
        )));
    }
    Ok(Spectrum::of(x).coeffs(count))
}

pub fn spectral_shape(x: &[f64], rate_hz: f64) -> Result<SpectralShape> {
    if x.len() < 64 {
        return Err(Error::Precondition(format!(
            "spectral shape needs at least 64 samples, got {}",
            x.len()
        )));
    }
    Ok(Spectrum::of(x).shape(rate_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn on_bin_cosine() {
        let a = 2.5;
        let x: Vec<f64> = (0..900).map(|t| a * (2.0 * PI * 3.0 * t as f64 / 900.0).cos()).collect();
        let c = fft_coeffs(&x, 10).unwrap();
        assert!((c[2] - a).abs() < 1e-9, "{c:?}");
        for (i, v) in c.iter().enumerate().filter(|(i, _)| *i != 2) {
            assert!(v.abs() < 1e-9, "fft_{i} = {v}");
        }
    }

    #[test]
    fn constant_window_is_silent() {
        let x = vec![0.1; 5400];
        assert!(fft_coeffs(&x, 10).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert_eq!(spectral_shape(&x, 30.0).unwrap(), SpectralShape::default());
    }

    #[test]
    fn five_hz_tone_shape() {
        let n = 900;
        let rate = 30.0;
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * 5.0 * t as f64 / rate).sin()).collect();
        let s = spectral_shape(&x, rate).unwrap();
        let bin = rate / n as f64;
        assert!(s.entropy < 0.01, "{s:?}");
        assert!((s.centroid - 5.0).abs() <= bin);
        assert!(s.bandwidth < bin);
    }

    #[test]
    fn preconditions() {
        assert!(fft_coeffs(&[0.0; 21], 10).is_err());
        assert!(fft_coeffs(&[0.0; 22], 10).is_ok());
        assert!(spectral_shape(&[0.0; 63], 30.0).is_err());
    }
}
