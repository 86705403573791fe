//! Literal reference versions of the 41 per-channel features, in schema order.

use std::collections::HashMap;
use std::f64::consts::PI;

pub const N_FEATURES: usize = 41;

fn mean(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in x {
        s += v;
    }
    s / x.len() as f64
}

/// k-th central moment by direct summation.
fn central_moment(x: &[f64], k: i32) -> f64 {
    let m = mean(x);
    let mut s = 0.0;
    for v in x {
        s += (v - m).powi(k);
    }
    s / x.len() as f64
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

pub fn moments(x: &[f64]) -> [f64; 7] {
    let m2 = central_moment(x, 2);
    let (skew, kurt) = if m2 < 1e-12 {
        (0.0, 0.0)
    } else {
        (central_moment(x, 3) / m2.powf(1.5), central_moment(x, 4) / (m2 * m2) - 3.0)
    };
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    [mean(x), m2, skew, kurt, min, max, median(x)]
}

/// Four blocks, remainder in the last: means then population stds.
pub fn blocks(x: &[f64]) -> Vec<f64> {
    let len = x.len() / 4;
    let parts: Vec<&[f64]> = (0..4)
        .map(|b| if b == 3 { &x[3 * len..] } else { &x[b * len..(b + 1) * len] })
        .collect();
    let mut out: Vec<f64> = parts.iter().map(|p| mean(p)).collect();
    out.extend(parts.iter().map(|p| central_moment(p, 2).sqrt()));
    out
}

/// O(N^2) DFT magnitudes of the mean-removed window, `k = 0..=N/2`.
pub fn dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let angle = -2.0 * PI * (k * t % n) as f64 / n as f64;
                re += (v - m) * angle.cos();
                im += (v - m) * angle.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

pub fn fft_coeffs(x: &[f64]) -> Vec<f64> {
    let mags = dft_magnitudes(x);
    (1..=10).map(|k| 2.0 * mags[k] / x.len() as f64).collect()
}

/// Entropy, centroid, bandwidth and magnitude std over bins `1..=N/2`.
pub fn spectral_shape(x: &[f64], rate_hz: f64) -> [f64; 4] {
    let n = x.len();
    let half = n / 2;
    let mags = &dft_magnitudes(x)[1..=half];
    let total: f64 = mags.iter().map(|m| m * m).sum();
    if total < 1e-24 {
        return [0.0; 4];
    }
    let freq = |i: usize| (i + 1) as f64 * rate_hz / n as f64;
    let p: Vec<f64> = mags.iter().map(|m| m * m / total).collect();
    let entropy: f64 = p.iter().filter(|&&q| q > 0.0).map(|q| -q * q.ln()).sum::<f64>() / (half as f64).ln();
    let centroid: f64 = p.iter().enumerate().map(|(i, q)| freq(i) * q).sum();
    let bandwidth = p
        .iter()
        .enumerate()
        .map(|(i, q)| (freq(i) - centroid).powi(2) * q)
        .sum::<f64>()
        .sqrt();
    [entropy, centroid, bandwidth, central_moment(mags, 2).sqrt()]
}

/// Bits, 16 equal-width bins over `[min, max]`, top edge closed.
pub fn shannon_entropy(x: &[f64]) -> f64 {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return 0.0;
    }
    let w = (hi - lo) / 16.0;
    let mut counts = [0usize; 16];
    for &v in x {
        let mut b = 15;
        for k in 0..16 {
            if v < lo + (k + 1) as f64 * w {
                b = k;
                break;
            }
        }
        counts[b] += 1;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / x.len() as f64;
            -p * p.log2()
        })
        .sum()
}

/// Order 3, delay 1; a pattern is the stable argsort of the embedded vector.
pub fn permutation_entropy(x: &[f64]) -> f64 {
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    let n = x.len() - 2;
    for w in x.windows(3) {
        let mut idx = vec![0, 1, 2];
        idx.sort_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
        *counts.entry(idx).or_default() += 1;
    }
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum();
    h / 6f64.ln()
}

/// m = 2, r = 0.2 std; brute-force pair counting over the first `N - m` templates.
pub fn sample_entropy(x: &[f64]) -> f64 {
    let m = 2;
    let r = 0.2 * central_moment(x, 2).sqrt();
    let t = x.len() - m;
    let matches = |i: usize, j: usize, len: usize| (0..len).all(|k| (x[i + k] - x[j + k]).abs() <= r);
    let (mut a, mut b) = (0u64, 0u64);
    for i in 0..t {
        for j in i + 1..t {
            if matches(i, j, m) {
                b += 1;
                if matches(i, j, m + 1) {
                    a += 1;
                }
            }
        }
    }
    if b == 0 {
        0.0
    } else if a == 0 {
        (t as f64 * (t as f64 - 1.0) / 2.0).ln()
    } else {
        -(a as f64 / b as f64).ln()
    }
}

fn haar(signal: &[f64], levels_left: usize, out: &mut Vec<f64>) {
    if levels_left == 0 {
        return;
    }
    let half = signal.len() / 2;
    let mut approx = Vec::with_capacity(half);
    let mut energy = 0.0;
    for i in 0..half {
        let (a, b) = (signal[2 * i], signal[2 * i + 1]);
        let detail = (a - b) / 2f64.sqrt();
        energy += detail * detail;
        approx.push((a + b) / 2f64.sqrt());
    }
    out.push(energy);
    haar(&approx, levels_left - 1, out);
}

/// Shannon entropy (nats) of per-level Haar detail energy over the latest `2^p` samples.
pub fn wavelet_entropy(x: &[f64]) -> f64 {
    let mut p = 0;
    while 1usize << (p + 1) <= x.len() {
        p += 1;
    }
    let levels = (p - 1).min(6);
    let mut energies = Vec::new();
    haar(&x[x.len() - (1 << p)..], levels, &mut energies);
    let total: f64 = energies.iter().sum();
    if total < 1e-24 {
        return 0.0;
    }
    energies
        .iter()
        .filter(|&&e| e > 0.0)
        .map(|e| {
            let q = e / total;
            -q * q.ln()
        })
        .sum()
}

pub fn energy(x: &[f64]) -> [f64; 3] {
    let e: f64 = x.iter().map(|v| v * v).sum();
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    [e, (e / x.len() as f64).sqrt(), hi - lo]
}

/// Least-squares line `y = a + b t` via the normal equations; returns the residual sum of squares.
fn linear_rss(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let (mut st, mut stt, mut sy, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (t, &v) in y.iter().enumerate() {
        let t = t as f64;
        st += t;
        stt += t * t;
        sy += v;
        sty += t * v;
    }
    let b = (n * sty - st * sy) / (n * stt - st * st);
    let a = (sy - b * st) / n;
    y.iter().enumerate().map(|(t, &v)| (v - a - b * t as f64).powi(2)).sum()
}

/// DFA-1 with 10 log-spaced box sizes in `[4, N/4]`.
pub fn dfa(x: &[f64]) -> f64 {
    let n = x.len();
    let m = mean(x);
    let mut profile = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in x {
        acc += v - m;
        profile.push(acc);
    }
    let (lo, hi) = (4f64, (n / 4) as f64);
    let mut scales: Vec<usize> = Vec::new();
    for i in 0..10 {
        let s = (lo * (hi / lo).powf(i as f64 / 9.0)).round() as usize;
        if scales.last() != Some(&s) {
            scales.push(s);
        }
    }
    let mut pts = Vec::new();
    for &s in &scales {
        let boxes = n / s;
        let rss: f64 = (0..boxes).map(|b| linear_rss(&profile[b * s..(b + 1) * s])).sum();
        let f = (rss / (boxes * s) as f64).sqrt().max(1e-12);
        pts.push(((s as f64).ln(), f.ln()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Lags 1..=4: biased autocovariance over the population variance.
pub fn autocorr(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    let n = x.len();
    let var = central_moment(x, 2);
    (1..=4)
        .map(|k| {
            if var < 1e-12 {
                return 0.0;
            }
            let mut s = 0.0;
            for t in 0..n - k {
                s += (x[t] - m) * (x[t + k] - m);
            }
            s / n as f64 / var
        })
        .collect()
}

pub fn all_features(x: &[f64], rate_hz: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(N_FEATURES);
    out.extend(moments(x));
    out.extend(blocks(x));
    out.extend(fft_coeffs(x));
    out.extend(spectral_shape(x, rate_hz));
    out.extend([shannon_entropy(x), permutation_entropy(x), sample_entropy(x), wavelet_entropy(x)]);
    out.extend(energy(x));
    out.push(dfa(x));
    out.extend(autocorr(x));
    out
}
