//! Information-theoretic window features: histogram, ordinal-pattern,
//! template-matching and Haar-wavelet entropies.

use crate::error::{Error, Result};
use crate::features::stats::std_dev;

const DEGENERATE_ENERGY: f64 = 1e-24;

/// Shannon entropy in bits of an equal-width histogram over `[min, max]`.
pub fn shannon_entropy(x: &[f64], n_bins: usize) -> Result<f64> {
    if n_bins == 0 || x.len() < n_bins {
        return Err(Error::Precondition(format!(
            "shannon entropy with {n_bins} bins needs at least that many samples, got {}",
            x.len()
        )));
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; n_bins];
    for &v in x {
        let b = ((v - lo) / range * n_bins as f64) as usize;
        counts[b.min(n_bins - 1)] += 1;
    }
    let n = x.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

/// Code of the ordinal pattern of `x[start], x[start+delay], ...`; ties rank the earlier sample lower.
fn ordinal_code(x: &[f64], start: usize, order: usize, delay: usize) -> usize {
    let mut code = 0;
    for i in 0..order {
        let xi = x[start + i * delay];
        let rank = (0..order)
            .filter(|&j| {
                let xj = x[start + j * delay];
                xj < xi || (xj == xi && j < i)
            })
            .count();
        code = code * order + rank;
    }
    code
}

/// Permutation entropy normalized by `ln(order!)`.
pub fn permutation_entropy(x: &[f64], order: usize, delay: usize) -> Result<f64> {
    if order < 2 || delay < 1 {
        return Err(Error::Precondition(format!(
            "permutation entropy needs order >= 2 and delay >= 1, got {order}/{delay}"
        )));
    }
    let span = (order - 1) * delay;
    if x.len() < span + 2 {
        return Err(Error::Precondition(format!(
            "permutation entropy of order {order}, delay {delay} needs at least {} samples",
            span + 2
        )));
    }
    let n_vectors = x.len() - span;
    let mut counts = vec![0usize; order.pow(order as u32)];
    for start in 0..n_vectors {
        counts[ordinal_code(x, start, order, delay)] += 1;
    }
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n_vectors as f64;
            -p * p.ln()
        })
        .sum();
    let log_fact: f64 = (2..=order).map(|k| (k as f64).ln()).sum();
    Ok(h / log_fact)
}

/// Sample entropy with tolerance `r_mult * std` (Chebyshev distance, inclusive).
///
/// Candidate pairs are found by sorting templates on their first sample, which
/// prunes pairs that cannot match without changing which pairs are counted.
pub fn sample_entropy(x: &[f64], m: usize, r_mult: f64) -> Result<f64> {
    if x.len() < 16 {
        return Err(Error::Precondition(format!(
            "sample entropy needs at least 16 samples, got {}",
            x.len()
        )));
    }
    if m == 0 || m + 1 >= x.len() {
        return Err(Error::Precondition(format!("invalid template length {m}")));
    }
    let r = r_mult * std_dev(x);
    let templates = x.len() - m;
    let mut order: Vec<usize> = (0..templates).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));

    let (mut b_count, mut a_count) = (0u64, 0u64);
    for (pos, &i) in order.iter().enumerate() {
        let xi = x[i];
        for &j in &order[pos + 1..] {
            if x[j] - xi > r {
                break;
            }
            if (1..m).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                b_count += 1;
                if (x[i + m] - x[j + m]).abs() <= r {
                    a_count += 1;
                }
            }
        }
    }
    Ok(sampen_from_counts(a_count, b_count, templates))
}

pub(crate) fn sampen_from_counts(a: u64, b: u64, templates: usize) -> f64 {
    if b == 0 {
        0.0
    } else if a == 0 {
        let pairs = templates as f64 * (templates as f64 - 1.0) / 2.0;
        pairs.ln()
    } else {
        // + 0.0 folds -0.0 (a == b) into 0.0
        -(a as f64 / b as f64).ln() + 0.0
    }
}

/// Number of Haar levels and the power-of-two suffix length used for `n` samples.
pub fn haar_geometry(n: usize) -> (usize, usize) {
    let p = usize::BITS as usize - 1 - n.leading_zeros() as usize;
    ((p - 1).min(6), 1 << p)
}

/// Detail energy per Haar level, finest first, over the most recent `2^p` samples.
pub fn haar_detail_energies(x: &[f64]) -> Vec<f64> {
    let (levels, len) = haar_geometry(x.len());
    let mut approx: Vec<f64> = x[x.len() - len..].to_vec();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut energies = Vec::with_capacity(levels);
    for _ in 0..levels {
        let mut next = Vec::with_capacity(approx.len() / 2);
        let mut e = 0.0;
        for pair in approx.chunks_exact(2) {
            let d = (pair[0] - pair[1]) * s;
            e += d * d;
            next.push((pair[0] + pair[1]) * s);
        }
        energies.push(e);
        approx = next;
    }
    energies
}

/// Shannon entropy (nats) of the relative Haar detail energy per level.
pub fn wavelet_entropy(x: &[f64]) -> Result<f64> {
    if x.len() < 64 {
        return Err(Error::Precondition(format!(
            "wavelet entropy needs at least 64 samples, got {}",
            x.len()
        )));
    }
    let energies = haar_detail_energies(x);
    let total: f64 = energies.iter().sum();
    if total < DEGENERATE_ENERGY {
        return Ok(0.0);
    }
    Ok(energies
        .iter()
        .filter(|&&e| e > 0.0)
        .map(|&e| {
            let p = e / total;
            -p * p.ln()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_cases() {
        let uniform: Vec<f64> = (0..160).map(|i| (i % 16) as f64).collect();
        assert!((shannon_entropy(&uniform, 16).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(shannon_entropy(&[2.0; 100], 16).unwrap(), 0.0);
        let split: Vec<f64> = [0.0; 8].iter().chain([1.0; 8].iter()).copied().collect();
        assert_eq!(shannon_entropy(&split, 16).unwrap(), 1.0);
        assert!(shannon_entropy(&[1.0; 15], 16).is_err());
    }

    #[test]
    fn increasing_sequence_has_one_pattern() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(permutation_entropy(&x, 3, 1).unwrap(), 0.0);
    }

    #[test]
    fn ties_rank_earlier_lower() {
        // [1,1,1] must map to the identity pattern, same as [1,2,3].
        assert_eq!(ordinal_code(&[1.0, 1.0, 1.0], 0, 3, 1), ordinal_code(&[1.0, 2.0, 3.0], 0, 3, 1));
        assert_eq!(permutation_entropy(&[4.0; 20], 3, 1).unwrap(), 0.0);
    }

    #[test]
    fn period_three_pattern_entropy() {
        // [1,3,2] repeating: vectors cycle through (1,3,2), (3,2,1), (2,1,3), three
        // distinct patterns; 30 samples give 28 vectors split 10/9/9.
        let x: Vec<f64> = (0..30).map(|i| [1.0, 3.0, 2.0][i % 3]).collect();
        let p: [f64; 3] = [10.0 / 28.0, 9.0 / 28.0, 9.0 / 28.0];
        let h: f64 = -p.iter().map(|v| v * v.ln()).sum::<f64>() / 6f64.ln();
        assert!((permutation_entropy(&x, 3, 1).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_entropy_is_zero() {
        assert_eq!(sample_entropy(&[0.3; 64], 2, 0.2).unwrap(), 0.0);
        assert!(sample_entropy(&[0.3; 15], 2, 0.2).is_err());
    }

    #[test]
    fn sampen_caps() {
        assert_eq!(sampen_from_counts(0, 0, 10), 0.0);
        assert_eq!(sampen_from_counts(0, 3, 10), 45f64.ln());
        assert_eq!(sampen_from_counts(1, 2, 10), 2f64.ln());
    }

    #[test]
    fn haar_geometry_levels() {
        assert_eq!(haar_geometry(64), (5, 64));
        assert_eq!(haar_geometry(900), (6, 512));
        assert_eq!(haar_geometry(5400), (6, 4096));
    }

    #[test]
    fn alternating_signal_lives_at_level_one() {
        let x: Vec<f64> = (0..256).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e = haar_detail_energies(&x);
        assert!((e[0] - 256.0).abs() < 1e-9);
        assert!(e[1..].iter().all(|&v| v.abs() < 1e-20));
        assert!(wavelet_entropy(&x).unwrap() < 0.05);
        assert_eq!(wavelet_entropy(&[1.5; 128]).unwrap(), 0.0);
    }
}
