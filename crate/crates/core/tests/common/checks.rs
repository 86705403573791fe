//! Brute-force checkers shared by the property and acceptance suites.

use gridsense::learners::binning::bin_of;
use gridsense::learners::gbdt::{log_loss, softmax, softmax_grad_hess};
use gridsense::learners::tree::split_gain;
use gridsense::learners::{fit_gbdt_traced, GbdtModel, GbdtParams};
use gridsense::FeatureMatrix;
use rand::Rng;

use super::{gaussian_classes, oracle, random_window, rel_close, rng};

/// Searches same-class original pairs `(p, q)` for a `u` in [0, 1] with `row = p + u (q - p)`,
/// reconstructing `u` independently on every coordinate.
pub fn convex_witness(m: &FeatureMatrix, n_original: usize, row: &[f64], class: usize) -> Option<(usize, usize, f64)> {
    let members: Vec<usize> = (0..n_original).filter(|&i| m.labels[i] == class).collect();
    for &p in &members {
        'pairs: for &q in &members {
            let (a, b) = (&m.rows[p], &m.rows[q]);
            let mut u: Option<f64> = None;
            for j in 0..row.len() {
                let d = b[j] - a[j];
                if d.abs() < 1e-12 {
                    if (row[j] - a[j]).abs() > 1e-9 {
                        continue 'pairs;
                    }
                    continue;
                }
                let uj = (row[j] - a[j]) / d;
                match u {
                    None if (-1e-9..=1.0 + 1e-9).contains(&uj) => u = Some(uj),
                    Some(v) if (v - uj).abs() <= 1e-9 => {}
                    _ => continue 'pairs,
                }
            }
            return Some((p, q, u.unwrap_or(0.0)));
        }
    }
    None
}

/// Highest gain over every (feature, bin) cut of `rows`, binning raw values with the model edges.
pub fn exhaustive_best_gain(
    m: &FeatureMatrix,
    model: &GbdtModel,
    rows: &[u32],
    grad: &[f64],
    hess: &[f64],
) -> Option<f64> {
    let p = &model.params;
    let g: f64 = rows.iter().map(|&r| grad[r as usize]).sum();
    let h: f64 = rows.iter().map(|&r| hess[r as usize]).sum();
    let mut best: Option<f64> = None;
    for (j, edges) in model.bin_edges.iter().enumerate() {
        for b in 0..edges.len() {
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for &r in rows {
                if bin_of(edges, m.rows[r as usize][j]) <= b {
                    gl += grad[r as usize];
                    hl += hess[r as usize];
                    cl += 1;
                }
            }
            let cr = rows.len() - cl;
            if cl < p.min_data_in_leaf || cr < p.min_data_in_leaf {
                continue;
            }
            let gain = split_gain(gl, hl, g - gl, h - hl, p.lambda, p.gamma);
            if best.is_none_or(|v| gain > v) {
                best = Some(gain);
            }
        }
    }
    best
}

/// Checks every split and leaf of a traced fit; returns the number of splits checked.
pub fn check_trace(m: &FeatureMatrix, params: &GbdtParams, seed: u64) -> std::result::Result<usize, String> {
    let (model, traces) = fit_gbdt_traced(m, params, seed).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for t in &traces {
        for s in &t.tree.splits {
            let want = exhaustive_best_gain(m, &model, &s.rows, &t.grad, &t.hess)
                .ok_or_else(|| format!("iteration {} class {}: split without candidates", t.iteration, t.class))?;
            if !rel_close(s.gain, want, 1e-9) && (s.gain - want).abs() > 1e-12 {
                return Err(format!(
                    "iteration {} class {}: chose gain {} but best is {}",
                    t.iteration, t.class, s.gain, want
                ));
            }
            checked += 1;
        }
        for leaf in &t.tree.leaves {
            let g: f64 = leaf.rows.iter().map(|&r| t.grad[r as usize]).sum();
            let h: f64 = leaf.rows.iter().map(|&r| t.hess[r as usize]).sum();
            let want = -g / (h + params.lambda);
            if (leaf.value - want).abs() > 1e-9 {
                return Err(format!("leaf value {} vs {}", leaf.value, want));
            }
        }
    }
    Ok(checked)
}

/// Largest deviation between analytic softmax gradients/hessians and central differences.
pub fn finite_difference_error(seed: u64, n_pairs: usize) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_pairs {
        let k = r.random_range(2..6usize);
        let raw: Vec<f64> = (0..k).map(|_| r.random_range(-4.0..4.0)).collect();
        let label = r.random_range(0..k);
        let p = softmax(&raw);
        let loss = |c: usize, d: f64| {
            let mut s = raw.clone();
            s[c] += d;
            log_loss(&[s], &[label])
        };
        for c in 0..k {
            let (g, h) = softmax_grad_hess(&p, label, c);
            let eps = 1e-5;
            let fd_g = (loss(c, eps) - loss(c, -eps)) / (2.0 * eps);
            let eps_h = 1e-4;
            let fd_h = (loss(c, eps_h) - 2.0 * loss(c, 0.0) + loss(c, -eps_h)) / (eps_h * eps_h);
            worst = worst.max((g - fd_g).abs()).max((h - fd_h).abs());
        }
    }
    worst
}

/// Three-class Gaussian data with 40..200 rows and 2..6 columns.
pub fn dataset(seed: u64) -> FeatureMatrix {
    let n = 40 + (seed as usize * 13) % 160;
    let a = n / 2;
    let b = (n - a) / 2;
    gaussian_classes(seed, &[a, b, n - a - b], 2 + seed as usize % 5, 2, 0.8)
}

/// Feature mismatches against the oracles over `n` seeded windows of length 64..=256.
pub fn oracle_mismatches(n: u64, rate_hz: f64) -> Vec<String> {
    let cfg = gridsense::features::FeatureConfig::default();
    let mut failures = Vec::new();
    for seed in 0..n {
        let len = 64 + (seed as usize * 37) % 193;
        let x = random_window(seed, len);
        let got = gridsense::features::extract_channel(&x, rate_hz, "VA_M", &cfg).unwrap();
        let want = oracle::all_features(&x, rate_hz);
        for (i, (g, w)) in got.iter().zip(&want).enumerate() {
            if !rel_close(*g, *w, 1e-9) {
                failures.push(format!("seed {seed} len {len} feature {i}: {g} vs {w}"));
            }
        }
    }
    failures
}
