mod common;

use common::oracle;
use common::{random_window, rel_close};
use gridsense::features::{
    autocov, dfa_exponent, extract_channel, permutation_entropy, spectral_shape, FeatureConfig, FeatureSchema,
};
use proptest::prelude::*;

const RATE: f64 = 30.0;

fn channel(x: &[f64]) -> Vec<f64> {
    extract_channel(x, RATE, "VA_M", &FeatureConfig::default()).unwrap()
}

fn names() -> Vec<String> {
    FeatureSchema::new(&FeatureConfig::default())
        .names()
        .into_iter()
        .take(oracle::N_FEATURES)
        .map(|n| n.trim_end_matches("_VA_M").replace("_VA_M_", "_"))
        .collect()
}

#[test]
fn schema_order_matches_oracle_layout() {
    let n = names();
    assert_eq!(n.len(), oracle::N_FEATURES);
    assert_eq!(&n[..7], ["mean", "var", "skewness", "kurtosis", "min", "max", "median"]);
    assert_eq!(n[15], "fft_0");
    assert_eq!(n[25], "s_entropy");
    assert_eq!(n[29], "sh_entropy");
    assert_eq!(n[36], "dfa");
    assert_eq!(n[40], "cov_4");
}

#[test]
fn every_feature_matches_its_oracle() {
    let names = names();
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let len = 64 + (seed as usize * 37) % 193;
        let x = random_window(seed, len);
        let got = channel(&x);
        let want = oracle::all_features(&x, RATE);
        for (i, (g, w)) in got.iter().zip(&want).enumerate() {
            if !rel_close(*g, *w, 1e-9) {
                failures.push(format!("seed {seed} len {len} {}: {g} vs {w}", names[i]));
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn oracle_dft_matches_closed_form_sinusoid() {
    // a cosine on bin 3 of a 64-sample window has amplitude 2|X_3|/N = 1
    let x: Vec<f64> = (0..64).map(|t| (2.0 * std::f64::consts::PI * 3.0 * t as f64 / 64.0).cos()).collect();
    let c = oracle::fft_coeffs(&x);
    assert!((c[2] - 1.0).abs() < 1e-12);
    assert!(c.iter().enumerate().all(|(i, v)| i == 2 || v.abs() < 1e-12));
}

#[test]
fn oracle_sample_entropy_on_periodic_signal() {
    // period-3 signal: every length-2 match extends, so A == B
    let x: Vec<f64> = (0..60).map(|i| [0.0, 1.0, 5.0][i % 3]).collect();
    assert_eq!(oracle::sample_entropy(&x), 0.0);
}

fn finite_window() -> impl Strategy<Value = Vec<f64>> {
    (64usize..=256, any::<u64>()).prop_map(|(len, seed)| random_window(seed, len))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extraction_is_deterministic_and_finite(x in finite_window()) {
        let a = channel(&x);
        let b = channel(&x);
        prop_assert_eq!(a.len(), oracle::N_FEATURES);
        prop_assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        prop_assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn permutation_entropy_ignores_positive_affine_maps(x in finite_window(), a in 0.1f64..10.0, b in -50.0f64..50.0) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert_eq!(permutation_entropy(&x, 3, 1).unwrap(), permutation_entropy(&y, 3, 1).unwrap());
    }

    #[test]
    fn spectral_entropy_ignores_scaling(x in finite_window(), a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0]) {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let z: Vec<f64> = x.iter().map(|v| v - m).collect();
        let y: Vec<f64> = z.iter().map(|v| a * v).collect();
        let e1 = spectral_shape(&z, RATE).unwrap().entropy;
        let e2 = spectral_shape(&y, RATE).unwrap().entropy;
        prop_assert!(rel_close(e1, e2, 1e-12), "{} vs {}", e1, e2);
    }

    #[test]
    fn autocorrelation_ignores_affine_maps(x in finite_window(), a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0], b in -50.0f64..50.0) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let lags = [1, 2, 3, 4];
        for (p, q) in autocov(&x, &lags).unwrap().iter().zip(autocov(&y, &lags).unwrap()) {
            prop_assert!((p - q).abs() < 1e-9, "{} vs {}", p, q);
        }
    }

    #[test]
    fn features_stay_in_range(x in finite_window()) {
        let f = channel(&x);
        let n = names();
        let get = |name: &str| f[n.iter().position(|m| m == name).unwrap()];
        for name in ["s_entropy", "p_entropy"] {
            let v = get(name);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v), "{} = {}", name, v);
        }
        let sh = get("sh_entropy");
        prop_assert!((0.0..=4.0 + 1e-12).contains(&sh), "sh_entropy = {}", sh);
        for name in ["var", "energy", "rms", "s_bandw", "samp_entropy"] {
            prop_assert!(get(name) >= 0.0, "{} negative", name);
        }
    }

    #[test]
    fn dfa_is_invariant_to_offset(x in finite_window(), b in -100.0f64..100.0) {
        let y: Vec<f64> = x.iter().map(|v| v + b).collect();
        let (p, q) = (dfa_exponent(&x, 10).unwrap(), dfa_exponent(&y, 10).unwrap());
        prop_assert!((p - q).abs() < 1e-6, "{} vs {}", p, q);
    }
}
