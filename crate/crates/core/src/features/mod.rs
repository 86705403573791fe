//! Per-channel feature schema (41 features × VA_M/IA_M = 82 per scale) and the
//! single- and multi-scale extractors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{scale_tag, slice_windows, Class, Segment, WindowSpec, CURRENT, VOLTAGE};

pub mod dfa;
pub mod entropy;
pub mod spectral;
pub mod stats;

pub use dfa::{dfa_exponent, dfa_fit, DfaFit};
pub use entropy::{permutation_entropy, sample_entropy, shannon_entropy, wavelet_entropy};
pub use spectral::{fft_coeffs, spectral_shape, SpectralShape, Spectrum};
pub use stats::{autocov, energy_features, stats_basic, stats_blocks, BasicStats, BlockStats, EnergyFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TimeStats,
    Blocks,
    Fft,
    SpectralShape,
    Information,
    Energy,
    Dynamics,
    Autocov,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::TimeStats,
        Family::Blocks,
        Family::Fft,
        Family::SpectralShape,
        Family::Information,
        Family::Energy,
        Family::Dynamics,
        Family::Autocov,
    ];
}

/// Extractor parameters. Defaults produce the 82-feature schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub families: Vec<Family>,
    pub n_blocks: usize,
    pub n_fft: usize,
    pub hist_bins: usize,
    pub perm_order: usize,
    pub perm_delay: usize,
    pub sampen_m: usize,
    pub sampen_r: f64,
    pub dfa_scales: usize,
    pub lags: Vec<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            families: Family::ALL.to_vec(),
            n_blocks: 4,
            n_fft: 10,
            hist_bins: 16,
            perm_order: 3,
            perm_delay: 1,
            sampen_m: 2,
            sampen_r: 0.2,
            dfa_scales: 10,
            lags: vec![1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub family: Family,
}

/// Ordered feature names for both channels at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub channels: Vec<String>,
    pub features: Vec<SchemaEntry>,
    pub per_channel: usize,
    pub total: usize,
}

fn base_names(family: Family, cfg: &FeatureConfig) -> Vec<(String, Option<usize>)> {
    let plain = |names: &[&str]| names.iter().map(|n| (n.to_string(), None)).collect::<Vec<_>>();
    match family {
        Family::TimeStats => plain(&["mean", "var", "skewness", "kurtosis", "min", "max", "median"]),
        Family::Blocks => (0..cfg.n_blocks)
            .map(|i| ("mean".to_string(), Some(i)))
            .chain((0..cfg.n_blocks).map(|i| ("std".to_string(), Some(i))))
            .collect(),
        Family::Fft => (0..cfg.n_fft).map(|i| ("fft".to_string(), Some(i))).collect(),
        Family::SpectralShape => plain(&["s_entropy", "s_centroid", "s_bandw", "m_sp_std"]),
        Family::Information => plain(&["sh_entropy", "p_entropy", "samp_entropy", "w_entropy"]),
        Family::Energy => plain(&["energy", "rms", "ptp"]),
        Family::Dynamics => plain(&["dfa"]),
        Family::Autocov => cfg.lags.iter().map(|&k| ("cov".to_string(), Some(k))).collect(),
    }
}

fn feature_name(base: &str, channel: &str, index: Option<usize>) -> String {
    match index {
        Some(i) => format!("{base}_{channel}_{i}"),
        None => format!("{base}_{channel}"),
    }
}

impl FeatureSchema {
    pub fn new(cfg: &FeatureConfig) -> Self {
        let channels = vec![VOLTAGE.to_string(), CURRENT.to_string()];
        let mut features = Vec::new();
        for ch in &channels {
            for &family in &cfg.families {
                for (base, idx) in base_names(family, cfg) {
                    features.push(SchemaEntry {
                        name: feature_name(&base, ch, idx),
                        family,
                    });
                }
            }
        }
        let total = features.len();
        FeatureSchema {
            channels,
            per_channel: total / 2,
            features,
            total,
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }
}

/// Named feature values for one segment at one or more scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// Window sizes (s) that contributed, ascending.
    pub scales: Vec<f64>,
    pub segment_id: String,
    pub terminal_id: String,
    pub label: Class,
    pub event_index: usize,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Runs every configured extractor on one channel window, in schema order.
pub fn extract_channel(x: &[f64], rate_hz: f64, channel: &str, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    let wrap = |feature: &'static str| move |e: Error| Error::feature(feature, channel, e.to_string());
    let mut out = Vec::with_capacity(41);
    let mut spectrum: Option<Spectrum> = None;

    for &family in &cfg.families {
        match family {
            Family::TimeStats => {
                let s = stats_basic(x).map_err(wrap("mean"))?;
                out.extend([s.mean, s.var, s.skewness, s.kurtosis, s.min, s.max, s.median]);
            }
            Family::Blocks => {
                let b = stats_blocks(x, cfg.n_blocks).map_err(wrap("std"))?;
                out.extend(b.means);
                out.extend(b.stds);
            }
            Family::Fft => {
                if x.len() < 2 * (cfg.n_fft + 1) {
                    return Err(Error::feature("fft", channel, format!("needs at least {} samples, got {}", 2 * (cfg.n_fft + 1), x.len())));
                }
                out.extend(spectrum.get_or_insert_with(|| Spectrum::of(x)).coeffs(cfg.n_fft));
            }
            Family::SpectralShape => {
                if x.len() < 64 {
                    return Err(Error::feature("s_entropy", channel, format!("needs at least 64 samples, got {}", x.len())));
                }
                let s = spectrum.get_or_insert_with(|| Spectrum::of(x)).shape(rate_hz);
                out.extend([s.entropy, s.centroid, s.bandwidth, s.mag_std]);
            }
            Family::Information => {
                out.push(shannon_entropy(x, cfg.hist_bins).map_err(wrap("sh_entropy"))?);
                out.push(permutation_entropy(x, cfg.perm_order, cfg.perm_delay).map_err(wrap("p_entropy"))?);
                out.push(sample_entropy(x, cfg.sampen_m, cfg.sampen_r).map_err(wrap("samp_entropy"))?);
                out.push(wavelet_entropy(x).map_err(wrap("w_entropy"))?);
            }
            Family::Energy => {
                let e = energy_features(x).map_err(wrap("energy"))?;
                out.extend([e.energy, e.rms, e.ptp]);
            }
            Family::Dynamics => out.push(dfa_exponent(x, cfg.dfa_scales).map_err(wrap("dfa"))?),
            Family::Autocov => out.extend(autocov(x, &cfg.lags).map_err(wrap("cov"))?),
        }
    }
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::feature("any", channel, format!("non-finite value at schema position {i}")));
    }
    Ok(out)
}

/// The 82 features of one segment over its trailing `size_s` window. Names carry no scale suffix.
pub fn extract_single_scale(segment: &Segment, size_s: f64, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let spec = WindowSpec::single(size_s);
    let windows = slice_windows(segment, &spec)?;
    let w = windows.windows[0];
    let schema = FeatureSchema::new(cfg);
    let mut values = Vec::with_capacity(schema.total);
    for (channel, x) in w.channels() {
        values.extend(extract_channel(x, segment.rate_hz, channel, cfg)?);
    }
    Ok(FeatureVector {
        names: schema.names(),
        values,
        scales: vec![size_s],
        segment_id: segment.id(),
        terminal_id: segment.terminal_id.clone(),
        label: segment.label.class,
        event_index: segment.event_index,
    })
}

/// Column names produced by [`extract_multiscale`], in order.
pub fn multiscale_names(spec: &WindowSpec, cfg: &FeatureConfig) -> Vec<String> {
    let names = FeatureSchema::new(cfg).names();
    spec.sizes_s
        .iter()
        .flat_map(|&size| {
            let tag = scale_tag(size);
            names.iter().map(move |n| format!("{n}__w{tag}"))
        })
        .collect()
}

/// Concatenates the single-scale vectors for every window in `spec`, suffixing names with `__w{size}`.
pub fn extract_multiscale(segment: &Segment, spec: &WindowSpec, cfg: &FeatureConfig) -> Result<FeatureVector> {
    // Validates every size up front so a short segment fails before any extraction.
    slice_windows(segment, spec)?;
    let mut names = Vec::new();
    let mut values = Vec::new();
    for &size in &spec.sizes_s {
        let v = extract_single_scale(segment, size, cfg)?;
        let tag = scale_tag(size);
        names.extend(v.names.into_iter().map(|n| format!("{n}__w{tag}")));
        values.extend(v.values);
    }
    Ok(FeatureVector {
        names,
        values,
        scales: spec.sizes_s.clone(),
        segment_id: segment.id(),
        terminal_id: segment.terminal_id.clone(),
        label: segment.label.class,
        event_index: segment.event_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_has_82_unique_names() {
        let s = FeatureSchema::new(&FeatureConfig::default());
        assert_eq!(s.total, 82);
        assert_eq!(s.per_channel, 41);
        let mut names = s.names();
        for expected in ["dfa_VA_M", "cov_IA_M_2", "s_bandw_IA_M", "m_sp_std_IA_M", "w_entropy_VA_M", "std_VA_M_3", "mean_IA_M_0", "mean_IA_M", "skewness_VA_M", "rms_IA_M"] {
            assert!(names.iter().any(|n| n == expected), "{expected} missing");
        }
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 82);
    }

    #[test]
    fn family_override_shrinks_schema() {
        let cfg = FeatureConfig {
            families: vec![Family::Energy, Family::Dynamics],
            ..FeatureConfig::default()
        };
        let s = FeatureSchema::new(&cfg);
        assert_eq!(s.names(), vec!["energy_VA_M", "rms_VA_M", "ptp_VA_M", "dfa_VA_M", "energy_IA_M", "rms_IA_M", "ptp_IA_M", "dfa_IA_M"]);
    }
}
