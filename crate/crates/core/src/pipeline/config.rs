//! The single JSON document that drives every stage.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::eval::{Averaging, EvalConfig, Protocol};
use crate::features::{FeatureConfig, FeatureSchema};
use crate::learners::{GbdtParams, LearnerConfig};
use crate::select::RfeConfig;
use crate::signal::{CsvSchema, SegmentPlan, WindowSpec};
use crate::synth::ScenarioConfig;

/// Values `selection.target_k` may take outside lenient mode.
pub const STRICT_TARGET_K: [usize; 3] = [10, 15, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Long-format measurement CSV; relative paths resolve against the workdir.
    pub data: PathBuf,
    pub log: PathBuf,
    pub workdir: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data: PathBuf::from("data/measurements.csv"),
            log: PathBuf::from("data/events.csv"),
            workdir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentationConfig {
    pub seg_len_s: f64,
    pub offsets_min: Vec<u32>,
    /// RMS outlier threshold in population standard deviations; `None` keeps every segment.
    pub outlier_k: Option<f64>,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        let plan = SegmentPlan::default();
        Self {
            seg_len_s: plan.seg_len_s,
            offsets_min: plan.offsets_min,
            outlier_k: Some(3.0),
        }
    }
}

impl SegmentationConfig {
    pub fn plan(&self) -> SegmentPlan {
        SegmentPlan {
            seg_len_s: self.seg_len_s,
            offsets_min: self.offsets_min.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    #[default]
    Rfe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub method: SelectionMethod,
    pub target_k: usize,
    pub step: f64,
    pub learner: LearnerConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        let rfe = RfeConfig::default();
        Self {
            method: SelectionMethod::Rfe,
            target_k: rfe.target_k,
            step: rfe.step,
            learner: rfe.learner,
        }
    }
}

impl SelectionConfig {
    pub fn rfe(&self) -> RfeConfig {
        RfeConfig {
            target_k: self.target_k,
            step: self.step,
            learner: self.learner.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceConfig {
    pub smote_k: usize,
    pub mode: Protocol,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            smote_k: 5,
            mode: Protocol::PerFold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub k: usize,
    pub seed: u64,
    pub averaging: Averaging,
    /// Stratified hold-out fraction; replaces k-fold CV when set.
    pub holdout: Option<f64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            averaging: Averaging::Macro,
            holdout: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompatConfig {
    /// Scale and oversample the whole matrix before splitting.
    pub paper_compat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub synth: Option<ScenarioConfig>,
    pub csv: CsvSchema,
    pub segmentation: SegmentationConfig,
    pub windows: WindowSpec,
    pub features: FeatureConfig,
    pub selection: SelectionConfig,
    pub balance: BalanceConfig,
    pub learner: LearnerConfig,
    pub eval: EvalSection,
    pub compat: CompatConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            synth: None,
            csv: CsvSchema::default(),
            segmentation: SegmentationConfig::default(),
            windows: WindowSpec::default(),
            features: FeatureConfig::default(),
            selection: SelectionConfig::default(),
            balance: BalanceConfig::default(),
            learner: LearnerConfig::GbdtLeafwise(GbdtParams::default()),
            eval: EvalSection::default(),
            compat: CompatConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Per-fold protocol selects features inside each fold; global selects once up front.
    pub fn eval_config(&self) -> EvalConfig {
        let protocol = if self.compat.paper_compat { Protocol::Global } else { self.balance.mode };
        EvalConfig {
            k: self.eval.k,
            seed: self.eval.seed,
            averaging: self.eval.averaging,
            protocol,
            scale: true,
            smote_k: Some(self.balance.smote_k),
            select: (protocol == Protocol::PerFold).then(|| self.selection.rfe()),
        }
    }

    pub fn n_features(&self) -> usize {
        FeatureSchema::new(&self.features).total * self.windows.sizes_s.len()
    }
}

/// One problem found in a config, located by a dotted path (`selection.target_k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConfigCheck {
    pub config: Option<PipelineConfig>,
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ConfigCheck {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty() && self.config.is_some()
    }
}

fn v(path: &str, message: impl Into<String>) -> Violation {
    Violation {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and checks a config document. Parse failures yield a single violation.
pub fn check_config_text(text: &str, lenient: bool) -> ConfigCheck {
    let de = &mut serde_json::Deserializer::from_str(text);
    match serde_path_to_error::deserialize::<_, PipelineConfig>(de) {
        Ok(cfg) => {
            let mut check = check_config(&cfg, lenient);
            check.config = Some(cfg);
            check
        }
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let violation = if inner.is_syntax() || inner.is_eof() {
                v("syntax", inner.to_string())
            } else {
                v(&path, inner.to_string())
            };
            ConfigCheck {
                config: None,
                violations: vec![violation],
                warnings: Vec::new(),
            }
        }
    }
}

/// Semantic checks on an already parsed config.
pub fn check_config(cfg: &PipelineConfig, lenient: bool) -> ConfigCheck {
    let mut out = ConfigCheck::default();
    let bad = &mut out.violations;

    let sel = &cfg.selection;
    if !STRICT_TARGET_K.contains(&sel.target_k) {
        let msg = format!("target_k {} is not one of {:?}", sel.target_k, STRICT_TARGET_K);
        if lenient {
            out.warnings.push(v("selection.target_k", msg));
        } else {
            bad.push(v("selection.target_k", msg));
        }
    }
    let n_features = cfg.n_features();
    if sel.target_k == 0 || sel.target_k > n_features {
        bad.push(v(
            "selection.target_k",
            format!("must be in 1..={n_features} (the extracted feature count), got {}", sel.target_k),
        ));
    }
    if !(sel.step > 0.0 && sel.step < 1.0) {
        bad.push(v("selection.step", format!("must be in (0, 1), got {}", sel.step)));
    }
    if let Err(e) = sel.learner.validate() {
        bad.push(v("selection.learner.params", e.to_string()));
    }

    let seg = &cfg.segmentation;
    if !(seg.seg_len_s > 0.0) {
        bad.push(v("segmentation.seg_len_s", "must be positive"));
    }
    if seg.offsets_min.is_empty() {
        bad.push(v("segmentation.offsets_min", "needs at least one offset"));
    }
    if let Some(k) = seg.outlier_k {
        if !(k > 0.0) {
            bad.push(v("segmentation.outlier_k", format!("must be positive, got {k}")));
        }
    }

    let w = &cfg.windows.sizes_s;
    if w.is_empty() {
        bad.push(v("windows.sizes_s", "needs at least one window"));
    }
    if w.windows(2).any(|p| p[1] <= p[0]) {
        bad.push(v("windows.sizes_s", "must be sorted ascending and unique"));
    }
    if let Some(&s) = w.iter().find(|&&s| !(s > 0.0) || s > seg.seg_len_s) {
        bad.push(v("windows.sizes_s", format!("window {s} s must be positive and fit in the {} s segment", seg.seg_len_s)));
    }

    let f = &cfg.features;
    if f.families.is_empty() {
        bad.push(v("features.families", "needs at least one family"));
    }
    for (path, ok) in [
        ("features.n_blocks", f.n_blocks >= 1),
        ("features.n_fft", f.n_fft >= 1),
        ("features.hist_bins", f.hist_bins >= 1),
        ("features.perm_order", f.perm_order >= 2),
        ("features.perm_delay", f.perm_delay >= 1),
        ("features.sampen_m", f.sampen_m >= 1),
        ("features.sampen_r", f.sampen_r > 0.0),
        ("features.dfa_scales", f.dfa_scales >= 3),
        ("features.lags", f.lags.iter().all(|&l| l >= 1)),
    ] {
        if !ok {
            bad.push(v(path, "out of range"));
        }
    }

    if cfg.balance.smote_k == 0 {
        bad.push(v("balance.smote_k", "must be at least 1"));
    }
    if let Err(e) = cfg.learner.validate() {
        bad.push(v("learner.params", e.to_string()));
    }
    if cfg.eval.k < 2 {
        bad.push(v("eval.k", format!("must be at least 2, got {}", cfg.eval.k)));
    }
    if let Some(h) = cfg.eval.holdout {
        if !(h > 0.0 && h < 1.0) {
            bad.push(v("eval.holdout", format!("must be in (0, 1), got {h}")));
        }
    }
    if let Some(s) = &cfg.synth {
        if let Err(e) = s.validate() {
            bad.push(v("synth", e.to_string()));
        }
    }
    out
}
