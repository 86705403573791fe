//! End-to-end stages over in-memory data. [`stages`] wraps these with workdir
//! artifacts for the command-line tool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{cross_validate, holdout, ConfusionSummary, EvalReport, Metrics};
use crate::features::{extract_multiscale, FeatureVector};
use crate::learners::Model;
use crate::matrix::FeatureMatrix;
use crate::select::{rfe, SelectionResult};
use crate::signal::{
    reject_outlier_segments, scale_tag, segment_by_events, DisturbanceLog, DroppedSegment, MinMaxParams, PmuChannel,
    Segment,
};

pub mod config;
pub mod stages;
pub mod svg;

pub use config::{check_config, check_config_text, ConfigCheck, PipelineConfig, Violation};

pub const REPORT_SCHEMA_VERSION: u64 = 1;

/// Segments every event and applies RMS outlier rejection.
pub fn build_segments(
    channels: &[PmuChannel],
    log: &DisturbanceLog,
    cfg: &PipelineConfig,
) -> Result<(Vec<Segment>, Vec<DroppedSegment>)> {
    let segments = segment_by_events(channels, log, &cfg.segmentation.plan())?;
    if segments.is_empty() {
        return Err(Error::Segmentation("no segment is covered by the data".into()));
    }
    match cfg.segmentation.outlier_k {
        Some(k) if segments.len() >= 2 => reject_outlier_segments(segments, k),
        _ => Ok((segments, Vec::new())),
    }
}

/// Multi-scale feature matrix, one row per segment in input order.
pub fn extract_features(segments: &[Segment], cfg: &PipelineConfig) -> Result<FeatureMatrix> {
    let vectors: Vec<FeatureVector> = segments
        .par_iter()
        .map(|s| {
            extract_multiscale(s, &cfg.windows, &cfg.features)
                .map_err(|e| Error::Precondition(format!("segment {}: {e}", s.id())))
        })
        .collect::<Result<_>>()?;
    FeatureMatrix::from_vectors(&vectors)
}

/// Columns extracted from the `size_s` window.
pub fn scale_subset(m: &FeatureMatrix, size_s: f64) -> Result<FeatureMatrix> {
    let cols = m.columns_with_suffix(&format!("__w{}", scale_tag(size_s)));
    if cols.is_empty() {
        return Err(Error::Precondition(format!("no columns for the {size_s} s window")));
    }
    m.select_columns(&cols)
}

fn scaled(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    let all: Vec<usize> = (0..m.len()).collect();
    Ok(MinMaxParams::fit(m, &all)?.transform(m))
}

/// RFE on the min-max scaled matrix, seeded with the evaluation seed.
pub fn select_features(m: &FeatureMatrix, cfg: &PipelineConfig) -> Result<SelectionResult> {
    rfe(&scaled(m)?, &cfg.selection.rfe(), cfg.eval.seed)
}

/// Cross-validates (or hold-out tests) the learner. The per-fold protocol
/// reselects from all of `m`'s columns inside each fold; the global protocol
/// evaluates `selected` as chosen on every row.
pub fn evaluate_selected(m: &FeatureMatrix, selected: &[String], cfg: &PipelineConfig) -> Result<EvalReport> {
    let ecfg = cfg.eval_config();
    let sub = if ecfg.select.is_some() { m.clone() } else { m.select_columns(selected)? };
    match cfg.eval.holdout {
        Some(f) => holdout(&sub, &cfg.learner, &ecfg, f),
        None => cross_validate(&sub, &cfg.learner, &ecfg),
    }
}

/// Scaler plus model fitted on every row (scaled, then oversampled).
pub fn train_final(m: &FeatureMatrix, selected: &[String], cfg: &PipelineConfig) -> Result<(Model, MinMaxParams)> {
    let sub = m.select_columns(selected)?;
    let all: Vec<usize> = (0..sub.len()).collect();
    let scaler = MinMaxParams::fit(&sub, &all)?;
    let (balanced, _) = crate::balance::smote(&scaler.transform(&sub), cfg.balance.smote_k, cfg.eval.seed)?;
    Ok((cfg.learner.fit(&balanced, cfg.eval.seed)?, scaler))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u64,
    pub config: PipelineConfig,
    pub seed: u64,
    pub features: Vec<String>,
    pub evaluation: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleCase {
    /// `30`, `60`, `180` or `30+60+180`.
    pub name: String,
    pub scales: Vec<f64>,
    pub seed: u64,
    pub features: Vec<String>,
    pub mean: Metrics,
    pub std: Metrics,
    pub confusion: ConfusionSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u64,
    pub config: PipelineConfig,
    pub seed: u64,
    /// Every case ran with the same selection, fold and learner seeds.
    pub identical_seeds: bool,
    pub cases: Vec<ScaleCase>,
}

impl Comparison {
    pub fn case(&self, name: &str) -> Option<&ScaleCase> {
        self.cases.iter().find(|c| c.name == name)
    }
}

fn run_case(m: &FeatureMatrix, scales: &[f64], cfg: &PipelineConfig) -> Result<ScaleCase> {
    let name = scales.iter().map(|&s| scale_tag(s)).collect::<Vec<_>>().join("+");
    let mut cols = Vec::new();
    for &s in scales {
        cols.extend(scale_subset(m, s)?.columns);
    }
    // keep the matrix's column order
    let cols: Vec<String> = m.columns.iter().filter(|c| cols.contains(c)).cloned().collect();
    let sub = m.select_columns(&cols)?;
    let selection = select_features(&sub, cfg).map_err(|e| Error::Selection(format!("case {name}: {e}")))?;
    let report = evaluate_selected(&sub, &selection.selected, cfg)?;
    Ok(ScaleCase {
        name,
        scales: scales.to_vec(),
        seed: cfg.eval.seed,
        features: selection.selected,
        mean: report.mean,
        std: report.std,
        confusion: report.confusion,
    })
}

/// Each configured window alone, then all windows together, under identical seeds.
pub fn compare_scales(m: &FeatureMatrix, cfg: &PipelineConfig) -> Result<Comparison> {
    let mut sets: Vec<Vec<f64>> = cfg.windows.sizes_s.iter().map(|&s| vec![s]).collect();
    if cfg.windows.sizes_s.len() > 1 {
        sets.push(cfg.windows.sizes_s.clone());
    }
    let cases: Vec<ScaleCase> = sets.iter().map(|s| run_case(m, s, cfg)).collect::<Result<_>>()?;
    let identical_seeds = cases.iter().all(|c| c.seed == cfg.eval.seed);
    Ok(Comparison {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        seed: cfg.eval.seed,
        identical_seeds,
        cases,
    })
}
