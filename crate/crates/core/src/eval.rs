//! Stratified cross-validation, hold-out evaluation and confusion-matrix metrics.
//!
//! Default mode fits min-max scaling and SMOTE on each training fold only.
//! With `EvalConfig::select` set it also runs RFE on each scaled training fold.
//! `Protocol::Global` applies scaling and SMOTE to the whole matrix before
//! splitting, which lets synthetic and scaled-with-test rows leak into
//! evaluation; it exists only for comparison with that protocol.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::smote;
use crate::error::{Error, Result};
use crate::learners::LearnerConfig;
use crate::matrix::FeatureMatrix;
use crate::select::{rfe, RfeConfig};
use crate::signal::MinMaxParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Macro,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    #[default]
    PerFold,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub k: usize,
    pub seed: u64,
    pub averaging: Averaging,
    pub protocol: Protocol,
    pub scale: bool,
    /// SMOTE neighbours; `None` disables oversampling.
    pub smote_k: Option<usize>,
    /// RFE on each training fold; ignored under `Protocol::Global`.
    pub select: Option<RfeConfig>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            averaging: Averaging::Macro,
            protocol: Protocol::PerFold,
            scale: true,
            smote_k: Some(5),
            select: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    fn map(values: &[Metrics], f: impl Fn(&[f64]) -> f64) -> Metrics {
        let col = |g: fn(&Metrics) -> f64| f(&values.iter().map(g).collect::<Vec<_>>());
        Metrics {
            accuracy: col(|m| m.accuracy),
            precision: col(|m| m.precision),
            recall: col(|m| m.recall),
            f1: col(|m| m.f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClass {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Oversampled rows in the test fold; zero under the per-fold protocol.
    pub n_test_synthetic: usize,
    /// Columns chosen on this fold's training rows; empty without per-fold selection.
    pub features: Vec<String>,
    pub metrics: Metrics,
    pub confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    /// Summed over folds; rows are true classes.
    pub counts: Vec<Vec<u64>>,
    pub row_normalized: Vec<Vec<f64>>,
    /// Classes with no true rows; their normalized row is all zeros.
    pub empty_rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub learner: LearnerConfig,
    pub config: EvalConfig,
    pub seed: u64,
    pub classes: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub mean: Metrics,
    /// Sample standard deviation (n - 1) across folds; zero for a single fold.
    pub std: Metrics,
    pub confusion: ConfusionSummary,
}

/// Test-row indices per fold. Each class is shuffled, then dealt round-robin.
pub fn stratified_kfold(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Evaluation(format!("k must be at least 2, got {k}")));
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some((c, rows)) = by_class.iter().enumerate().find(|(_, r)| !r.is_empty() && r.len() < k) {
        return Err(Error::Evaluation(format!(
            "class {c} has {} rows, fewer than k = {k}",
            rows.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for rows in &mut by_class {
        rows.shuffle(&mut rng);
        for &r in rows.iter() {
            folds[next % k].push(r);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Vec<Vec<u64>>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Evaluation(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut cm = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Evaluation(format!("label {} is not one of {n_classes} classes", t.max(p))));
        }
        cm[t][p] += 1;
    }
    Ok(cm)
}

pub fn row_normalize(cm: &[Vec<u64>]) -> Vec<Vec<f64>> {
    cm.iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&v| if total > 0 { v as f64 / total as f64 } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Per-class precision, recall and F1 (zero where undefined) from a confusion
/// matrix of counts or row-normalized rates.
pub fn per_class(cm: &[Vec<f64>]) -> PerClass {
    let k = cm.len();
    let support: Vec<f64> = cm.iter().map(|r| r.iter().sum()).collect();
    let predicted: Vec<f64> = (0..k).map(|c| cm.iter().map(|r| r[c]).sum()).collect();
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let precision: Vec<f64> = (0..k).map(|c| ratio(cm[c][c], predicted[c])).collect();
    let recall: Vec<f64> = (0..k).map(|c| ratio(cm[c][c], support[c])).collect();
    let f1 = precision
        .iter()
        .zip(&recall)
        .map(|(&p, &r)| ratio(2.0 * p * r, p + r))
        .collect();
    PerClass {
        precision,
        recall,
        f1,
        support,
    }
}

/// Averaged metrics. Macro weights every class equally.
pub fn metrics_from_confusion(cm: &[Vec<f64>], averaging: Averaging) -> Result<Metrics> {
    let k = cm.len();
    if k == 0 || cm.iter().any(|r| r.len() != k) {
        return Err(Error::Evaluation("confusion matrix must be square and non-empty".into()));
    }
    let pc = per_class(cm);
    let total: f64 = pc.support.iter().sum();
    let correct: f64 = (0..k).map(|c| cm[c][c]).sum();
    let weights: Vec<f64> = match averaging {
        Averaging::Macro => vec![1.0 / k as f64; k],
        Averaging::Weighted => pc
            .support
            .iter()
            .map(|&s| if total > 0.0 { s / total } else { 0.0 })
            .collect(),
    };
    let avg = |v: &[f64]| v.iter().zip(&weights).map(|(a, w)| a * w).sum();
    Ok(Metrics {
        accuracy: if total > 0.0 { correct / total } else { 0.0 },
        precision: avg(&pc.precision),
        recall: avg(&pc.recall),
        f1: avg(&pc.f1),
    })
}

pub fn counts_to_f64(cm: &[Vec<u64>]) -> Vec<Vec<f64>> {
    cm.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(fold as u64 + 1)
}

/// Scales and oversamples `m` as a whole (the global protocol's preprocessing).
fn prepare_global(m: &FeatureMatrix, cfg: &EvalConfig) -> Result<FeatureMatrix> {
    let mut out = m.clone();
    if cfg.scale {
        let all: Vec<usize> = (0..m.len()).collect();
        out = MinMaxParams::fit(&out, &all)?.transform(&out);
    }
    if let Some(k) = cfg.smote_k {
        out = smote(&out, k, cfg.seed)?.0;
    }
    Ok(out)
}

fn run_fold(
    m: &FeatureMatrix,
    learner: &LearnerConfig,
    cfg: &EvalConfig,
    fold: usize,
    test: &[usize],
    per_fold_prep: bool,
) -> Result<FoldResult> {
    let mut is_test = vec![false; m.len()];
    for &i in test {
        is_test[i] = true;
    }
    let train_idx: Vec<usize> = (0..m.len()).filter(|&i| !is_test[i]).collect();
    let mut train = m.subset_rows(&train_idx);
    let mut test_m = m.subset_rows(test);
    let seed = fold_seed(cfg.seed, fold);
    let mut features = Vec::new();
    if per_fold_prep {
        if cfg.scale {
            let all: Vec<usize> = (0..train.len()).collect();
            let params = MinMaxParams::fit(&train, &all)?;
            train = params.transform(&train);
            test_m = params.transform(&test_m);
        }
        if let Some(sel) = &cfg.select {
            features = rfe(&train, sel, seed)?.selected;
            train = train.select_columns(&features)?;
            test_m = test_m.select_columns(&features)?;
        }
        if let Some(k) = cfg.smote_k {
            train = smote(&train, k, seed)?.0;
        }
    }
    let model = learner.fit(&train, seed)?;
    let pred = model.predict_matrix(&test_m)?;
    let confusion = confusion_matrix(&test_m.labels, &pred, m.n_classes())?;
    Ok(FoldResult {
        fold,
        n_train: train.len(),
        n_test: test_m.len(),
        n_test_synthetic: test_m.synthetic.iter().filter(|&&s| s).count(),
        features,
        metrics: metrics_from_confusion(&counts_to_f64(&confusion), cfg.averaging)?,
        confusion,
    })
}

fn report(m: &FeatureMatrix, learner: &LearnerConfig, cfg: &EvalConfig, folds: Vec<FoldResult>) -> EvalReport {
    let k = m.n_classes();
    let mut counts = vec![vec![0u64; k]; k];
    for f in &folds {
        for (a, b) in counts.iter_mut().zip(&f.confusion) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    let empty_rows = counts
        .iter()
        .enumerate()
        .filter(|(_, r)| r.iter().sum::<u64>() == 0)
        .map(|(c, _)| m.classes[c].clone())
        .collect();
    let per_fold: Vec<Metrics> = folds.iter().map(|f| f.metrics).collect();
    EvalReport {
        learner: learner.clone(),
        config: cfg.clone(),
        seed: cfg.seed,
        classes: m.classes.clone(),
        mean: Metrics::map(&per_fold, mean),
        std: Metrics::map(&per_fold, sample_std),
        confusion: ConfusionSummary {
            row_normalized: row_normalize(&counts),
            counts,
            empty_rows,
        },
        folds,
    }
}

fn check_input(m: &FeatureMatrix) -> Result<()> {
    m.validate()?;
    if m.synthetic.iter().any(|&s| s) {
        return Err(Error::Evaluation(
            "input already contains synthetic rows; evaluation oversamples on its own".into(),
        ));
    }
    Ok(())
}

pub fn cross_validate(m: &FeatureMatrix, learner: &LearnerConfig, cfg: &EvalConfig) -> Result<EvalReport> {
    check_input(m)?;
    learner.validate()?;
    let (data, per_fold_prep) = match cfg.protocol {
        Protocol::PerFold => (m.clone(), true),
        Protocol::Global => (prepare_global(m, cfg)?, false),
    };
    let folds = stratified_kfold(&data.labels, data.n_classes(), cfg.k, cfg.seed)?;
    let results: Vec<FoldResult> = folds
        .par_iter()
        .enumerate()
        .map(|(i, test)| {
            run_fold(&data, learner, cfg, i, test, per_fold_prep).map_err(|e| Error::Fold {
                fold: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(report(&data, learner, cfg, results))
}

/// Stratified split: `round(n_c * test_fraction)` rows of each class (at least one) go to test.
pub fn stratified_holdout(labels: &[usize], n_classes: usize, test_fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Evaluation(format!("test fraction must be in (0, 1), got {test_fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::new();
    for c in 0..n_classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::Evaluation(format!("class {c} has a single row; cannot hold one out")));
        }
        rows.shuffle(&mut rng);
        let n = ((rows.len() as f64 * test_fraction).round() as usize).clamp(1, rows.len() - 1);
        test.extend_from_slice(&rows[..n]);
    }
    test.sort_unstable();
    Ok(test)
}

pub fn holdout(m: &FeatureMatrix, learner: &LearnerConfig, cfg: &EvalConfig, test_fraction: f64) -> Result<EvalReport> {
    check_input(m)?;
    learner.validate()?;
    let (data, per_fold_prep) = match cfg.protocol {
        Protocol::PerFold => (m.clone(), true),
        Protocol::Global => (prepare_global(m, cfg)?, false),
    };
    let test = stratified_holdout(&data.labels, data.n_classes(), test_fraction, cfg.seed)?;
    let fold = run_fold(&data, learner, cfg, 0, &test, per_fold_prep)?;
    Ok(report(&data, learner, cfg, vec![fold]))
}
