//! Recursive feature elimination driven by tree-ensemble importance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{GbdtParams, LearnerConfig};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfeConfig {
    pub target_k: usize,
    /// Fraction of surviving features dropped per iteration (at least one).
    pub step: f64,
    pub learner: LearnerConfig,
}

impl Default for RfeConfig {
    fn default() -> Self {
        Self {
            target_k: 20,
            step: 0.1,
            learner: LearnerConfig::GbdtLeafwise(GbdtParams {
                n_iterations: 50,
                ..GbdtParams::default()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeStep {
    pub iteration: usize,
    pub n_features: usize,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected names in original column order.
    pub selected: Vec<String>,
    /// Importance of each selected feature from a final fit, summing to 1.
    pub scores: Vec<f64>,
    pub history: Vec<RfeStep>,
    pub seed: u64,
}

impl SelectionResult {
    /// `(name, score)` by descending score, ties in column order.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self.selected.iter().cloned().zip(self.scores.iter().copied()).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }
}

pub fn report_top_features(result: &SelectionResult, n: usize) -> Vec<(String, f64)> {
    result.ranked().into_iter().take(n).collect()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.into_iter().map(|x| x / total).collect()
    } else {
        let n = v.len() as f64;
        vec![1.0 / n; v.len()]
    }
}

pub fn rfe(m: &FeatureMatrix, cfg: &RfeConfig, seed: u64) -> Result<SelectionResult> {
    let p = m.n_cols();
    if cfg.target_k == 0 || cfg.target_k > p {
        return Err(Error::Selection(format!(
            "target_k must be in 1..={p}, got {}",
            cfg.target_k
        )));
    }
    if !(cfg.step > 0.0 && cfg.step < 1.0) {
        return Err(Error::Selection(format!("step must be in (0, 1), got {}", cfg.step)));
    }
    // tie-break rank per column, fixed for the whole run
    let mut tiebreak: Vec<usize> = (0..p).collect();
    tiebreak.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut surviving: Vec<usize> = (0..p).collect();
    let mut history = Vec::new();
    let mut iteration = 0;
    while surviving.len() > cfg.target_k {
        let sub = m.select_column_indices(&surviving);
        let importance = cfg
            .learner
            .fit(&sub, seed)
            .map_err(|e| Error::RfeIteration { iteration, source: Box::new(e) })?
            .feature_importance();
        let n_drop = ((surviving.len() as f64 * cfg.step).floor() as usize)
            .max(1)
            .min(surviving.len() - cfg.target_k);
        let mut order: Vec<usize> = (0..surviving.len()).collect();
        order.sort_by(|&a, &b| {
            importance[a]
                .total_cmp(&importance[b])
                .then(tiebreak[surviving[a]].cmp(&tiebreak[surviving[b]]))
        });
        let mut drop: Vec<usize> = order[..n_drop].to_vec();
        drop.sort_unstable();
        history.push(RfeStep {
            iteration,
            n_features: surviving.len(),
            dropped: drop.iter().map(|&i| m.columns[surviving[i]].clone()).collect(),
        });
        let mut keep = Vec::with_capacity(surviving.len() - n_drop);
        for (i, &col) in surviving.iter().enumerate() {
            if drop.binary_search(&i).is_err() {
                keep.push(col);
            }
        }
        surviving = keep;
        iteration += 1;
    }

    let sub = m.select_column_indices(&surviving);
    let scores = cfg
        .learner
        .fit(&sub, seed)
        .map_err(|e| Error::RfeIteration { iteration, source: Box::new(e) })?
        .feature_importance();
    Ok(SelectionResult {
        selected: sub.columns,
        scores: normalized(scores),
        history,
        seed,
    })
}
