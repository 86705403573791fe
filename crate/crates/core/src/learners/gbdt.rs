//! Multiclass gradient-boosted trees: softmax objective, one second-order
//! regression tree per class per iteration, histogram split finding.

use serde::{Deserialize, Serialize};

use super::binning::{bin_rows, fit_bins};
use super::tree::{grow_gradient_tree, GrowParams, Growth, Tree, TreeTrace};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseScore {
    Zero,
    /// Log class prior of the training labels.
    LogPrior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbdtParams {
    pub growth: Growth,
    pub n_iterations: usize,
    pub learning_rate: f64,
    pub num_leaves: usize,
    pub max_depth: Option<usize>,
    pub min_data_in_leaf: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub n_bins: usize,
    pub base_score: BaseScore,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            growth: Growth::LeafWise,
            n_iterations: 200,
            learning_rate: 0.1,
            num_leaves: 31,
            max_depth: Some(6),
            min_data_in_leaf: 20,
            lambda: 1.0,
            gamma: 0.0,
            n_bins: 64,
            base_score: BaseScore::Zero,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Learner(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.num_leaves < 2 {
            return bad(format!("num_leaves must be at least 2, got {}", self.num_leaves));
        }
        if self.min_data_in_leaf == 0 {
            return bad("min_data_in_leaf must be at least 1".into());
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) {
            return bad("lambda and gamma must be non-negative".into());
        }
        if self.growth == Growth::LevelWise && self.max_depth.is_none() {
            return bad("level-wise growth needs max_depth".into());
        }
        Ok(())
    }

    fn grow(&self) -> GrowParams {
        GrowParams {
            growth: self.growth,
            num_leaves: self.num_leaves,
            max_depth: self.max_depth,
            min_data_in_leaf: self.min_data_in_leaf,
            lambda: self.lambda,
            gamma: self.gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub params: GbdtParams,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub bin_edges: Vec<Vec<f64>>,
    pub base_score: Vec<f64>,
    /// Iteration-major: tree `t * n_classes + c` updates class `c`.
    pub trees: Vec<Tree>,
    pub seed: u64,
}

/// Gradients, hessians and split/leaf records of one boosted tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostTrace {
    pub iteration: usize,
    pub class: usize,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub tree: TreeTrace,
}

pub fn softmax(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = raw.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Mean multiclass cross-entropy of raw scores.
pub fn log_loss(raw: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = raw
        .iter()
        .zip(labels)
        .map(|(r, &y)| {
            let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + r.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - r[y]
        })
        .sum();
    total / raw.len() as f64
}

/// Softmax cross-entropy gradient and diagonal hessian for class `c`.
pub fn softmax_grad_hess(p: &[f64], label: usize, c: usize) -> (f64, f64) {
    let y = if label == c { 1.0 } else { 0.0 };
    (p[c] - y, p[c] * (1.0 - p[c]))
}

pub fn fit_gbdt(m: &FeatureMatrix, params: &GbdtParams, seed: u64) -> Result<GbdtModel> {
    fit(m, params, seed, None)
}

pub fn fit_gbdt_traced(m: &FeatureMatrix, params: &GbdtParams, seed: u64) -> Result<(GbdtModel, Vec<BoostTrace>)> {
    let mut traces = Vec::new();
    let model = fit(m, params, seed, Some(&mut traces))?;
    Ok((model, traces))
}

fn fit(m: &FeatureMatrix, params: &GbdtParams, seed: u64, mut traces: Option<&mut Vec<BoostTrace>>) -> Result<GbdtModel> {
    params.validate()?;
    m.validate()?;
    if m.is_empty() || m.n_cols() == 0 {
        return Err(Error::Learner("empty training matrix".into()));
    }
    let k = m.n_classes();
    if k < 2 {
        return Err(Error::Learner(format!("need at least 2 classes, got {k}")));
    }
    let n = m.len();
    let edges = fit_bins(&m.rows, m.n_cols(), params.n_bins)?;
    let x = bin_rows(&m.rows, &edges);

    let base_score = match params.base_score {
        BaseScore::Zero => vec![0.0; k],
        BaseScore::LogPrior => m
            .class_counts()
            .iter()
            .map(|&c| ((c.max(1)) as f64 / n as f64).ln())
            .collect(),
    };
    let mut raw: Vec<Vec<f64>> = vec![base_score.clone(); n];
    let grow = params.grow();
    let mut trees = Vec::with_capacity(params.n_iterations * k);
    let mut leaf_values = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for it in 0..params.n_iterations {
        let probs: Vec<Vec<f64>> = raw.iter().map(|r| softmax(r)).collect();
        for c in 0..k {
            for i in 0..n {
                (grad[i], hess[i]) = softmax_grad_hess(&probs[i], m.labels[i], c);
            }
            let mut tt = TreeTrace::default();
            let tree = grow_gradient_tree(
                &x,
                &edges,
                (0..n as u32).collect(),
                &grad,
                &hess,
                &grow,
                &mut leaf_values,
                traces.is_some().then_some(&mut tt),
            );
            for i in 0..n {
                raw[i][c] += params.learning_rate * leaf_values[i];
            }
            if let Some(t) = traces.as_deref_mut() {
                t.push(BoostTrace {
                    iteration: it,
                    class: c,
                    grad: grad.clone(),
                    hess: hess.clone(),
                    tree: tt,
                });
            }
            trees.push(tree);
        }
    }

    Ok(GbdtModel {
        params: params.clone(),
        n_classes: k,
        feature_names: m.columns.clone(),
        bin_edges: edges,
        base_score,
        trees,
        seed,
    })
}

impl GbdtModel {
    pub fn n_iterations(&self) -> usize {
        self.trees.len() / self.n_classes
    }

    /// Raw scores using only the first `iterations` boosting rounds.
    pub fn raw_scores_upto(&self, row: &[f64], iterations: usize) -> Vec<f64> {
        let mut raw = self.base_score.clone();
        for (t, tree) in self.trees.iter().take(iterations * self.n_classes).enumerate() {
            raw[t % self.n_classes] += self.params.learning_rate * tree.leaf(row)[0];
        }
        raw
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores_upto(row, self.n_iterations()))
    }

    /// Training log-loss after 0, 1, ..., n_iterations rounds.
    pub fn staged_log_loss(&self, m: &FeatureMatrix) -> Vec<f64> {
        let mut raw: Vec<Vec<f64>> = vec![self.base_score.clone(); m.len()];
        let mut out = vec![log_loss(&raw, &m.labels)];
        for chunk in self.trees.chunks(self.n_classes) {
            for (r, row) in raw.iter_mut().zip(&m.rows) {
                for (c, tree) in chunk.iter().enumerate() {
                    r[c] += self.params.learning_rate * tree.leaf(row)[0];
                }
            }
            out.push(log_loss(&raw, &m.labels));
        }
        out
    }

    /// Total split gain per feature.
    pub fn gain_importance(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.feature_names.len()];
        for t in &self.trees {
            t.accumulate_gain(&mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n_per: usize) -> FeatureMatrix {
        let centers = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, (cx, cy)) in centers.iter().enumerate() {
            for i in 0..n_per {
                let a = i as f64 * 2.399;
                let r = (i as f64 / n_per as f64).sqrt();
                rows.push(vec![cx + r * a.cos(), cy + r * a.sin()]);
                labels.push(c);
            }
        }
        FeatureMatrix::new(vec!["x".into(), "y".into()], rows, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    #[test]
    fn zero_iterations_is_uniform() {
        let p = GbdtParams { n_iterations: 0, ..Default::default() };
        let model = fit_gbdt(&blobs(10), &p, 0).unwrap();
        for v in model.predict_proba(&[1.0, 1.0]) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn separates_blobs_and_loss_decreases() {
        let m = blobs(40);
        let p = GbdtParams { n_iterations: 30, min_data_in_leaf: 5, ..Default::default() };
        let model = fit_gbdt(&m, &p, 1).unwrap();
        let correct = m
            .rows
            .iter()
            .zip(&m.labels)
            .filter(|(r, &y)| {
                let pr = model.predict_proba(r);
                (0..3).all(|c| pr[y] >= pr[c])
            })
            .count();
        assert_eq!(correct, m.len());
        let losses = model.staged_log_loss(&m);
        assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{losses:?}");
    }

    #[test]
    fn xor_needs_depth_two() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let x = (i % 20) as f64 / 20.0 + 0.025;
            let y = (i / 20) as f64 / 10.0 + 0.05;
            rows.push(vec![x, y]);
            // off-centre thresholds: a balanced XOR gives every root split zero gain
            labels.push(usize::from((x > 0.4) != (y > 0.3)));
        }
        let m = FeatureMatrix::new(vec!["x".into(), "y".into()], rows, labels, vec!["a".into(), "b".into()]).unwrap();
        let p = GbdtParams { n_iterations: 40, min_data_in_leaf: 5, ..Default::default() };
        let model = fit_gbdt(&m, &p, 0).unwrap();
        let acc = m
            .rows
            .iter()
            .zip(&m.labels)
            .filter(|(r, &y)| model.predict_proba(r)[y] > 0.5)
            .count() as f64
            / m.len() as f64;
        assert!(acc >= 0.95, "{acc}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let raw = [0.3, -1.2, 0.8];
        let eps = 1e-6;
        for c in 0..3 {
            let mut plus = raw;
            let mut minus = raw;
            plus[c] += eps;
            minus[c] -= eps;
            let fd = (log_loss(&[plus.to_vec()], &[1]) - log_loss(&[minus.to_vec()], &[1])) / (2.0 * eps);
            let (g, _) = softmax_grad_hess(&softmax(&raw), 1, c);
            assert!((g - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn invalid_params() {
        let m = blobs(5);
        let bad = GbdtParams { learning_rate: 0.0, ..Default::default() };
        assert!(fit_gbdt(&m, &bad, 0).is_err());
        let bad = GbdtParams { growth: Growth::LevelWise, max_depth: None, ..Default::default() };
        assert!(fit_gbdt(&m, &bad, 0).is_err());
    }
}
