//! Bagged Gini trees with per-node feature sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{bin_rows, fit_bins};
use super::tree::{grow_gini_tree, GiniParams, Tree};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
}

impl MaxFeatures {
    fn count(self, p: usize) -> Option<usize> {
        match self {
            MaxFeatures::Sqrt => Some(((p as f64).sqrt().ceil() as usize).max(1)),
            MaxFeatures::All => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub n_bins: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 300,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            n_bins: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub bin_edges: Vec<Vec<f64>>,
    pub trees: Vec<Tree>,
    pub seed: u64,
    /// Accuracy on out-of-bag rows; `None` without bootstrap or when no row was ever out of bag.
    pub oob_accuracy: Option<f64>,
}

/// Per-tree stream seed derived from the model seed.
fn tree_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn check(m: &FeatureMatrix) -> Result<()> {
    m.validate()?;
    if m.is_empty() || m.n_cols() == 0 {
        return Err(Error::Learner("empty training matrix".into()));
    }
    if m.n_classes() < 2 {
        return Err(Error::Learner(format!("need at least 2 classes, got {}", m.n_classes())));
    }
    Ok(())
}

pub fn fit_forest(m: &FeatureMatrix, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    check(m)?;
    if params.n_trees == 0 {
        return Err(Error::Learner("n_trees must be at least 1".into()));
    }
    let n = m.len();
    let k = m.n_classes();
    let edges = fit_bins(&m.rows, m.n_cols(), params.n_bins)?;
    let x = bin_rows(&m.rows, &edges);
    let gini = GiniParams {
        n_classes: k,
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: params.max_features.count(m.n_cols()),
    };

    let grown: Vec<(Tree, Vec<bool>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
            let mut in_bag = vec![!params.bootstrap; n];
            let rows: Vec<u32> = if params.bootstrap {
                (0..n)
                    .map(|_| {
                        let r = rng.random_range(0..n);
                        in_bag[r] = true;
                        r as u32
                    })
                    .collect()
            } else {
                (0..n as u32).collect()
            };
            (grow_gini_tree(&x, &edges, &m.labels, rows, &gini, &mut rng), in_bag)
        })
        .collect();

    let oob_accuracy = params.bootstrap.then(|| oob(&grown, m, k)).flatten();
    Ok(ForestModel {
        params: params.clone(),
        n_classes: k,
        feature_names: m.columns.clone(),
        bin_edges: edges,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        seed,
        oob_accuracy,
    })
}

fn oob(grown: &[(Tree, Vec<bool>)], m: &FeatureMatrix, k: usize) -> Option<f64> {
    let (mut scored, mut correct) = (0usize, 0usize);
    for (i, row) in m.rows.iter().enumerate() {
        let mut acc = vec![0.0; k];
        let mut votes = 0;
        for (tree, in_bag) in grown {
            if !in_bag[i] {
                votes += 1;
                for (a, v) in acc.iter_mut().zip(tree.leaf(row)) {
                    *a += v;
                }
            }
        }
        if votes > 0 {
            scored += 1;
            if argmax(&acc) == m.labels[i] {
                correct += 1;
            }
        }
    }
    (scored > 0).then(|| correct as f64 / scored as f64)
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

impl ForestModel {
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(t.leaf(row)) {
                *a += v;
            }
        }
        let n = self.trees.len() as f64;
        acc.into_iter().map(|a| a / n).collect()
    }

    /// Size-weighted Gini decrease per feature, summed over trees.
    pub fn impurity_importance(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.feature_names.len()];
        for t in &self.trees {
            t.accumulate_gain(&mut out);
        }
        out
    }
}

/// A single unpruned Gini tree over every feature and every row.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub n_classes: usize,
    pub bin_edges: Vec<Vec<f64>>,
    pub tree: Tree,
}

impl DecisionTree {
    pub fn fit(m: &FeatureMatrix, max_depth: Option<usize>, min_samples_leaf: usize, n_bins: usize) -> Result<Self> {
        check(m)?;
        let edges = fit_bins(&m.rows, m.n_cols(), n_bins)?;
        let x = bin_rows(&m.rows, &edges);
        let p = GiniParams {
            n_classes: m.n_classes(),
            max_depth,
            min_samples_leaf,
            max_features: None,
        };
        // all-feature trees draw nothing from the generator
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = grow_gini_tree(&x, &edges, &m.labels, (0..m.len() as u32).collect(), &p, &mut rng);
        Ok(Self {
            n_classes: m.n_classes(),
            bin_edges: edges,
            tree,
        })
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        self.tree.leaf(row).to_vec()
    }
}
