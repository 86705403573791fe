//! Tree-ensemble classifiers: histogram GBDT (leaf-wise or level-wise) and
//! random forest, with a versioned JSON model format.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub mod binning;
pub mod forest;
pub mod gbdt;
pub mod tree;

pub use forest::{argmax, fit_forest, DecisionTree, ForestModel, ForestParams, MaxFeatures};
pub use gbdt::{fit_gbdt, fit_gbdt_traced, BaseScore, BoostTrace, GbdtModel, GbdtParams};
pub use tree::{Growth, Node, Tree};

pub const MODEL_SCHEMA_VERSION: u64 = 1;

/// Learner choice as written in configs: `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerConfig {
    GbdtLeafwise(GbdtParams),
    GbdtLevelwise(GbdtParams),
    RandomForest(ForestParams),
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::GbdtLeafwise(GbdtParams::default())
    }
}

impl LearnerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerConfig::GbdtLeafwise(_) => "gbdt_leafwise",
            LearnerConfig::GbdtLevelwise(_) => "gbdt_levelwise",
            LearnerConfig::RandomForest(_) => "random_forest",
        }
    }

    /// GBDT params with the growth policy implied by the kind.
    fn gbdt_params(&self) -> Option<GbdtParams> {
        match self {
            LearnerConfig::GbdtLeafwise(p) => Some(GbdtParams { growth: Growth::LeafWise, ..p.clone() }),
            LearnerConfig::GbdtLevelwise(p) => Some(GbdtParams {
                growth: Growth::LevelWise,
                max_depth: p.max_depth.or(Some(6)),
                ..p.clone()
            }),
            LearnerConfig::RandomForest(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerConfig::RandomForest(p) if p.n_trees == 0 => Err(Error::Learner("n_trees must be at least 1".into())),
            LearnerConfig::RandomForest(_) => Ok(()),
            _ => self.gbdt_params().expect("gbdt kind").validate(),
        }
    }

    pub fn fit(&self, m: &FeatureMatrix, seed: u64) -> Result<Model> {
        match self {
            LearnerConfig::RandomForest(p) => Ok(Model::RandomForest(fit_forest(m, p, seed)?)),
            _ => Ok(Model::Gbdt(fit_gbdt(m, &self.gbdt_params().expect("gbdt kind"), seed)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Gbdt(GbdtModel),
    RandomForest(ForestModel),
}

impl Model {
    pub fn n_classes(&self) -> usize {
        match self {
            Model::Gbdt(m) => m.n_classes,
            Model::RandomForest(m) => m.n_classes,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::Gbdt(m) => &m.feature_names,
            Model::RandomForest(m) => &m.feature_names,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        let p = self.feature_names().len();
        if row.len() != p {
            return Err(Error::Learner(format!("row has {} values, model expects {p}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Learner("row contains a non-finite value".into()));
        }
        Ok(match self {
            Model::Gbdt(m) => m.predict_proba(row),
            Model::RandomForest(m) => m.predict_proba(row),
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        self.predict_proba(row).map(|p| argmax(&p))
    }

    pub fn predict_matrix(&self, m: &FeatureMatrix) -> Result<Vec<usize>> {
        m.rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Total split gain (GBDT) or size-weighted Gini decrease (forest) per
    /// feature in column order, normalized to sum to 1 unless all zero.
    pub fn feature_importance(&self) -> Vec<f64> {
        let raw = match self {
            Model::Gbdt(m) => m.gain_importance(),
            Model::RandomForest(m) => m.impurity_importance(),
        };
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            raw.into_iter().map(|v| v / total).collect()
        } else {
            raw
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v.as_object_mut()
            .expect("model serializes to an object")
            .insert("schema_version".into(), Value::from(MODEL_SCHEMA_VERSION));
        Ok(serde_json::to_string(&v)?)
    }

    pub fn from_json(s: &str) -> Result<Model> {
        let mut v: Value = serde_json::from_str(s).map_err(|e| Error::ModelParse(e.to_string()))?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| Error::ModelParse("model file is not a JSON object".into()))?;
        let version = obj
            .remove("schema_version")
            .ok_or_else(|| Error::ModelParse("missing schema_version".into()))?;
        let found = version
            .as_u64()
            .ok_or_else(|| Error::ModelParse("schema_version is not an unsigned integer".into()))?;
        if found != MODEL_SCHEMA_VERSION {
            return Err(Error::ModelVersion { found, expected: MODEL_SCHEMA_VERSION });
        }
        serde_json::from_value(v).map_err(|e| Error::ModelParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Model> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..90).map(|i| vec![(i / 30) as f64 + 0.01 * (i % 30) as f64, (i % 13) as f64 / 7.0]).collect();
        let labels = (0..90).map(|i| i / 30).collect();
        FeatureMatrix::new(vec!["s".into(), "n".into()], rows, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    fn configs() -> Vec<LearnerConfig> {
        vec![
            LearnerConfig::GbdtLeafwise(GbdtParams { n_iterations: 10, min_data_in_leaf: 3, ..Default::default() }),
            LearnerConfig::GbdtLevelwise(GbdtParams { n_iterations: 10, min_data_in_leaf: 3, ..Default::default() }),
            LearnerConfig::RandomForest(ForestParams { n_trees: 15, ..Default::default() }),
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let m = data();
        for cfg in configs() {
            let model = cfg.fit(&m, 11).unwrap();
            let json = model.to_json().unwrap();
            let back = Model::from_json(&json).unwrap();
            assert_eq!(back, model);
            for r in &m.rows {
                let (a, b) = (model.predict_proba(r).unwrap(), back.predict_proba(r).unwrap());
                assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            }
            let imp = model.feature_importance();
            assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(imp[0] > imp[1], "{} {imp:?}", cfg.name());
        }
    }

    #[test]
    fn version_and_truncation_errors() {
        let model = configs()[0].fit(&data(), 0).unwrap();
        let json = model.to_json().unwrap();
        let bumped = json.replace("\"schema_version\":1", "\"schema_version\":999");
        assert!(matches!(Model::from_json(&bumped), Err(Error::ModelVersion { found: 999, expected: 1 })));
        assert!(matches!(Model::from_json(&json[..json.len() / 2]), Err(Error::ModelParse(_))));
    }

    #[test]
    fn config_json_shape() {
        let cfg: LearnerConfig = serde_json::from_str(r#"{"kind":"random_forest","params":{"n_trees":5}}"#).unwrap();
        assert_eq!(cfg, LearnerConfig::RandomForest(ForestParams { n_trees: 5, ..Default::default() }));
        assert!(serde_json::from_str::<LearnerConfig>(r#"{"kind":"gbdt_leafwise","params":{"leaves":5}}"#).is_err());
    }

    #[test]
    fn leafwise_and_levelwise_differ_in_shape() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 20) as f64, (i / 20) as f64]).collect();
        let labels = rows.iter().map(|r| ((r[0] as usize / 3) + (r[1] as usize / 2)) % 3).collect();
        let m = FeatureMatrix::new(vec!["a".into(), "b".into()], rows, labels, vec!["x".into(), "y".into(), "z".into()]).unwrap();
        let p = GbdtParams { n_iterations: 3, num_leaves: 4, max_depth: Some(3), min_data_in_leaf: 2, ..Default::default() };
        let Model::Gbdt(leaf) = LearnerConfig::GbdtLeafwise(p.clone()).fit(&m, 0).unwrap() else { unreachable!() };
        let Model::Gbdt(level) = LearnerConfig::GbdtLevelwise(p).fit(&m, 0).unwrap() else { unreachable!() };
        assert!(leaf.trees.iter().all(|t| t.n_leaves() <= 4));
        assert!(level.trees.iter().all(|t| t.depth() <= 3));
        assert!(level.trees.iter().any(|t| t.n_leaves() > 4));
    }

    #[test]
    fn predict_checks_row_shape() {
        let model = configs()[2].fit(&data(), 0).unwrap();
        assert!(model.predict_proba(&[1.0]).is_err());
        assert!(model.predict_proba(&[1.0, f64::NAN]).is_err());
    }
}
