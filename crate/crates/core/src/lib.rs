//! Multi-scale failure prediction for PMU magnitude series.
//!
//! The pipeline runs: ingest → segment around logged disturbances → reject
//! outlier segments → extract 82 features per 30/60/180 s window → recursive
//! feature elimination → SMOTE → tree ensembles → stratified cross-validation.

pub mod balance;
pub mod error;
pub mod eval;
pub mod features;
pub mod learners;
pub mod matrix;
pub mod pipeline;
pub mod select;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::FeatureMatrix;
