//! Workdir-backed stages. Each stage reads the artifacts of the previous one
//! and writes its own with temp-file-plus-rename.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    build_segments, compare_scales, evaluate_selected, extract_features, select_features, svg, train_final, Comparison,
    PipelineConfig, RunReport, REPORT_SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::learners::Model;
use crate::matrix::FeatureMatrix;
use crate::select::{report_top_features, SelectionResult};
use crate::signal::{ingest_csv, read_disturbance_log, write_channels_csv, write_log_csv, GapReport};
use crate::signal::{DropRecord, MinMaxParams, Segment};
use crate::synth::{generate, ScenarioConfig, TruthEntry};

pub const LOCK_FILE: &str = ".gridsense.lock";
pub const MEASUREMENTS: &str = "measurements.csv";
pub const EVENTS: &str = "events.csv";
pub const TRUTH: &str = "truth.json";
pub const SCENARIO: &str = "scenario.json";
/// Default synth output directory inside the workdir.
pub const SYNTH_DIR: &str = "data";
pub const SEGMENTS: &str = "segments.json";
pub const DROPPED: &str = "dropped.json";
pub const FEATURES: &str = "features.csv";
pub const SELECTION: &str = "selection.json";
pub const MODEL: &str = "model.json";
pub const SCALER: &str = "scaler.json";
pub const REPORT: &str = "report.json";
pub const COMPARISON: &str = "comparison.json";
pub const REPORT_SVG: &str = "report.svg";

/// Bars drawn in the report figure.
pub const REPORT_TOP_N: usize = 20;

pub struct Workdir {
    root: PathBuf,
}

/// Exclusive hold on a workdir; the lockfile is removed on drop.
#[derive(Debug)]
pub struct WorkdirLock {
    path: PathBuf,
}

impl Drop for WorkdirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

impl Workdir {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Workdir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Absolute paths pass through; relative ones resolve against the workdir.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Path of an artifact that must already exist.
    pub fn require(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact(p))
        }
    }

    pub fn lock(&self) -> Result<WorkdirLock> {
        let path = self.path(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(WorkdirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(path)),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        write_atomic(&self.path(name), bytes)?;
        Ok(self.path(name))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_atomic(name, &serde_json::to_vec_pretty(value)?)
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        read_json(&self.require(name)?)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let res = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    res.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

fn check_version(found: u64, what: &Path) -> Result<()> {
    if found == REPORT_SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{} has schema version {found}, expected {REPORT_SCHEMA_VERSION}",
            what.display()
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentsArtifact {
    pub schema_version: u64,
    pub segments: Vec<Segment>,
    pub gaps: Vec<GapReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedArtifact {
    pub schema_version: u64,
    pub dropped: Vec<DropRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionArtifact {
    pub schema_version: u64,
    pub selection: SelectionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerArtifact {
    pub schema_version: u64,
    pub scaler: MinMaxParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthArtifact {
    pub schema_version: u64,
    pub truth: Vec<TruthEntry>,
}

/// Writes measurements, the disturbance log, ground truth and the scenario
/// itself into `out`. File names match the default `paths` when `out` is
/// `<workdir>/data`.
pub fn synth(scenario: &ScenarioConfig, cfg: &PipelineConfig, out: &Workdir) -> Result<Vec<PathBuf>> {
    let s = generate(scenario)?;
    let truth = crate::synth::truth(scenario, &cfg.segmentation.plan());
    let mut data = Vec::new();
    write_channels_csv(&mut data, &s.channels)?;
    let mut log = Vec::new();
    write_log_csv(&mut log, &s.log)?;
    let paths = vec![
        out.write_atomic(MEASUREMENTS, &data)?,
        out.write_atomic(EVENTS, &log)?,
        out.write_json(
            TRUTH,
            &TruthArtifact {
                schema_version: REPORT_SCHEMA_VERSION,
                truth,
            },
        )?,
        out.write_json(SCENARIO, scenario)?,
    ];
    info!("synthesized {} events into {}", scenario.n_events, out.root().display());
    Ok(paths)
}

/// Reads measurements and the log, segments and applies outlier rejection.
pub fn ingest(cfg: &PipelineConfig, wd: &Workdir) -> Result<SegmentsArtifact> {
    let data = wd.resolve(Path::new(&cfg.paths.data));
    let log_path = wd.resolve(Path::new(&cfg.paths.log));
    for p in [&data, &log_path] {
        if !p.is_file() {
            return Err(Error::MissingArtifact(p.clone()));
        }
    }
    let ingested = ingest_csv(&data, &cfg.csv)?;
    for g in &ingested.gaps {
        warn!("gap of {:.3} s on {}/{} at {}", g.gap_s, g.terminal, g.channel, g.at);
    }
    let log = read_disturbance_log(&log_path)?;
    let (segments, dropped) = build_segments(&ingested.channels, &log, cfg)?;
    for d in &dropped {
        warn!("dropped segment {}: {}", d.segment.id(), d.reason);
    }
    let artifact = SegmentsArtifact {
        schema_version: REPORT_SCHEMA_VERSION,
        segments,
        gaps: ingested.gaps,
    };
    wd.write_json(SEGMENTS, &artifact)?;
    wd.write_json(
        DROPPED,
        &DroppedArtifact {
            schema_version: REPORT_SCHEMA_VERSION,
            dropped: dropped.iter().map(|d| d.record()).collect(),
        },
    )?;
    info!("{} segments kept, {} dropped", artifact.segments.len(), dropped.len());
    Ok(artifact)
}

pub fn load_segments(wd: &Workdir) -> Result<Vec<Segment>> {
    let path = wd.require(SEGMENTS)?;
    let a: SegmentsArtifact = read_json(&path)?;
    check_version(a.schema_version, &path)?;
    Ok(a.segments)
}

pub fn extract(cfg: &PipelineConfig, wd: &Workdir) -> Result<FeatureMatrix> {
    let segments = load_segments(wd)?;
    let m = extract_features(&segments, cfg)?;
    let mut buf = Vec::new();
    m.write_csv(&mut buf)?;
    wd.write_atomic(FEATURES, &buf)?;
    info!("extracted {} x {} features", m.len(), m.n_cols());
    Ok(m)
}

pub fn load_features(wd: &Workdir) -> Result<FeatureMatrix> {
    let path = wd.require(FEATURES)?;
    let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
    FeatureMatrix::read_csv(BufReader::new(f))
}

pub fn select(cfg: &PipelineConfig, wd: &Workdir) -> Result<SelectionResult> {
    let m = load_features(wd)?;
    let selection = select_features(&m, cfg)?;
    wd.write_json(
        SELECTION,
        &SelectionArtifact {
            schema_version: REPORT_SCHEMA_VERSION,
            selection: selection.clone(),
        },
    )?;
    info!("selected {} features", selection.selected.len());
    Ok(selection)
}

pub fn load_selection(wd: &Workdir) -> Result<SelectionResult> {
    let path = wd.require(SELECTION)?;
    let a: SelectionArtifact = read_json(&path)?;
    check_version(a.schema_version, &path)?;
    Ok(a.selection)
}

pub fn train(cfg: &PipelineConfig, wd: &Workdir) -> Result<Model> {
    let m = load_features(wd)?;
    let selection = load_selection(wd)?;
    let (model, scaler) = train_final(&m, &selection.selected, cfg)?;
    wd.write_atomic(MODEL, model.to_json()?.as_bytes())?;
    wd.write_json(
        SCALER,
        &ScalerArtifact {
            schema_version: REPORT_SCHEMA_VERSION,
            scaler,
        },
    )?;
    Ok(model)
}

pub fn evaluate(cfg: &PipelineConfig, wd: &Workdir) -> Result<RunReport> {
    let m = load_features(wd)?;
    let selection = load_selection(wd)?;
    let evaluation = evaluate_selected(&m, &selection.selected, cfg)?;
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        seed: cfg.eval.seed,
        features: selection.selected,
        evaluation,
    };
    wd.write_json(REPORT, &report)?;
    Ok(report)
}

pub fn compare(cfg: &PipelineConfig, wd: &Workdir) -> Result<Comparison> {
    let m = load_features(wd)?;
    let c = compare_scales(&m, cfg)?;
    wd.write_json(COMPARISON, &c)?;
    Ok(c)
}

/// Renders report.svg from report.json, with importances from model.json when
/// present and from selection.json otherwise.
pub fn report(wd: &Workdir) -> Result<PathBuf> {
    let path = wd.require(REPORT)?;
    let r: RunReport = read_json(&path)?;
    check_version(r.schema_version, &path)?;
    let importances = match wd.require(MODEL) {
        Ok(p) => {
            let model = Model::load(&p)?;
            let mut pairs: Vec<(String, f64)> = model
                .feature_names()
                .iter()
                .cloned()
                .zip(model.feature_importance())
                .collect();
            pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            pairs.truncate(REPORT_TOP_N);
            pairs
        }
        Err(_) => report_top_features(&load_selection(wd)?, REPORT_TOP_N),
    };
    let text = svg::render(&r.evaluation.classes, &r.evaluation.confusion.row_normalized, &importances);
    wd.write_atomic(REPORT_SVG, text.as_bytes())
}
