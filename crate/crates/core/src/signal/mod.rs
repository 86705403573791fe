//! Raw PMU signal types, ingestion, segmentation around logged disturbances,
//! outlier rejection and multi-scale window slicing.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod ingest;
mod scaling;
mod segment;

pub use ingest::{ingest_csv, read_disturbance_log, write_channels_csv, write_log_csv, CsvSchema, GapReport, Ingested};
pub use scaling::{minmax_scale_columns, MinMaxParams};
pub use segment::{
    reject_outlier_segments, segment_by_events, slice_windows, DropRecord, DroppedSegment, SegmentPlan,
    WindowSet,
};

pub const VOLTAGE: &str = "VA_M";
pub const CURRENT: &str = "IA_M";
pub const DEFAULT_RATE_HZ: f64 = 30.0;

/// A uniformly sampled magnitude series from one PMU terminal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmuChannel {
    pub terminal_id: String,
    pub channel_name: String,
    pub rate_hz: f64,
    pub t0: DateTime<Utc>,
    pub samples: Vec<f64>,
}

impl PmuChannel {
    /// Sample index of `t`, rounded to the nearest frame. May be negative or past the end.
    pub fn index_of(&self, t: DateTime<Utc>) -> i64 {
        let dt = (t - self.t0).num_microseconds().unwrap_or(i64::MAX) as f64 * 1e-6;
        (dt * self.rate_hz).round() as i64
    }

    pub fn time_of(&self, index: usize) -> DateTime<Utc> {
        self.t0 + chrono::Duration::microseconds((index as f64 / self.rate_hz * 1e6).round() as i64)
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }
}

/// Strictly increasing disturbance timestamps from a failure log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceLog {
    events: Vec<DateTime<Utc>>,
}

impl DisturbanceLog {
    pub fn new(events: Vec<DateTime<Utc>>) -> Result<Self> {
        if let Some(w) = events.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Segmentation(format!(
                "disturbance log not strictly increasing at {}",
                w[1].to_rfc3339()
            )));
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[DateTime<Utc>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Operational state of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Nor,
    Pre,
    Post,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Nor, Class::Pre, Class::Post];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Class> {
        Class::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Nor => "Nor",
            Class::Pre => "Pre",
            Class::Post => "Post",
        }
    }

    pub fn names() -> Vec<String> {
        Class::ALL.iter().map(|c| c.as_str().to_string()).collect()
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Nor" => Ok(Class::Nor),
            "Pre" => Ok(Class::Pre),
            "Post" => Ok(Class::Post),
            other => Err(Error::Precondition(format!("unknown class label `{other}`"))),
        }
    }
}

/// Where a segment was cut relative to its event: `N{minutes}` before, or immediately pre/post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Normal(u32),
    Pre,
    Post,
}

impl Origin {
    pub fn class(self) -> Class {
        match self {
            Origin::Normal(_) => Class::Nor,
            Origin::Pre => Class::Pre,
            Origin::Post => Class::Post,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Normal(m) => write!(f, "N{m}"),
            Origin::Pre => f.write_str("PRE"),
            Origin::Post => f.write_str("POST"),
        }
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PRE" => Ok(Origin::Pre),
            "POST" => Ok(Origin::Post),
            _ => s
                .strip_prefix('N')
                .and_then(|m| m.parse().ok())
                .map(Origin::Normal)
                .ok_or_else(|| Error::Precondition(format!("unknown segment origin `{s}`"))),
        }
    }
}

impl Serialize for Origin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Origin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub class: Class,
    pub origin: Origin,
}

impl From<Origin> for SegmentLabel {
    fn from(origin: Origin) -> Self {
        SegmentLabel {
            class: origin.class(),
            origin,
        }
    }
}

/// Aligned voltage/current slices for one labeled segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub terminal_id: String,
    pub label: SegmentLabel,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub event_index: usize,
    pub rate_hz: f64,
    pub va_m: Vec<f64>,
    pub ia_m: Vec<f64>,
}

impl Segment {
    pub fn id(&self) -> String {
        format!("{}-e{}-{}", self.terminal_id, self.event_index, self.label.origin)
    }

    pub fn len(&self) -> usize {
        self.va_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.va_m.is_empty()
    }

    pub fn channels(&self) -> [(&'static str, &[f64]); 2] {
        [(VOLTAGE, &self.va_m), (CURRENT, &self.ia_m)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// The window ends at the segment end.
    #[default]
    Trailing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub sizes_s: Vec<f64>,
    #[serde(default)]
    pub alignment: Alignment,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            sizes_s: vec![30.0, 60.0, 180.0],
            alignment: Alignment::Trailing,
        }
    }
}

impl WindowSpec {
    pub fn single(size_s: f64) -> Self {
        Self {
            sizes_s: vec![size_s],
            alignment: Alignment::Trailing,
        }
    }

    /// Checks the spec against a sampling rate and returns window lengths in samples.
    pub fn lengths(&self, rate_hz: f64) -> Result<Vec<usize>> {
        if self.sizes_s.is_empty() {
            return Err(Error::WindowSpec("no window sizes".into()));
        }
        if !(rate_hz > 0.0) {
            return Err(Error::WindowSpec(format!("rate_hz must be positive, got {rate_hz}")));
        }
        if self.sizes_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::WindowSpec(format!(
                "sizes must be sorted ascending and unique: {:?}",
                self.sizes_s
            )));
        }
        self.sizes_s
            .iter()
            .map(|&s| window_len(s, rate_hz))
            .collect()
    }

    pub fn max_len(&self, rate_hz: f64) -> Result<usize> {
        Ok(*self.lengths(rate_hz)?.last().expect("non-empty"))
    }
}

pub(crate) fn window_len(size_s: f64, rate_hz: f64) -> Result<usize> {
    let n = size_s * rate_hz;
    if !(size_s > 0.0) || (n - n.round()).abs() > 1e-9 || n.round() < 64.0 {
        return Err(Error::WindowSpec(format!(
            "window of {size_s} s at {rate_hz} Hz must span an integer number (>= 64) of samples"
        )));
    }
    Ok(n.round() as usize)
}

/// Tag used to suffix multi-scale feature names, e.g. `30` for a 30 s window.
pub fn scale_tag(size_s: f64) -> String {
    if size_s.fract() == 0.0 {
        format!("{}", size_s as i64)
    } else {
        format!("{size_s}")
    }
}
