use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{DisturbanceLog, PmuChannel, DEFAULT_RATE_HZ};
use crate::error::{Error, Result};

/// Column names of the long-format measurement CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsvSchema {
    pub timestamp: String,
    pub terminal: String,
    pub channel: String,
    pub value: String,
    /// Fixed sampling rate; inferred from the median frame spacing when absent.
    pub rate_hz: Option<f64>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            terminal: "terminal".into(),
            channel: "channel".into(),
            value: "value".into(),
            rate_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub terminal: String,
    pub channel: String,
    pub at: DateTime<Utc>,
    pub gap_s: f64,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub channels: Vec<PmuChannel>,
    pub gaps: Vec<GapReport>,
}

struct Partial {
    times: Vec<DateTime<Utc>>,
    values: Vec<f64>,
}

pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), schema)
}

pub(crate) fn ingest_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_col = column(&schema.timestamp)?;
    let term_col = column(&schema.terminal)?;
    let chan_col = column(&schema.channel)?;
    let val_col = column(&schema.value)?;

    let mut groups: BTreeMap<(String, String), Partial> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let t = DateTime::parse_from_rfc3339(field(ts_col))
            .map_err(|e| Error::Ingest {
                row,
                message: format!("bad timestamp `{}`: {e}", field(ts_col)),
            })?
            .with_timezone(&Utc);
        let value: f64 = field(val_col).parse().map_err(|_| Error::Ingest {
            row,
            message: format!("bad value `{}`", field(val_col)),
        })?;
        if !value.is_finite() {
            return Err(Error::Ingest {
                row,
                message: format!("non-finite value `{}`", field(val_col)),
            });
        }
        let key = (field(term_col).to_string(), field(chan_col).to_string());
        let part = groups.entry(key).or_insert_with(|| Partial {
            times: Vec::new(),
            values: Vec::new(),
        });
        if let Some(&prev) = part.times.last() {
            if t <= prev {
                return Err(Error::Ingest {
                    row,
                    message: format!("timestamp {} not after previous {}", t.to_rfc3339(), prev.to_rfc3339()),
                });
            }
        }
        part.times.push(t);
        part.values.push(value);
    }

    let mut channels = Vec::with_capacity(groups.len());
    let mut gaps = Vec::new();
    for ((terminal, channel), part) in groups {
        let rate_hz = schema.rate_hz.unwrap_or_else(|| infer_rate(&part.times));
        let limit = 2.0 / rate_hz;
        for w in part.times.windows(2) {
            let dt = (w[1] - w[0]).num_microseconds().unwrap_or(i64::MAX) as f64 * 1e-6;
            if dt > limit {
                log::warn!("{terminal}/{channel}: gap of {dt:.3} s at {}", w[0].to_rfc3339());
                gaps.push(GapReport {
                    terminal: terminal.clone(),
                    channel: channel.clone(),
                    at: w[0],
                    gap_s: dt,
                });
            }
        }
        channels.push(PmuChannel {
            terminal_id: terminal,
            channel_name: channel,
            rate_hz,
            t0: part.times[0],
            samples: part.values,
        });
    }
    Ok(Ingested { channels, gaps })
}

fn infer_rate(times: &[DateTime<Utc>]) -> f64 {
    if times.len() < 2 {
        return DEFAULT_RATE_HZ;
    }
    let mut dts: Vec<i64> = times
        .windows(2)
        .map(|w| (w[1] - w[0]).num_microseconds().unwrap_or(i64::MAX))
        .collect();
    dts.sort_unstable();
    let median_us = dts[dts.len() / 2] as f64;
    (1e6 / median_us * 1e3).round() / 1e3
}

pub fn read_disturbance_log(path: &Path) -> Result<DisturbanceLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_log_from(BufReader::new(file))
}

pub(crate) fn read_log_from<R: Read>(reader: R) -> Result<DisturbanceLog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "event_time")
        .ok_or_else(|| Error::MissingColumn("event_time".into()))?;
    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw = rec.get(col).unwrap_or("");
        let t = DateTime::parse_from_rfc3339(raw).map_err(|e| Error::Ingest {
            row,
            message: format!("bad event_time `{raw}`: {e}"),
        })?;
        events.push(t.with_timezone(&Utc));
    }
    DisturbanceLog::new(events)
}

pub(crate) fn format_ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Micros, true)
}

/// Writes channels in the long `timestamp,terminal,channel,value` format.
pub fn write_channels_csv<W: Write>(out: W, channels: &[PmuChannel]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(out));
    w.write_record(["timestamp", "terminal", "channel", "value"])?;
    for ch in channels {
        for (i, v) in ch.samples.iter().enumerate() {
            w.write_record([
                format_ts(ch.time_of(i)).as_str(),
                ch.terminal_id.as_str(),
                ch.channel_name.as_str(),
                v.to_string().as_str(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_log_csv<W: Write>(out: W, log: &DisturbanceLog) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["event_time"])?;
    for &t in log.events() {
        w.write_record([format_ts(t)])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
