use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::{window_len, DisturbanceLog, Origin, PmuChannel, Segment, WindowSpec, CURRENT, VOLTAGE};
use crate::error::{Error, Result};

/// Segment geometry relative to each logged event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentPlan {
    pub seg_len_s: f64,
    /// Minutes before the event at which each normal segment ends.
    pub offsets_min: Vec<u32>,
}

impl Default for SegmentPlan {
    fn default() -> Self {
        Self {
            seg_len_s: 180.0,
            offsets_min: vec![50, 40, 30, 20, 10],
        }
    }
}

impl SegmentPlan {
    pub fn origins(&self) -> Vec<Origin> {
        self.offsets_min
            .iter()
            .map(|&m| Origin::Normal(m))
            .chain([Origin::Pre, Origin::Post])
            .collect()
    }

    fn span(&self, event: DateTime<Utc>, origin: Origin) -> (DateTime<Utc>, DateTime<Utc>) {
        let len = Duration::microseconds((self.seg_len_s * 1e6).round() as i64);
        match origin {
            Origin::Normal(m) => {
                let end = event - Duration::minutes(m as i64);
                (end - len, end)
            }
            Origin::Pre => (event - len, event),
            Origin::Post => (event, event + len),
        }
    }
}

/// Cuts labeled segments around every event for every terminal carrying both
/// `VA_M` and `IA_M`. Segments not fully covered by data are skipped with a warning.
pub fn segment_by_events(
    channels: &[PmuChannel],
    log: &DisturbanceLog,
    plan: &SegmentPlan,
) -> Result<Vec<Segment>> {
    if log.is_empty() {
        return Err(Error::Segmentation("disturbance log is empty".into()));
    }
    let mut terminals: BTreeMap<&str, (Option<&PmuChannel>, Option<&PmuChannel>)> = BTreeMap::new();
    for ch in channels {
        let slot = terminals.entry(ch.terminal_id.as_str()).or_default();
        match ch.channel_name.as_str() {
            VOLTAGE => slot.0 = Some(ch),
            CURRENT => slot.1 = Some(ch),
            _ => {}
        }
    }

    let mut out = Vec::new();
    for (terminal, pair) in terminals {
        let (Some(va), Some(ia)) = pair else {
            log::warn!("terminal {terminal}: needs both {VOLTAGE} and {CURRENT}, skipping");
            continue;
        };
        if va.rate_hz != ia.rate_hz {
            return Err(Error::Segmentation(format!(
                "terminal {terminal}: channel rates differ ({} vs {})",
                va.rate_hz, ia.rate_hz
            )));
        }
        let n = window_len(plan.seg_len_s, va.rate_hz)
            .map_err(|_| Error::Segmentation(format!("seg_len_s {} x rate {} is not an integer sample count", plan.seg_len_s, va.rate_hz)))?;

        for (event_index, &event) in log.events().iter().enumerate() {
            for origin in plan.origins() {
                let (start, end) = plan.span(event, origin);
                let slice = |ch: &PmuChannel| -> Option<Vec<f64>> {
                    let i = ch.index_of(start);
                    let lo = usize::try_from(i).ok()?;
                    ch.samples.get(lo..lo + n).map(<[f64]>::to_vec)
                };
                match (slice(va), slice(ia)) {
                    (Some(va_m), Some(ia_m)) => out.push(Segment {
                        terminal_id: terminal.to_string(),
                        label: origin.into(),
                        start,
                        end,
                        event_index,
                        rate_hz: va.rate_hz,
                        va_m,
                        ia_m,
                    }),
                    _ => log::warn!(
                        "terminal {terminal} event {event_index}: {origin} segment [{}, {}) not covered, skipped",
                        start.to_rfc3339(),
                        end.to_rfc3339()
                    ),
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedSegment {
    pub segment: Segment,
    pub reason: String,
}

/// One entry of the dropped-segment JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub terminal: String,
    pub start: DateTime<Utc>,
    pub reason: String,
}

impl DroppedSegment {
    pub fn record(&self) -> DropRecord {
        DropRecord {
            terminal: self.segment.terminal_id.clone(),
            start: self.segment.start,
            reason: self.reason.clone(),
        }
    }
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Drops segments whose per-channel RMS reaches `mean + k * std` of the population.
///
/// The comparison is inclusive (with 1e-9 relative slack): with n segments a lone
/// outlier sits at exactly `sqrt(n - 1)` standard deviations, so a strict test
/// would never fire for n = 10, k = 3.
pub fn reject_outlier_segments(
    segments: Vec<Segment>,
    k: f64,
) -> Result<(Vec<Segment>, Vec<DroppedSegment>)> {
    if segments.len() < 2 {
        return Err(Error::Precondition(format!(
            "outlier rejection needs at least 2 segments, got {}",
            segments.len()
        )));
    }
    if !(k > 0.0) {
        return Err(Error::Precondition(format!("outlier k must be positive, got {k}")));
    }
    let n = segments.len() as f64;
    let rms_table: Vec<[f64; 2]> = segments
        .iter()
        .map(|s| [rms(&s.va_m), rms(&s.ia_m)])
        .collect();
    let mut limits = [(0.0, 0.0); 2];
    for (c, limit) in limits.iter_mut().enumerate() {
        let mean = rms_table.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = rms_table.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
        *limit = (mean, var.sqrt());
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (seg, r) in segments.into_iter().zip(rms_table) {
        let offending = [VOLTAGE, CURRENT].iter().enumerate().find(|&(c, _)| {
            let (mean, std) = limits[c];
            std > 1e-12 * mean.abs().max(1e-300) && r[c] - mean >= k * std * (1.0 - 1e-9)
        });
        match offending {
            Some((c, name)) => {
                let (mean, std) = limits[c];
                dropped.push(DroppedSegment {
                    reason: format!("{name} rms {:.6} >= mean {mean:.6} + {k} * std {std:.6}", r[c]),
                    segment: seg,
                });
            }
            None => kept.push(seg),
        }
    }
    Ok((kept, dropped))
}

#[derive(Debug, Clone, Copy)]
pub struct ScaleWindow<'a> {
    pub size_s: f64,
    pub va_m: &'a [f64],
    pub ia_m: &'a [f64],
}

impl<'a> ScaleWindow<'a> {
    pub fn channels(&self) -> [(&'static str, &'a [f64]); 2] {
        [(VOLTAGE, self.va_m), (CURRENT, self.ia_m)]
    }
}

/// One trailing-aligned window per scale, ascending by size.
#[derive(Debug, Clone)]
pub struct WindowSet<'a> {
    pub windows: Vec<ScaleWindow<'a>>,
}

impl<'a> WindowSet<'a> {
    pub fn get(&self, size_s: f64) -> Option<&ScaleWindow<'a>> {
        self.windows.iter().find(|w| w.size_s == size_s)
    }
}

pub fn slice_windows<'a>(segment: &'a Segment, spec: &WindowSpec) -> Result<WindowSet<'a>> {
    let lengths = spec.lengths(segment.rate_hz)?;
    let need = *lengths.last().expect("validated non-empty");
    let have = segment.len();
    if have < need || segment.ia_m.len() != have {
        return Err(Error::WindowTooShort {
            have: have.min(segment.ia_m.len()),
            need,
        });
    }
    let windows = spec
        .sizes_s
        .iter()
        .zip(lengths)
        .map(|(&size_s, len)| ScaleWindow {
            size_s,
            va_m: &segment.va_m[have - len..],
            ia_m: &segment.ia_m[have - len..],
        })
        .collect();
    Ok(WindowSet { windows })
}
