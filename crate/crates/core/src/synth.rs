//! Seeded PMU-like scenarios with labeled disturbances.
//!
//! Each channel is `nominal * (1 + baseline + signatures)` in per-unit terms.
//! The baseline is white noise plus an AR(1) process plus a slow
//! Ornstein-Uhlenbeck level wander. Pre-event signatures are a narrowband
//! burst whose amplitude ramps up over the last `onset_lead_s` seconds and a
//! linear drift over the last `drift_span_s` seconds. Post-event signatures are
//! a sag with exponential recovery and a damped oscillation. The shapes are
//! test fixtures, not a model of any real grid.

use std::f64::consts::PI;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{window_len, Class, DisturbanceLog, Origin, PmuChannel, SegmentPlan, CURRENT, VOLTAGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub white_sigma: f64,
    /// Stationary std of the AR(1) component.
    pub ar_sigma: f64,
    pub ar_phi: f64,
    /// Stationary std of the level wander.
    pub level_sigma: f64,
    pub level_tau_s: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            white_sigma: 1e-3,
            ar_sigma: 1e-3,
            ar_phi: 0.7,
            level_sigma: 2e-3,
            level_tau_s: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreSignature {
    /// Burst amplitude at the event, in units of `white_sigma`; the envelope rises linearly from zero.
    pub ramp_gain: f64,
    pub burst_freq_hz: f64,
    pub onset_lead_s: f64,
    /// Per-unit level change per second over the drift span.
    pub drift_slope: f64,
    pub drift_span_s: f64,
}

impl Default for PreSignature {
    fn default() -> Self {
        Self {
            ramp_gain: 2.5,
            burst_freq_hz: 0.1,
            onset_lead_s: 25.0,
            drift_slope: 1.3e-5,
            drift_span_s: 180.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostSignature {
    /// Per-unit dip at the event.
    pub sag_depth: f64,
    pub recovery_tau_s: f64,
    pub osc_freq_hz: f64,
    pub osc_amp: f64,
    pub osc_tau_s: f64,
}

impl Default for PostSignature {
    fn default() -> Self {
        Self {
            sag_depth: 0.01,
            recovery_tau_s: 20.0,
            osc_freq_hz: 0.1,
            osc_amp: 4e-3,
            osc_tau_s: 25.0,
        }
    }
}

/// Which signatures are injected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Coupling {
    pub burst: bool,
    pub drift: bool,
    pub sag: bool,
    pub oscillation: bool,
}

impl Default for Coupling {
    fn default() -> Self {
        Self {
            burst: true,
            drift: true,
            sag: true,
            oscillation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Nominal {
    pub va_m: f64,
    pub ia_m: f64,
}

impl Default for Nominal {
    fn default() -> Self {
        Self {
            va_m: 7200.0,
            ia_m: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub n_events: usize,
    pub rate_hz: f64,
    pub terminal_id: String,
    pub start: DateTime<Utc>,
    /// Minutes from the record start to the first event.
    pub lead_min: f64,
    pub spacing_min: f64,
    /// Minutes of record after the last event.
    pub tail_min: f64,
    pub nominal: Nominal,
    pub noise: NoiseConfig,
    /// Signature gain on the current channel relative to voltage (negative mirrors it).
    pub current_response: f64,
    pub pre: PreSignature,
    pub post: PostSignature,
    pub coupling: Coupling,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        default_scenario()
    }
}

/// 30 events an hour apart at 30 Hz, one terminal.
pub fn default_scenario() -> ScenarioConfig {
    ScenarioConfig {
        n_events: 30,
        rate_hz: 30.0,
        terminal_id: "T1".into(),
        start: Utc.with_ymd_and_hms(2020, 7, 10, 0, 0, 0).unwrap(),
        lead_min: 55.0,
        spacing_min: 60.0,
        tail_min: 5.0,
        nominal: Nominal::default(),
        noise: NoiseConfig::default(),
        current_response: -0.8,
        pre: PreSignature::default(),
        post: PostSignature::default(),
        coupling: Coupling::default(),
        seed: 0,
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Scenario(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Scenario(format!("{name} must be non-negative and finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_events == 0 {
            return Err(Error::Scenario("n_events must be at least 1".into()));
        }
        positive("rate_hz", self.rate_hz)?;
        positive("nominal.va_m", self.nominal.va_m)?;
        positive("nominal.ia_m", self.nominal.ia_m)?;
        let plan = SegmentPlan::default();
        window_len(plan.seg_len_s, self.rate_hz)
            .map_err(|_| Error::Scenario(format!("rate_hz {} gives a fractional segment length", self.rate_hz)))?;
        let first_offset = plan.offsets_min.iter().copied().max().unwrap_or(0) as f64 + plan.seg_len_s / 60.0;
        if self.spacing_min < 60.0 {
            return Err(Error::Scenario(format!(
                "spacing_min must be at least 60 so every normal segment exists, got {}",
                self.spacing_min
            )));
        }
        if !(self.lead_min >= first_offset) {
            return Err(Error::Scenario(format!("lead_min must be at least {first_offset}, got {}", self.lead_min)));
        }
        if !(self.tail_min * 60.0 >= plan.seg_len_s) {
            return Err(Error::Scenario(format!(
                "tail_min must cover the {} s post segment, got {}",
                plan.seg_len_s, self.tail_min
            )));
        }
        let n = &self.noise;
        non_negative("noise.white_sigma", n.white_sigma)?;
        non_negative("noise.ar_sigma", n.ar_sigma)?;
        non_negative("noise.level_sigma", n.level_sigma)?;
        positive("noise.level_tau_s", n.level_tau_s)?;
        if !(n.ar_phi.abs() < 1.0) {
            return Err(Error::Scenario(format!("noise.ar_phi must be in (-1, 1), got {}", n.ar_phi)));
        }
        let p = &self.pre;
        non_negative("pre.ramp_gain", p.ramp_gain)?;
        positive("pre.burst_freq_hz", p.burst_freq_hz)?;
        if p.burst_freq_hz >= self.rate_hz / 2.0 {
            return Err(Error::Scenario("pre.burst_freq_hz must be below Nyquist".into()));
        }
        positive("pre.onset_lead_s", p.onset_lead_s)?;
        positive("pre.drift_span_s", p.drift_span_s)?;
        if !p.drift_slope.is_finite() {
            return Err(Error::Scenario("pre.drift_slope must be finite".into()));
        }
        if p.onset_lead_s > plan.seg_len_s || p.drift_span_s > plan.seg_len_s {
            return Err(Error::Scenario("pre signatures must fit in the pre segment".into()));
        }
        let q = &self.post;
        non_negative("post.sag_depth", q.sag_depth)?;
        positive("post.recovery_tau_s", q.recovery_tau_s)?;
        positive("post.osc_freq_hz", q.osc_freq_hz)?;
        non_negative("post.osc_amp", q.osc_amp)?;
        positive("post.osc_tau_s", q.osc_tau_s)?;
        if !self.current_response.is_finite() {
            return Err(Error::Scenario("current_response must be finite".into()));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        let minutes = self.lead_min + self.spacing_min * (self.n_events - 1) as f64 + self.tail_min;
        (minutes * 60.0 * self.rate_hz).round() as usize
    }

    pub fn event_times(&self) -> Vec<DateTime<Utc>> {
        (0..self.n_events)
            .map(|i| {
                let min = self.lead_min + self.spacing_min * i as f64;
                self.start + Duration::microseconds((min * 60e6).round() as i64)
            })
            .collect()
    }
}

/// Expected label of one segment the scenario produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub segment_id: String,
    pub terminal_id: String,
    pub event_index: usize,
    pub origin: Origin,
    pub class: Class,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub channels: Vec<PmuChannel>,
    pub log: DisturbanceLog,
    pub truth: Vec<TruthEntry>,
}

pub fn truth(cfg: &ScenarioConfig, plan: &SegmentPlan) -> Vec<TruthEntry> {
    let len = Duration::microseconds((plan.seg_len_s * 1e6).round() as i64);
    let mut out = Vec::new();
    for (event_index, &e) in cfg.event_times().iter().enumerate() {
        for origin in plan.origins() {
            let (start, end) = match origin {
                Origin::Normal(m) => (e - Duration::minutes(m as i64) - len, e - Duration::minutes(m as i64)),
                Origin::Pre => (e - len, e),
                Origin::Post => (e, e + len),
            };
            out.push(TruthEntry {
                segment_id: format!("{}-e{event_index}-{origin}", cfg.terminal_id),
                terminal_id: cfg.terminal_id.clone(),
                event_index,
                origin,
                class: origin.class(),
                start,
                end,
            });
        }
    }
    out
}

/// Baseline noise for one channel, per-unit.
fn baseline(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let nz = &cfg.noise;
    let dt = 1.0 / cfg.rate_hz;
    let ar_innov = nz.ar_sigma * (1.0 - nz.ar_phi * nz.ar_phi).sqrt();
    let a = (-dt / nz.level_tau_s).exp();
    let level_innov = nz.level_sigma * (1.0 - a * a).sqrt();
    let mut ar = nz.ar_sigma * rng.sample::<f64, _>(StandardNormal);
    let mut level = nz.level_sigma * rng.sample::<f64, _>(StandardNormal);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (e1, e2, e3): (f64, f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        ar = nz.ar_phi * ar + ar_innov * e1;
        level = a * level + level_innov * e2;
        out.push(level + ar + nz.white_sigma * e3);
    }
    out
}

/// Adds the pre/post signatures of one event (per-unit) to `x`, scaled by `gain`.
fn inject(cfg: &ScenarioConfig, x: &mut [f64], event_idx: usize, gain: f64, phase: f64) {
    let rate = cfg.rate_hz;
    let c = &cfg.coupling;
    let p = &cfg.pre;
    let q = &cfg.post;
    if c.burst {
        let lead = (p.onset_lead_s * rate).round() as usize;
        let amp = p.ramp_gain * cfg.noise.white_sigma;
        for j in 0..lead.min(event_idx) {
            // j samples before the event; envelope reaches `amp` at the event
            let t = -((j + 1) as f64) / rate;
            let env = amp * (1.0 - (j + 1) as f64 / lead as f64);
            x[event_idx - 1 - j] += gain * env * (2.0 * PI * p.burst_freq_hz * t + phase).sin();
        }
    }
    if c.drift {
        let span = (p.drift_span_s * rate).round() as usize;
        for j in 0..span.min(event_idx) {
            let t = (span - j) as f64 / rate;
            x[event_idx - 1 - j] += gain * p.drift_slope * t;
        }
    }
    let post_len = ((5.0 * q.recovery_tau_s.max(q.osc_tau_s) * 2.0) * rate).round() as usize;
    for j in 0..post_len.min(x.len().saturating_sub(event_idx)) {
        let t = j as f64 / rate;
        let mut v = 0.0;
        if c.sag {
            v -= q.sag_depth * (-t / q.recovery_tau_s).exp();
        }
        if c.oscillation {
            v += q.osc_amp * (-t / q.osc_tau_s).exp() * (2.0 * PI * q.osc_freq_hz * t).sin();
        }
        x[event_idx + j] += gain * v;
    }
}

pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let n = cfg.n_samples();
    let events = cfg.event_times();
    let t0 = cfg.start;
    let probe = PmuChannel {
        terminal_id: cfg.terminal_id.clone(),
        channel_name: VOLTAGE.into(),
        rate_hz: cfg.rate_hz,
        t0,
        samples: Vec::new(),
    };
    let mut phase_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    phase_rng.set_stream(2);
    let phases: Vec<f64> = events.iter().map(|_| phase_rng.random::<f64>() * 2.0 * PI).collect();

    let mut channels = Vec::with_capacity(2);
    for (stream, (name, nominal, gain)) in [
        (VOLTAGE, cfg.nominal.va_m, 1.0),
        (CURRENT, cfg.nominal.ia_m, cfg.current_response),
    ]
    .into_iter()
    .enumerate()
    {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream as u64);
        let mut x = baseline(cfg, &mut rng, n);
        for (&e, &phase) in events.iter().zip(&phases) {
            let idx = usize::try_from(probe.index_of(e)).expect("events lie after the record start");
            inject(cfg, &mut x, idx, gain, phase);
        }
        let samples: Vec<f64> = x.into_iter().map(|v| nominal * (1.0 + v)).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Scenario("generated a non-finite sample".into()));
        }
        channels.push(PmuChannel {
            terminal_id: cfg.terminal_id.clone(),
            channel_name: name.into(),
            rate_hz: cfg.rate_hz,
            t0,
            samples,
        });
    }
    Ok(Scenario {
        channels,
        log: DisturbanceLog::new(events)?,
        truth: truth(cfg, &SegmentPlan::default()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::segment_by_events;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_events: 5,
            rate_hz: 5.0,
            ..default_scenario()
        }
    }

    #[test]
    fn five_events_give_35_segments() {
        let s = generate(&small()).unwrap();
        assert_eq!(s.log.len(), 5);
        let segs = segment_by_events(&s.channels, &s.log, &SegmentPlan::default()).unwrap();
        assert_eq!(segs.len(), 35);
        assert_eq!(s.truth.len(), 35);
        for (seg, t) in segs.iter().zip(&s.truth) {
            assert_eq!(seg.id(), t.segment_id);
            assert_eq!(seg.label.class, t.class);
            assert_eq!(seg.start, t.start);
        }
    }

    #[test]
    fn lengths_and_determinism() {
        let cfg = small();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        let expected = ((55.0 + 4.0 * 60.0 + 5.0) * 60.0 * 5.0) as usize;
        for (x, y) in a.channels.iter().zip(&b.channels) {
            assert_eq!(x.samples.len(), expected);
            assert_eq!(x.samples, y.samples);
            assert!(x.samples.iter().all(|v| v.is_finite()));
        }
        let c = generate(&ScenarioConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.channels[0].samples, c.channels[0].samples);
    }

    #[test]
    fn validation() {
        assert!(default_scenario().validate().is_ok());
        assert!(generate(&ScenarioConfig { spacing_min: 30.0, ..small() }).is_err());
        assert!(generate(&ScenarioConfig { n_events: 0, ..small() }).is_err());
        let bad_noise = NoiseConfig { ar_phi: 1.0, ..NoiseConfig::default() };
        assert!(generate(&ScenarioConfig { noise: bad_noise, ..small() }).is_err());
    }

    #[test]
    fn default_counts() {
        assert_eq!(truth(&default_scenario(), &SegmentPlan::default()).len(), 210);
    }
}
