//! Per-tick hybrid localization.
//!
//! Each tick runs the two branches independently: the EKF is predicted to the
//! tick time and corrected with the RSS samples, while every range return is
//! turned into a boresight point estimate and the points are combined by
//! inverse-variance weighting. The final output is the inverse-variance
//! weighted mean of the two partial results. By default the fused position is
//! not fed back into the filter.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::estimation::{self, Anchor, FilterInit, ProcessNoise, StateEstimate};
use crate::measurement::{Measurement, MeasurementKind, PositionEstimate};
use crate::proximity::{self, SensorModel};

/// Velocity variance added when the fused position is fed back, (m/s)².
pub const FEEDBACK_VELOCITY_INFLATION: f64 = 0.25;

/// Anchors and proximity sensors of one deployment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Infrastructure {
    pub anchors: Vec<Anchor>,
    pub sensors: Vec<SensorModel>,
}

impl Infrastructure {
    pub fn new(anchors: Vec<Anchor>, sensors: Vec<SensorModel>) -> Result<Self> {
        let infra = Self { anchors, sensors };
        infra.validate()?;
        Ok(infra)
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.anchors {
            a.validate()?;
        }
        for s in &self.sensors {
            s.validate()?;
        }
        let mut ids: Vec<&str> = self
            .anchors
            .iter()
            .map(|a| a.id.as_str())
            .chain(self.sensors.iter().map(|s| s.id.as_str()))
            .collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate id `{}`", w[0])));
        }
        for (i, a) in self.anchors.iter().enumerate() {
            if self.anchors[..i].iter().any(|b| b.position == a.position) {
                return Err(Error::Config(format!(
                    "anchor `{}` shares its position with another anchor",
                    a.id
                )));
            }
        }
        Ok(())
    }

    pub fn anchor(&self, id: &str) -> Option<&Anchor> {
        self.anchors.iter().find(|a| a.id == id)
    }

    pub fn sensor(&self, id: &str) -> Option<&SensorModel> {
        self.sensors.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalizationMode {
    /// EKF output only; range samples are ignored.
    BleOnly,
    /// EKF output fused with the proximity-sensor estimate.
    Hybrid,
}

impl LocalizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LocalizationMode::BleOnly => "ble",
            LocalizationMode::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HybridOptions {
    pub process_noise: ProcessNoise,
    /// Reset the filter mean to the fused position after each tick.
    pub feedback: bool,
}

/// Everything produced for one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridOutput {
    pub timestamp: f64,
    pub ble_only: PositionEstimate,
    pub proximity: Option<PositionEstimate>,
    pub fused: PositionEstimate,
    /// Sorted ids of sensors whose return produced an estimate.
    pub detecting_sensor_ids: Vec<String>,
}

/// Inverse-variance fusion of the BLE and proximity estimates; the BLE
/// estimate passes through when no sensor detected the user.
pub fn fuse(ble: PositionEstimate, prox: Option<PositionEstimate>) -> Result<PositionEstimate> {
    match prox {
        None => Ok(ble),
        Some(p) => proximity::combine_sensor_estimates(&[ble, p]),
    }
}

/// One step of the hybrid pipeline for all measurements taken at
/// `timestamp`. Returns the new filter state and the tick's output.
pub fn hybrid_step(
    state: &StateEstimate,
    timestamp: f64,
    tick: &[Measurement],
    infra: &Infrastructure,
    options: &HybridOptions,
) -> Result<(StateEstimate, HybridOutput)> {
    if timestamp < state.timestamp {
        return Err(Error::Ordering {
            from: state.timestamp,
            to: timestamp,
        });
    }
    if let Some(m) = tick.iter().find(|m| m.timestamp != timestamp) {
        return Err(Error::Data(format!(
            "`{}` at {} s does not belong to the tick at {} s",
            m.source_id, m.timestamp, timestamp
        )));
    }

    let (rss, ranges): (Vec<Measurement>, Vec<Measurement>) = tick
        .iter()
        .cloned()
        .partition(|m| m.kind == MeasurementKind::Rss);

    let predicted = estimation::predict(state, timestamp - state.timestamp, options.process_noise)?;
    let mut updated = estimation::update(&predicted, &rss, &infra.anchors)?;
    let ble_only = estimation::ble_estimate(&updated);

    let mut partials = Vec::new();
    let mut detecting_sensor_ids = Vec::new();
    for m in &ranges {
        let sensor = infra
            .sensor(&m.source_id)
            .ok_or_else(|| Error::UnknownSource(m.source_id.clone()))?;
        if let Some(e) = proximity::sensor_estimate(sensor, m.value) {
            partials.push(e);
            detecting_sensor_ids.push(m.source_id.clone());
        }
    }
    detecting_sensor_ids.sort_unstable();
    detecting_sensor_ids.dedup();

    let prox = if partials.is_empty() {
        None
    } else {
        Some(proximity::combine_sensor_estimates(&partials)?)
    };
    let fused = fuse(ble_only, prox)?;

    if options.feedback && prox.is_some() {
        updated = feed_back(&updated, &fused);
    }

    Ok((
        updated,
        HybridOutput {
            timestamp,
            ble_only,
            proximity: prox,
            fused,
            detecting_sensor_ids,
        },
    ))
}

fn feed_back(s: &StateEstimate, fused: &PositionEstimate) -> StateEstimate {
    let mut state = s.state;
    state[0] = fused.position.x;
    state[1] = fused.position.y;
    let mut cov = Matrix4::zeros();
    cov[(0, 0)] = fused.var_x;
    cov[(1, 1)] = fused.var_y;
    for i in 2..4 {
        for j in 2..4 {
            cov[(i, j)] = s.covariance[(i, j)];
        }
        cov[(i, i)] += FEEDBACK_VELOCITY_INFLATION;
    }
    StateEstimate::new(state, cov, s.timestamp)
}

/// Runs the pipeline over a time-ordered stream, one output per distinct
/// timestamp. The filter starts at the first timestamp from `init`.
pub fn localize(
    stream: &[Measurement],
    infra: &Infrastructure,
    init: &FilterInit,
    options: &HybridOptions,
    mode: LocalizationMode,
) -> Result<Vec<HybridOutput>> {
    let Some(first) = stream.first() else {
        return Ok(Vec::new());
    };
    let mut state = estimation::initial_state(&infra.anchors, init, first.timestamp)?;
    let options = match mode {
        LocalizationMode::BleOnly => HybridOptions {
            feedback: false,
            ..*options
        },
        LocalizationMode::Hybrid => *options,
    };

    let mut outputs = Vec::new();
    let mut start = 0;
    while start < stream.len() {
        let t = stream[start].timestamp;
        let end = start
            + stream[start..]
                .iter()
                .position(|m| m.timestamp != t)
                .unwrap_or(stream.len() - start);
        if end < stream.len() && stream[end].timestamp < t {
            return Err(Error::Ordering {
                from: t,
                to: stream[end].timestamp,
            });
        }
        let tick: Vec<Measurement> = stream[start..end]
            .iter()
            .filter(|m| mode == LocalizationMode::Hybrid || m.kind == MeasurementKind::Rss)
            .cloned()
            .collect();
        let (next, out) = hybrid_step(&state, t, &tick, infra, &options)?;
        state = next;
        outputs.push(out);
        start = end;
    }
    Ok(outputs)
}
