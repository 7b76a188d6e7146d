//! Synthetic measurements for a person walking a reference trajectory.
//!
//! RSS follows the filter's own log-distance model plus Gaussian shadowing.
//! A proximity sensor returns a range only when the person is inside its
//! detection cone and within `max_range`; the value carries the bias table
//! evaluated at the true distance plus Gaussian noise from the cubic model.
//! Every anchor and sensor draws from its own random stream, so adding or
//! removing a sensor never changes the RSS samples.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimation::{self, Anchor, FilterInit, ProcessNoise};
use crate::fusion::Infrastructure;
use crate::geometry::{Point2, Polyline};
use crate::math;
use crate::measurement::{Measurement, MeasurementKind};
use crate::proximity::{SensorModel, MIN_CORRECTED_RANGE};
use crate::rng::SimRng;

/// Effective detection half-angle observed for a person-sized target.
///
/// The declared 27 degree cone is 2 * 3 * tan(13.5°) ≈ 1.44 m wide at 3 m;
/// the observed cone is about 0.8 m narrower there, so its half-width is
/// ≈ 0.32 m and the half-angle atan(0.32 / 3) ≈ 6.1°.
pub const MEASURED_FOV_HALF_ANGLE_DEG: f64 = 6.1;

/// Offset of sensor stream indices from anchor stream indices.
const SENSOR_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FovMode {
    /// Use each sensor's own `fov_half_angle`.
    Declared,
    /// Narrowed cone with the given half-angle in radians (never wider than
    /// the sensor's declared cone).
    Measured(f64),
}

impl FovMode {
    pub fn measured() -> Self {
        FovMode::Measured(MEASURED_FOV_HALF_ANGLE_DEG.to_radians())
    }

    pub fn effective_half_angle(self, sensor: &SensorModel) -> f64 {
        match self {
            FovMode::Declared => sensor.fov_half_angle,
            FovMode::Measured(half) => half.min(sensor.fov_half_angle),
        }
    }
}

/// Full width of a cone with the given half-angle at distance `d`.
pub fn cone_width(half_angle: f64, d: f64) -> f64 {
    2.0 * d * math::tan(half_angle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub infrastructure: Infrastructure,
    pub trajectory: Polyline,
    /// m/s
    pub walk_speed: f64,
    /// Hz
    pub tick_rate: f64,
    pub master_seed: u64,
    pub process_noise: ProcessNoise,
    pub filter_init: FilterInit,
    pub fov_mode: FovMode,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.infrastructure.validate()?;
        if self.infrastructure.anchors.len() < 3 {
            return Err(Error::Config(format!(
                "at least 3 anchors are needed, got {}",
                self.infrastructure.anchors.len()
            )));
        }
        if !(self.tick_rate > 0.0 && self.tick_rate.is_finite()) {
            return Err(Error::Config(format!(
                "tick_rate must be positive, got {}",
                self.tick_rate
            )));
        }
        if !(self.walk_speed > 0.0 && self.walk_speed.is_finite()) {
            return Err(Error::Config(format!(
                "walk speed must be positive, got {}",
                self.walk_speed
            )));
        }
        if !(self.process_noise.accel_psd > 0.0 && self.process_noise.accel_psd.is_finite()) {
            return Err(Error::Config("accel_psd must be positive".into()));
        }
        if let FovMode::Measured(half) = self.fov_mode {
            if !(half > 0.0 && half < core::f64::consts::FRAC_PI_2) {
                return Err(Error::Config(
                    "measured FoV half-angle must be in (0, 90) degrees".into(),
                ));
            }
        }
        self.filter_init.validate()
    }
}

/// Room-scale layout used by the CLI defaults and the acceptance runs.
///
/// An 8 m × 6 m room with an anchor in each corner, a three-segment walk of
/// 12 m (6 m east, 3 m north, 3 m west) and two proximity sensors on
/// adjacent walls: one on the west wall looking east along the first leg and
/// one on the north wall looking south along the second leg.
pub fn default_scenario() -> Scenario {
    let anchor = |id: &str, x: f64, y: f64| Anchor {
        id: id.into(),
        position: Point2::new(x, y),
        tx_ref_power: DEFAULT_TX_REF_POWER,
        path_loss_exponent: DEFAULT_PATH_LOSS_EXPONENT,
        rss_noise_stddev: DEFAULT_RSS_NOISE_STDDEV,
    };
    let infrastructure = Infrastructure {
        anchors: vec![
            anchor("A1", 0.0, 0.0),
            anchor("A2", 8.0, 0.0),
            anchor("A3", 8.0, 6.0),
            anchor("A4", 0.0, 6.0),
        ],
        sensors: vec![
            SensorModel::with_defaults("S1", Point2::new(0.0, 1.5), 0f64.to_radians()),
            SensorModel::with_defaults("S2", Point2::new(7.0, 6.0), (-90f64).to_radians()),
        ],
    };
    let trajectory = Polyline::new(vec![
        Point2::new(1.0, 1.5),
        Point2::new(7.0, 1.5),
        Point2::new(7.0, 4.5),
        Point2::new(4.0, 4.5),
    ])
    .expect("default trajectory is valid");
    Scenario {
        infrastructure,
        trajectory,
        walk_speed: 1.0,
        tick_rate: 10.0,
        master_seed: 1,
        process_noise: ProcessNoise::default(),
        filter_init: FilterInit::default(),
        fov_mode: FovMode::measured(),
    }
}

pub const DEFAULT_TX_REF_POWER: f64 = -59.0;
pub const DEFAULT_PATH_LOSS_EXPONENT: f64 = 2.0;
pub const DEFAULT_RSS_NOISE_STDDEV: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthSample {
    pub timestamp: f64,
    pub position: Point2,
}

/// Constant-speed walk along `line` sampled every `1 / rate` seconds,
/// starting at the first vertex and stopping at or before the last one.
pub fn gen_trajectory(line: &Polyline, speed: f64, rate: f64) -> Vec<GroundTruthSample> {
    let duration = line.length() / speed;
    let n = math::floor(duration * rate + 1e-9) as usize + 1;
    (0..n)
        .map(|k| {
            let t = k as f64 / rate;
            GroundTruthSample {
                timestamp: t,
                position: line.point_at(speed * t),
            }
        })
        .collect()
}

/// RSS sample of anchor `a` for a tag at `truth`. Noise-free without `rng`.
pub fn simulate_rss(
    timestamp: f64,
    truth: Point2,
    a: &Anchor,
    rng: Option<&mut SimRng>,
) -> Measurement {
    let mean = estimation::rss_model(truth, a);
    let value = match rng {
        Some(rng) => rng.normal(mean, a.rss_noise_stddev),
        None => mean,
    };
    Measurement {
        timestamp,
        source_id: a.id.clone(),
        kind: MeasurementKind::Rss,
        value,
    }
}

/// Whether a target at `truth` lies inside the sensor's detection region.
pub fn detects(truth: Point2, m: &SensorModel, fov: FovMode) -> bool {
    let offset = truth - m.position;
    let d = offset.norm();
    d > 0.0 && d <= m.max_range && m.boresight.angle_to(offset) <= fov.effective_half_angle(m)
}

/// Range return of sensor `m` for a person at `truth`, if detected.
/// Noise-free without `rng`.
pub fn simulate_range(
    timestamp: f64,
    truth: Point2,
    m: &SensorModel,
    fov: FovMode,
    rng: Option<&mut SimRng>,
) -> Option<Measurement> {
    if !detects(truth, m, fov) {
        return None;
    }
    let d = truth.distance(m.position);
    let biased = d + m.bias_curve.at(d);
    let value = match rng {
        Some(rng) => rng
            .normal(biased, m.stddev.sigma(d))
            .max(MIN_CORRECTED_RANGE),
        None => biased,
    };
    Some(Measurement {
        timestamp,
        source_id: m.id.clone(),
        kind: MeasurementKind::Range,
        value,
    })
}

/// Ground truth and the measurement stream of one simulated walk.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub truth: Vec<GroundTruthSample>,
    /// Sorted by (timestamp, source id).
    pub measurements: Vec<Measurement>,
}

pub fn run_scenario(sc: &Scenario) -> Result<SimulationRun> {
    sc.validate()?;
    let infra = &sc.infrastructure;
    let truth = gen_trajectory(&sc.trajectory, sc.walk_speed, sc.tick_rate);

    let mut anchor_rngs: Vec<SimRng> = (0..infra.anchors.len() as u64)
        .map(|i| SimRng::derived(sc.master_seed, i))
        .collect();
    let mut sensor_rngs: Vec<SimRng> = (0..infra.sensors.len() as u64)
        .map(|j| SimRng::derived(sc.master_seed, SENSOR_STREAM_BASE + j))
        .collect();

    let mut measurements = Vec::with_capacity(truth.len() * (infra.anchors.len() + 1));
    for sample in &truth {
        let start = measurements.len();
        for (a, rng) in infra.anchors.iter().zip(&mut anchor_rngs) {
            measurements.push(simulate_rss(
                sample.timestamp,
                sample.position,
                a,
                Some(rng),
            ));
        }
        for (s, rng) in infra.sensors.iter().zip(&mut sensor_rngs) {
            if let Some(m) =
                simulate_range(sample.timestamp, sample.position, s, sc.fov_mode, Some(rng))
            {
                measurements.push(m);
            }
        }
        measurements[start..].sort_by(|a, b| a.source_id.cmp(&b.source_id));
    }
    Ok(SimulationRun {
        truth,
        measurements,
    })
}
