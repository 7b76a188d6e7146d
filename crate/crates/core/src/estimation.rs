//! BLE tracking: constant-velocity extended Kalman filter over RSS samples.
//!
//! The state is `[x, y, vx, vy]`. Acceleration is continuous white noise with
//! power spectral density `accel_psd`, which gives the per-axis discrete
//! process noise
//!
//! ```text
//! Q(dt) = accel_psd * | dt^3/3  dt^2/2 |
//!                     | dt^2/2  dt     |
//! ```
//!
//! RSS follows the log-distance path-loss model
//! `rss(d) = tx_ref_power - 10 n log10(d / 1 m)` with distances below
//! [`MIN_ANCHOR_DISTANCE`] clamped.

use alloc::format;
use alloc::string::String;

use nalgebra::{DMatrix, DVector, Dyn, Matrix4, OMatrix, Vector4, U4};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::math;
use crate::measurement::{Measurement, MeasurementKind, PositionEstimate};

/// Distances to an anchor below this are treated as this distance.
pub const MIN_ANCHOR_DISTANCE: f64 = 0.1;

pub const DEFAULT_ACCEL_PSD: f64 = 0.5;

/// Filter state: mean `[x, y, vx, vy]`, covariance and time of validity.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate {
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub timestamp: f64,
}

impl StateEstimate {
    pub fn new(state: Vector4<f64>, covariance: Matrix4<f64>, timestamp: f64) -> Self {
        Self {
            state,
            covariance,
            timestamp,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Point2 {
        Point2::new(self.state[2], self.state[3])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub id: String,
    pub position: Point2,
    /// RSS at the 1 m reference distance, dBm.
    pub tx_ref_power: f64,
    pub path_loss_exponent: f64,
    /// Shadowing standard deviation, dB.
    pub rss_noise_stddev: f64,
}

impl Anchor {
    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.tx_ref_power.is_finite() {
            return Err(Error::Config(format!(
                "anchor `{}`: non-finite parameter",
                self.id
            )));
        }
        if !(self.path_loss_exponent > 0.0 && self.path_loss_exponent.is_finite()) {
            return Err(Error::Config(format!(
                "anchor `{}`: path-loss exponent must be positive",
                self.id
            )));
        }
        if !(self.rss_noise_stddev > 0.0 && self.rss_noise_stddev.is_finite()) {
            return Err(Error::Config(format!(
                "anchor `{}`: RSS noise stddev must be positive",
                self.id
            )));
        }
        Ok(())
    }
}

/// White-noise acceleration intensity, (m/s²)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoise {
    pub accel_psd: f64,
}

impl ProcessNoise {
    pub fn new(accel_psd: f64) -> Result<Self> {
        if !(accel_psd > 0.0 && accel_psd.is_finite()) {
            return Err(Error::Config(format!(
                "accel_psd must be positive, got {accel_psd}"
            )));
        }
        Ok(Self { accel_psd })
    }
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self {
            accel_psd: DEFAULT_ACCEL_PSD,
        }
    }
}

/// Prior used to start the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterInit {
    /// Starting position; `None` means the centroid of the anchors.
    pub position: Option<Point2>,
    pub position_var: f64,
    pub velocity_var: f64,
}

impl Default for FilterInit {
    fn default() -> Self {
        Self {
            position: None,
            position_var: 25.0,
            velocity_var: 1.0,
        }
    }
}

impl FilterInit {
    pub fn validate(&self) -> Result<()> {
        if !(self.position_var > 0.0 && self.velocity_var > 0.0)
            || !self.position_var.is_finite()
            || !self.velocity_var.is_finite()
        {
            return Err(Error::Config(format!(
                "initial variances must be positive, got ({}, {})",
                self.position_var, self.velocity_var
            )));
        }
        if matches!(self.position, Some(p) if !p.is_finite()) {
            return Err(Error::Config("initial position is not finite".into()));
        }
        Ok(())
    }
}

/// Zero-velocity state at the prior position with a diagonal covariance.
pub fn initial_state(
    anchors: &[Anchor],
    init: &FilterInit,
    timestamp: f64,
) -> Result<StateEstimate> {
    init.validate()?;
    let position = match init.position {
        Some(p) => p,
        None => {
            if anchors.is_empty() {
                return Err(Error::Empty("anchors"));
            }
            let sum = anchors
                .iter()
                .fold(Point2::ORIGIN, |acc, a| acc + a.position);
            sum * (1.0 / anchors.len() as f64)
        }
    };
    let covariance = Matrix4::from_diagonal(&Vector4::new(
        init.position_var,
        init.position_var,
        init.velocity_var,
        init.velocity_var,
    ));
    Ok(StateEstimate::new(
        Vector4::new(position.x, position.y, 0.0, 0.0),
        covariance,
        timestamp,
    ))
}

/// Constant-velocity transition matrix.
pub fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Discretized white-noise-acceleration covariance.
pub fn process_noise(dt: f64, q: ProcessNoise) -> Matrix4<f64> {
    let q11 = q.accel_psd * dt * dt * dt / 3.0;
    let q12 = q.accel_psd * dt * dt / 2.0;
    let q22 = q.accel_psd * dt;
    let mut m = Matrix4::zeros();
    for axis in 0..2 {
        let (p, v) = (axis, axis + 2);
        m[(p, p)] = q11;
        m[(p, v)] = q12;
        m[(v, p)] = q12;
        m[(v, v)] = q22;
    }
    m
}

/// Time update over `dt` seconds.
pub fn predict(s: &StateEstimate, dt: f64, q: ProcessNoise) -> Result<StateEstimate> {
    if dt.is_nan() || dt < 0.0 {
        return Err(Error::Ordering {
            from: s.timestamp,
            to: s.timestamp + dt,
        });
    }
    if dt == 0.0 {
        return Ok(s.clone());
    }
    let f = transition(dt);
    let state = f * s.state;
    let covariance = symmetrize(f * s.covariance * f.transpose() + process_noise(dt, q));
    Ok(StateEstimate::new(state, covariance, s.timestamp + dt))
}

fn clamped_offset(pos: Point2, a: &Anchor) -> (Point2, f64) {
    let offset = pos - a.position;
    (offset, offset.norm())
}

/// Expected RSS (dBm) at `pos` from anchor `a`.
pub fn rss_model(pos: Point2, a: &Anchor) -> f64 {
    let (_, d) = clamped_offset(pos, a);
    let d = d.max(MIN_ANCHOR_DISTANCE);
    a.tx_ref_power - 10.0 * a.path_loss_exponent * math::log10(d)
}

/// Gradient of [`rss_model`] with respect to `(x, y)`; zero inside the
/// clamped disc.
pub fn rss_gradient(pos: Point2, a: &Anchor) -> Point2 {
    let (offset, d) = clamped_offset(pos, a);
    if d < MIN_ANCHOR_DISTANCE {
        return Point2::ORIGIN;
    }
    // d/dp [-10 n log10 |p - a|] = -10 n / ln 10 * (p - a) / |p - a|^2
    let k = -10.0 * a.path_loss_exponent / (core::f64::consts::LN_10 * d * d);
    offset * k
}

fn find_anchor<'a>(anchors: &'a [Anchor], id: &str) -> Result<&'a Anchor> {
    anchors
        .iter()
        .find(|a| a.id == id)
        .ok_or_else(|| Error::UnknownSource(id.into()))
}

/// Measurement update with every RSS sample of one tick stacked into a
/// single vector observation. Uses the Joseph form and symmetrizes.
pub fn update(
    s: &StateEstimate,
    batch: &[Measurement],
    anchors: &[Anchor],
) -> Result<StateEstimate> {
    if batch.is_empty() {
        return Ok(s.clone());
    }
    let n = batch.len();
    let pos = s.position();
    let mut h = OMatrix::<f64, Dyn, U4>::zeros(n);
    let mut innovation = DVector::<f64>::zeros(n);
    let mut r = DMatrix::<f64>::zeros(n, n);
    for (i, m) in batch.iter().enumerate() {
        if m.kind != MeasurementKind::Rss {
            return Err(Error::Data(format!(
                "`{}`: {} sample in an RSS update",
                m.source_id,
                m.kind.as_str()
            )));
        }
        let anchor = find_anchor(anchors, &m.source_id)?;
        let grad = rss_gradient(pos, anchor);
        h[(i, 0)] = grad.x;
        h[(i, 1)] = grad.y;
        innovation[i] = m.value - rss_model(pos, anchor);
        r[(i, i)] = anchor.rss_noise_stddev * anchor.rss_noise_stddev;
    }

    let hp = &h * s.covariance;
    let innovation_cov = &hp * h.transpose() + &r;
    let chol = innovation_cov
        .cholesky()
        .ok_or_else(|| Error::Data("innovation covariance is not positive definite".into()))?;
    // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
    let gain = chol.solve(&hp).transpose();

    let state = s.state + &gain * innovation;
    let i_kh = Matrix4::identity() - &gain * &h;
    let joseph = i_kh * s.covariance * i_kh.transpose() + &gain * r * gain.transpose();
    let covariance = symmetrize(Matrix4::from_iterator(joseph.iter().copied()));
    Ok(StateEstimate::new(state, covariance, s.timestamp))
}

/// Position and its per-axis variance read off the filter state.
pub fn ble_estimate(s: &StateEstimate) -> PositionEstimate {
    PositionEstimate {
        position: s.position(),
        var_x: s.covariance[(0, 0)],
        var_y: s.covariance[(1, 1)],
    }
}

fn symmetrize(m: Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}
