//! Laser time-of-flight proximity sensors: ranging error model, bias
//! correction and the boresight position estimate.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::math;
use crate::measurement::PositionEstimate;

/// Floor applied to the cubic standard-deviation model, meters.
pub const SIGMA_MIN: f64 = 0.005;

/// Smallest distance a bias correction may return, meters.
pub const MIN_CORRECTED_RANGE: f64 = 1e-3;

/// Default half-angle of the sensor cone: half of the declared 27 degree FoV.
pub const DEFAULT_FOV_HALF_ANGLE_DEG: f64 = 13.5;

/// Largest distance at which a person is reliably ranged, meters.
pub const DEFAULT_MAX_RANGE: f64 = 3.5;

/// Ranging bias keyed on measured distance: a few centimeters up to 2 m,
/// then rising linearly to 30 cm at 3.5 m.
pub const DEFAULT_BIAS_TABLE: [(f64, f64); 4] =
    [(0.5, 0.01), (1.0, 0.02), (2.0, 0.03), (3.5, 0.30)];

/// Calibration points the default standard-deviation cubic is fitted to.
pub const DEFAULT_STDDEV_SAMPLES: [(f64, f64); 4] =
    [(0.5, 0.02), (2.0, 0.03), (2.5, 0.05), (3.5, 0.20)];

/// Least-squares cubic through [`DEFAULT_STDDEV_SAMPLES`]
/// (`hybridloc fit-sensor crates/cli/scenarios/default_stddev_calibration.csv`).
pub const DEFAULT_STDDEV_COEFFS: [f64; 4] = [
    -0.013_888_888_888_888_902,
    0.101_944_444_444_444_46,
    -0.077_777_777_777_777_78,
    0.018_888_888_888_888_89,
];

/// Piecewise-linear bias table, flat beyond its ends. An empty table is
/// zero bias.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BiasCurve {
    points: Vec<(f64, f64)>,
}

impl BiasCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|(d, b)| !d.is_finite() || !b.is_finite()) {
            return Err(Error::Config("bias table has non-finite entries".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "bias table distances must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn default_table() -> Self {
        Self {
            points: DEFAULT_BIAS_TABLE.to_vec(),
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Bias at distance `d`, meters.
    pub fn at(&self, d: f64) -> f64 {
        let pts = &self.points;
        match pts.len() {
            0 => 0.0,
            _ if d <= pts[0].0 => pts[0].1,
            n if d >= pts[n - 1].0 => pts[n - 1].1,
            _ => {
                let i = pts.partition_point(|&(x, _)| x <= d);
                let (x0, y0) = pts[i - 1];
                let (x1, y1) = pts[i];
                y0 + (y1 - y0) * (d - x0) / (x1 - x0)
            }
        }
    }
}

/// `sigma(d) = c0 + c1 d + c2 d^2 + c3 d^3`, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StddevCubic {
    pub coeffs: [f64; 4],
}

impl StddevCubic {
    pub fn new(coeffs: [f64; 4]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("stddev coefficients must be finite".into()));
        }
        Ok(Self { coeffs })
    }

    /// Raw polynomial value (Horner), without the floor.
    pub fn eval(&self, d: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        ((c3 * d + c2) * d + c1) * d + c0
    }

    /// Polynomial value floored at [`SIGMA_MIN`].
    pub fn sigma(&self, d: f64) -> f64 {
        self.eval(d).max(SIGMA_MIN)
    }
}

impl Default for StddevCubic {
    fn default() -> Self {
        Self {
            coeffs: DEFAULT_STDDEV_COEFFS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub id: String,
    pub position: Point2,
    /// Unit vector along the optical axis.
    pub boresight: Point2,
    /// Radians, in (0, pi/2).
    pub fov_half_angle: f64,
    pub max_range: f64,
    pub bias_curve: BiasCurve,
    pub stddev: StddevCubic,
}

impl SensorModel {
    /// Sensor with the default error model, FoV and range, looking along
    /// `boresight_angle` radians.
    pub fn with_defaults(id: impl Into<String>, position: Point2, boresight_angle: f64) -> Self {
        Self {
            id: id.into(),
            position,
            boresight: Point2::from_angle(boresight_angle),
            fov_half_angle: DEFAULT_FOV_HALF_ANGLE_DEG.to_radians(),
            max_range: DEFAULT_MAX_RANGE,
            bias_curve: BiasCurve::default_table(),
            stddev: StddevCubic::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |what: &str| Err(Error::Config(format!("sensor `{}`: {what}", self.id)));
        if !self.position.is_finite() {
            return err("non-finite position");
        }
        let off_unit = (self.boresight.norm() - 1.0).abs();
        if off_unit.is_nan() || off_unit > 1e-9 {
            return err("boresight must be a unit vector");
        }
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle < core::f64::consts::FRAC_PI_2) {
            return err("fov half-angle must be in (0, 90) degrees");
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return err("max range must be positive");
        }
        Ok(())
    }

    /// Point on the optical axis `d` meters from the sensor.
    pub fn axis_point(&self, d: f64) -> Point2 {
        self.position + self.boresight * d
    }
}

/// Raw range minus the bias looked up at the raw range, kept positive.
pub fn correct_bias(m: &SensorModel, raw_range: f64) -> Result<f64> {
    if !(raw_range > 0.0 && raw_range.is_finite()) {
        return Err(Error::Data(format!("range {raw_range} must be positive")));
    }
    Ok((raw_range - m.bias_curve.at(raw_range)).max(MIN_CORRECTED_RANGE))
}

/// Ranging standard deviation at distance `d` in `(0, max_range]`.
pub fn stddev_at(m: &SensorModel, d: f64) -> Result<f64> {
    if !(d > 0.0 && d <= m.max_range) {
        return Err(Error::OutOfRange {
            distance: d,
            max_range: m.max_range,
        });
    }
    Ok(m.stddev.sigma(d))
}

/// Result of [`fit_stddev_cubic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicFit {
    pub coeffs: [f64; 4],
    /// Root mean square of the fit residuals.
    pub residual_rms: f64,
    /// Standard errors of the coefficients; zero when the fit interpolates
    /// (no residual degrees of freedom).
    pub std_errors: [f64; 4],
}

/// Ordinary least-squares cubic through `(distance, stddev)` samples.
pub fn fit_stddev_cubic(samples: &[(f64, f64)]) -> Result<CubicFit> {
    if samples
        .iter()
        .any(|(d, s)| !d.is_finite() || !s.is_finite())
    {
        return Err(Error::Data("calibration samples must be finite".into()));
    }
    let mut distances: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distances.sort_by(f64::total_cmp);
    distances.dedup();
    if distances.len() < 4 {
        return Err(Error::RankDeficient {
            distinct: distances.len(),
        });
    }

    let n = samples.len();
    let design = DMatrix::from_fn(n, 4, |i, j| {
        let d = samples[i].0;
        (0..j).fold(1.0, |acc, _| acc * d)
    });
    let target = DVector::from_iterator(n, samples.iter().map(|s| s.1));

    let qr = design.clone().qr();
    let r = qr.r();
    let qt_b = qr.q().transpose() * &target;
    let solution = r
        .solve_upper_triangular(&qt_b)
        .ok_or(Error::RankDeficient {
            distinct: distances.len(),
        })?;

    let residuals = &design * &solution - &target;
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let residual_rms = math::sqrt(rss / n as f64);

    let mut std_errors = [0.0; 4];
    if n > 4 {
        let s2 = rss / (n - 4) as f64;
        // (X^T X)^-1 = R^-1 R^-T
        let r_inv = r.try_inverse().ok_or(Error::RankDeficient {
            distinct: distances.len(),
        })?;
        let cov = &r_inv * r_inv.transpose() * s2;
        for (j, se) in std_errors.iter_mut().enumerate() {
            *se = math::sqrt(cov[(j, j)]);
        }
    }

    Ok(CubicFit {
        coeffs: [solution[0], solution[1], solution[2], solution[3]],
        residual_rms,
        std_errors,
    })
}

/// Position on the optical axis at the bias-corrected range, with the
/// ranging variance on both axes. `None` when the corrected range falls
/// outside `(0, max_range]`.
pub fn sensor_estimate(m: &SensorModel, raw_range: f64) -> Option<PositionEstimate> {
    let d = correct_bias(m, raw_range).ok()?;
    let sigma = stddev_at(m, d).ok()?;
    Some(PositionEstimate {
        position: m.axis_point(d),
        var_x: sigma * sigma,
        var_y: sigma * sigma,
    })
}

/// Inverse-variance weighted mean per axis; the combined variance is the
/// reciprocal of the summed weights.
pub fn combine_sensor_estimates(estimates: &[PositionEstimate]) -> Result<PositionEstimate> {
    match estimates {
        [] => Err(Error::Empty("position estimates")),
        [single] => Ok(*single),
        _ => {
            if estimates.iter().any(|e| !(e.var_x > 0.0 && e.var_y > 0.0)) {
                return Err(Error::Data("estimate variances must be positive".into()));
            }
            let (x, var_x) = weighted_axis(estimates.iter().map(|e| (e.position.x, e.var_x)));
            let (y, var_y) = weighted_axis(estimates.iter().map(|e| (e.position.y, e.var_y)));
            Ok(PositionEstimate {
                position: Point2::new(x, y),
                var_x,
                var_y,
            })
        }
    }
}

fn weighted_axis(values: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let (num, den) = values.fold((0.0, 0.0), |(num, den), (v, var)| {
        let w = 1.0 / var;
        (num + w * v, den + w)
    });
    (num / den, 1.0 / den)
}
