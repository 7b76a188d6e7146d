//! Measurement samples and the position-with-variance unit exchanged between
//! the localization branches.

use alloc::format;
use alloc::string::String;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasurementKind {
    /// Received signal strength at an anchor, dBm.
    Rss,
    /// Distance reported by a proximity sensor, meters.
    Range,
}

impl MeasurementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementKind::Rss => "RSS",
            MeasurementKind::Range => "RANGE",
        }
    }
}

impl core::str::FromStr for MeasurementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RSS" => Ok(MeasurementKind::Rss),
            "RANGE" => Ok(MeasurementKind::Range),
            other => Err(Error::Data(format!("unknown measurement kind `{other}`"))),
        }
    }
}

/// A timestamped sample from an anchor (RSS) or a proximity sensor (RANGE).
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub timestamp: f64,
    pub source_id: String,
    pub kind: MeasurementKind,
    pub value: f64,
}

impl Measurement {
    pub fn new(
        timestamp: f64,
        source_id: impl Into<String>,
        kind: MeasurementKind,
        value: f64,
    ) -> Result<Self> {
        let m = Self {
            timestamp,
            source_id: source_id.into(),
            kind,
            value,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn rss(timestamp: f64, source_id: impl Into<String>, dbm: f64) -> Result<Self> {
        Self::new(timestamp, source_id, MeasurementKind::Rss, dbm)
    }

    pub fn range(timestamp: f64, source_id: impl Into<String>, meters: f64) -> Result<Self> {
        Self::new(timestamp, source_id, MeasurementKind::Range, meters)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timestamp.is_finite() && self.timestamp >= 0.0) {
            return Err(Error::Data(format!(
                "timestamp {} must be finite and non-negative",
                self.timestamp
            )));
        }
        match self.kind {
            MeasurementKind::Rss if !self.value.is_finite() => Err(Error::Data(format!(
                "RSS value {} is not finite",
                self.value
            ))),
            MeasurementKind::Range if !(self.value.is_finite() && self.value > 0.0) => Err(
                Error::Data(format!("RANGE value {} must be positive", self.value)),
            ),
            _ => Ok(()),
        }
    }

    /// Orders by timestamp only; samples of one tick compare equal.
    pub fn cmp_time(&self, other: &Self) -> Ordering {
        self.timestamp.total_cmp(&other.timestamp)
    }

    /// Stream order: timestamp, then source id.
    pub fn cmp_stream(&self, other: &Self) -> Ordering {
        self.cmp_time(other)
            .then_with(|| self.source_id.cmp(&other.source_id))
    }
}

/// A planar position with independent per-axis variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub position: Point2,
    pub var_x: f64,
    pub var_y: f64,
}

impl PositionEstimate {
    pub fn new(position: Point2, var_x: f64, var_y: f64) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::Data(format!("non-finite position {position:?}")));
        }
        if !(var_x > 0.0 && var_y > 0.0 && var_x.is_finite() && var_y.is_finite()) {
            return Err(Error::Data(format!(
                "variances must be positive and finite, got ({var_x}, {var_y})"
            )));
        }
        Ok(Self {
            position,
            var_x,
            var_y,
        })
    }

    pub fn isotropic(position: Point2, variance: f64) -> Result<Self> {
        Self::new(position, variance, variance)
    }
}
