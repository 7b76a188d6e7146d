//! Trajectory errors and their empirical distribution.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{distance_to_polyline, Point2, Polyline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    BleOnly,
    Hybrid,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::BleOnly => "BLE_ONLY",
            Method::Hybrid => "HYBRID",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub timestamp: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub method: Method,
    pub records: Vec<ErrorRecord>,
}

impl ErrorSeries {
    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.error)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Distance of every estimated position from the reference polyline.
pub fn trajectory_errors(
    method: Method,
    estimates: &[(f64, Point2)],
    reference: &Polyline,
) -> Result<ErrorSeries> {
    if estimates.is_empty() {
        return Err(Error::Empty("position estimates"));
    }
    let records = estimates
        .iter()
        .map(|&(timestamp, p)| ErrorRecord {
            timestamp,
            error: distance_to_polyline(p, reference),
        })
        .collect();
    Ok(ErrorSeries { method, records })
}

/// Distance of every estimate from the true position at the same instant.
/// `truth_at` maps a timestamp to the ground-truth position.
pub fn synchronized_errors(
    method: Method,
    estimates: &[(f64, Point2)],
    truth_at: impl Fn(f64) -> Point2,
) -> Result<ErrorSeries> {
    if estimates.is_empty() {
        return Err(Error::Empty("position estimates"));
    }
    let records = estimates
        .iter()
        .map(|&(timestamp, p)| ErrorRecord {
            timestamp,
            error: p.distance(truth_at(timestamp)),
        })
        .collect();
    Ok(ErrorSeries { method, records })
}

/// Empirical CDF `F(t) = #{e <= t} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut sorted: Vec<f64> = values.into_iter().collect();
        if sorted.is_empty() {
            return Err(Error::Empty("error values"));
        }
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("error values must be finite".into()));
        }
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= t) as f64 / self.sorted.len() as f64
    }

    /// `inf { t : F(t) >= p }` for `p` in (0, 1].
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let rank = crate::math::floor(p * n as f64);
        let rank = if rank < p * n as f64 {
            rank + 1.0
        } else {
            rank
        };
        let idx = (rank as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }

    /// Middle order statistic; the mean of the two middle ones for even `n`.
    pub fn median(&self) -> f64 {
        let n = self.sorted.len();
        if n % 2 == 1 {
            self.sorted[n / 2]
        } else {
            0.5 * (self.sorted[n / 2 - 1] + self.sorted[n / 2])
        }
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// `(t, F(t))` at every distinct value, ascending; the last row has F = 1.
    pub fn table(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match rows.last_mut() {
                Some(last) if last.0 == v => last.1 = f,
                _ => rows.push((v, f)),
            }
        }
        rows
    }
}

pub fn cdf(series: &ErrorSeries) -> Result<EmpiricalCdf> {
    EmpiricalCdf::from_values(series.errors())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub count: usize,
    pub median: f64,
    pub p90: f64,
    pub mean: f64,
}

impl ErrorStats {
    pub fn of(cdf: &EmpiricalCdf) -> Self {
        Self {
            count: cdf.len(),
            median: cdf.median(),
            p90: cdf.quantile(0.9),
            mean: cdf.mean(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub ble: ErrorStats,
    pub hybrid: ErrorStats,
    /// hybrid median / BLE median.
    pub median_ratio: f64,
}

/// Ratio of two medians; 1 when both are zero.
pub fn median_ratio(numerator: f64, denominator: f64) -> f64 {
    if numerator == denominator {
        1.0
    } else {
        numerator / denominator
    }
}

pub fn summarize(ble: &ErrorSeries, hybrid: &ErrorSeries) -> Result<Summary> {
    let ble = ErrorStats::of(&cdf(ble)?);
    let hybrid = ErrorStats::of(&cdf(hybrid)?);
    Ok(Summary {
        ble,
        hybrid,
        median_ratio: median_ratio(hybrid.median, ble.median),
    })
}
