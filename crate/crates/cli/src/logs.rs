//! Comma-separated files: measurement logs, ground truth, per-tick estimates,
//! CDF tables and calibration input. Every file starts with a fixed header
//! row whose column names carry the units. Floats are written in Rust's
//! shortest round-trip form, so reading a file back gives the exact values
//! that were written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hybridloc_core::fusion::{HybridOutput, Infrastructure, LocalizationMode};
use hybridloc_core::simulator::GroundTruthSample;
use hybridloc_core::{Measurement, MeasurementKind, Point2, PositionEstimate};

use crate::error::{CliError, Result};

pub const LOG_HEADER: [&str; 4] = ["timestamp_s", "source_id", "kind", "value"];
pub const TRUTH_HEADER: [&str; 3] = ["timestamp_s", "x_m", "y_m"];
pub const ESTIMATES_HEADER: [&str; 7] = [
    "timestamp_s",
    "mode",
    "x_m",
    "y_m",
    "var_x_m2",
    "var_y_m2",
    "detecting_sensor_ids",
];
pub const CDF_HEADER: [&str; 2] = ["error_m", "cdf"];
pub const CALIBRATION_HEADER: [&str; 2] = ["distance_m", "stddev_m"];
pub const BIAS_HEADER: [&str; 2] = ["distance_m", "bias_m"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    let mut out = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(out, "{}", row.as_ref().join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// A parsed data row with its 1-based line number in the file.
struct Row {
    line: usize,
    fields: Vec<String>,
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Row>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut records = reader.records();
    let found = match records.next() {
        None => {
            return Err(CliError::Empty {
                path: path.to_path_buf(),
            })
        }
        Some(r) => r.map_err(|e| CliError::Row {
            path: path.to_path_buf(),
            row: 1,
            message: e.to_string(),
        })?,
    };
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::Header {
            path: path.to_path_buf(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| CliError::Row {
            path: path.to_path_buf(),
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(CliError::Row {
                path: path.to_path_buf(),
                row: line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        rows.push(Row {
            line,
            fields: record.iter().map(str::to_string).collect(),
        });
    }
    Ok(rows)
}

fn parse_f64(path: &Path, row: &Row, col: usize, name: &str) -> Result<f64> {
    let s = &row.fields[col];
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Row {
            path: path.to_path_buf(),
            row: row.line,
            message: format!("{name}: `{s}` is not a finite number"),
        }),
    }
}

fn check_order(path: &Path, row: &Row, prev: &mut f64, t: f64) -> Result<()> {
    if t < *prev {
        return Err(CliError::Order {
            path: path.to_path_buf(),
            row: row.line,
            message: format!("timestamp {t} s precedes {prev} s"),
        });
    }
    *prev = t;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_measurement_log(path: &Path, measurements: &[Measurement]) -> Result<()> {
    write_rows(
        path,
        &LOG_HEADER,
        measurements.iter().map(|m| {
            [
                num(m.timestamp),
                m.source_id.clone(),
                m.kind.as_str().to_string(),
                num(m.value),
            ]
        }),
    )
}

/// A measurement together with the line it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub line: usize,
    pub measurement: Measurement,
}

pub fn read_measurement_log(path: &Path) -> Result<Vec<LogEntry>> {
    let rows = read_rows(path, &LOG_HEADER)?;
    let mut prev = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        let t = parse_f64(path, row, 0, "timestamp_s")?;
        let kind: MeasurementKind =
            row.fields[2]
                .parse()
                .map_err(|e: hybridloc_core::Error| CliError::Row {
                    path: path.to_path_buf(),
                    row: row.line,
                    message: e.to_string(),
                })?;
        let value = parse_f64(path, row, 3, "value")?;
        let m =
            Measurement::new(t, row.fields[1].clone(), kind, value).map_err(|e| CliError::Row {
                path: path.to_path_buf(),
                row: row.line,
                message: e.to_string(),
            })?;
        check_order(path, row, &mut prev, t)?;
        out.push(LogEntry {
            line: row.line,
            measurement: m,
        });
    }
    Ok(out)
}

/// Checks that RSS rows come from anchors and RANGE rows from sensors.
pub fn resolve_sources(path: &Path, entries: &[LogEntry], infra: &Infrastructure) -> Result<()> {
    for e in entries {
        let m = &e.measurement;
        let is_anchor = infra.anchor(&m.source_id).is_some();
        let is_sensor = infra.sensor(&m.source_id).is_some();
        match (m.kind, is_anchor, is_sensor) {
            (MeasurementKind::Rss, true, _) | (MeasurementKind::Range, _, true) => {}
            (_, false, false) => {
                return Err(CliError::UnknownSource {
                    path: path.to_path_buf(),
                    row: e.line,
                    id: m.source_id.clone(),
                })
            }
            (kind, ..) => {
                return Err(CliError::Row {
                    path: path.to_path_buf(),
                    row: e.line,
                    message: format!(
                        "{} sample from `{}`, which is not {}",
                        kind.as_str(),
                        m.source_id,
                        if kind == MeasurementKind::Rss {
                            "an anchor"
                        } else {
                            "a sensor"
                        }
                    ),
                })
            }
        }
    }
    Ok(())
}

pub fn write_truth(path: &Path, truth: &[GroundTruthSample]) -> Result<()> {
    write_rows(
        path,
        &TRUTH_HEADER,
        truth
            .iter()
            .map(|s| [num(s.timestamp), num(s.position.x), num(s.position.y)]),
    )
}

pub fn read_truth(path: &Path) -> Result<Vec<GroundTruthSample>> {
    let rows = read_rows(path, &TRUTH_HEADER)?;
    rows.iter()
        .map(|row| {
            Ok(GroundTruthSample {
                timestamp: parse_f64(path, row, 0, "timestamp_s")?,
                position: Point2::new(
                    parse_f64(path, row, 1, "x_m")?,
                    parse_f64(path, row, 2, "y_m")?,
                ),
            })
        })
        .collect()
}

/// One row of an estimates file.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub timestamp: f64,
    pub mode: String,
    pub estimate: PositionEstimate,
    pub detecting_sensor_ids: Vec<String>,
}

pub fn write_estimates(
    path: &Path,
    mode: LocalizationMode,
    outputs: &[HybridOutput],
) -> Result<()> {
    write_rows(
        path,
        &ESTIMATES_HEADER,
        outputs.iter().map(|o| {
            [
                num(o.timestamp),
                mode.as_str().to_string(),
                num(o.fused.position.x),
                num(o.fused.position.y),
                num(o.fused.var_x),
                num(o.fused.var_y),
                o.detecting_sensor_ids.join(";"),
            ]
        }),
    )
}

pub fn read_estimates(path: &Path) -> Result<Vec<EstimateRow>> {
    let rows = read_rows(path, &ESTIMATES_HEADER)?;
    if rows.is_empty() {
        return Err(CliError::Empty {
            path: path.to_path_buf(),
        });
    }
    let mut prev = f64::NEG_INFINITY;
    rows.iter()
        .map(|row| {
            let timestamp = parse_f64(path, row, 0, "timestamp_s")?;
            check_order(path, row, &mut prev, timestamp)?;
            let position = Point2::new(
                parse_f64(path, row, 2, "x_m")?,
                parse_f64(path, row, 3, "y_m")?,
            );
            let estimate = PositionEstimate::new(
                position,
                parse_f64(path, row, 4, "var_x_m2")?,
                parse_f64(path, row, 5, "var_y_m2")?,
            )
            .map_err(|e| CliError::Row {
                path: path.to_path_buf(),
                row: row.line,
                message: e.to_string(),
            })?;
            let ids = &row.fields[6];
            Ok(EstimateRow {
                timestamp,
                mode: row.fields[1].clone(),
                estimate,
                detecting_sensor_ids: if ids.is_empty() {
                    Vec::new()
                } else {
                    ids.split(';').map(str::to_string).collect()
                },
            })
        })
        .collect()
}

pub fn write_cdf_table(path: &Path, table: &[(f64, f64)]) -> Result<()> {
    write_rows(
        path,
        &CDF_HEADER,
        table.iter().map(|&(e, f)| [num(e), num(f)]),
    )
}

/// Reads a two-column `(distance, value)` table.
pub fn read_pairs(path: &Path, header: &[&str; 2]) -> Result<Vec<(f64, f64)>> {
    let rows = read_rows(path, header)?;
    rows.iter()
        .map(|row| {
            Ok((
                parse_f64(path, row, 0, header[0])?,
                parse_f64(path, row, 1, header[1])?,
            ))
        })
        .collect()
}

pub fn write_pairs(path: &Path, header: &[&str; 2], pairs: &[(f64, f64)]) -> Result<()> {
    write_rows(path, header, pairs.iter().map(|&(a, b)| [num(a), num(b)]))
}
