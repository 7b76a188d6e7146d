//! Scenario files.
//!
//! A scenario is a TOML document driving both simulation and localization:
//!
//! ```toml
//! format_version = 1
//!
//! [path_loss]                 # defaults for every anchor
//! tx_ref_power_dbm = -59.0    # RSS at 1 m
//! exponent = 2.0
//! noise_stddev_db = 4.0
//!
//! [[anchors]]                 # meters; path-loss keys may be overridden per anchor
//! id = "A1"
//! x = 0.0
//! y = 0.0
//!
//! [[sensors]]                 # optional section
//! id = "S1"
//! x = 0.0
//! y = 1.5
//! boresight_deg = 0.0         # counter-clockwise from +x
//! fov_half_angle_deg = 13.5
//! max_range = 3.5
//! bias_table = [[0.5, 0.01], [2.0, 0.03], [3.5, 0.3]]   # [measured distance m, bias m]
//! stddev_coeffs = [c0, c1, c2, c3]                      # sigma(d) in meters
//!
//! [trajectory]
//! waypoints = [[1.0, 1.5], [7.0, 1.5]]
//! speed = 1.0                 # m/s
//!
//! [sim]
//! tick_rate = 10.0            # Hz
//! seed = 1
//! fov_mode = "measured"       # or "declared"
//! measured_fov_half_angle_deg = 6.1
//!
//! [filter]                    # optional section
//! accel_psd = 0.5
//! [filter.init]
//! position_var = 25.0
//! velocity_var = 1.0
//! # position = [x, y]        # default: anchor centroid
//! ```

use std::path::Path;

use hybridloc_core::estimation::{Anchor, FilterInit, ProcessNoise, DEFAULT_ACCEL_PSD};
use hybridloc_core::fusion::Infrastructure;
use hybridloc_core::proximity::{
    BiasCurve, SensorModel, StddevCubic, DEFAULT_BIAS_TABLE, DEFAULT_FOV_HALF_ANGLE_DEG,
    DEFAULT_MAX_RANGE, DEFAULT_STDDEV_COEFFS,
};
use hybridloc_core::simulator::{FovMode, Scenario, MEASURED_FOV_HALF_ANGLE_DEG};
use hybridloc_core::{Point2, Polyline};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

const REQUIRED_SECTIONS: [&str; 5] = [
    "format_version",
    "path_loss",
    "anchors",
    "trajectory",
    "sim",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format_version: u32,
    pub path_loss: PathLossSection,
    pub anchors: Vec<AnchorEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sensors: Vec<SensorEntry>,
    pub trajectory: TrajectorySection,
    pub sim: SimSection,
    #[serde(default)]
    pub filter: FilterSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossSection {
    pub tx_ref_power_dbm: f64,
    pub exponent: f64,
    pub noise_stddev_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorEntry {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_ref_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_stddev_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorEntry {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub boresight_deg: f64,
    #[serde(default = "default_fov_half_angle_deg")]
    pub fov_half_angle_deg: f64,
    #[serde(default = "default_max_range")]
    pub max_range: f64,
    #[serde(default = "default_bias_table")]
    pub bias_table: Vec<[f64; 2]>,
    #[serde(default = "default_stddev_coeffs")]
    pub stddev_coeffs: [f64; 4],
}

fn default_fov_half_angle_deg() -> f64 {
    DEFAULT_FOV_HALF_ANGLE_DEG
}

fn default_max_range() -> f64 {
    DEFAULT_MAX_RANGE
}

fn default_bias_table() -> Vec<[f64; 2]> {
    DEFAULT_BIAS_TABLE.iter().map(|&(d, b)| [d, b]).collect()
}

fn default_stddev_coeffs() -> [f64; 4] {
    DEFAULT_STDDEV_COEFFS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub waypoints: Vec<[f64; 2]>,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FovModeName {
    Declared,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub tick_rate: f64,
    pub seed: u64,
    pub fov_mode: FovModeName,
    #[serde(default = "default_measured_half_angle")]
    pub measured_fov_half_angle_deg: f64,
}

fn default_measured_half_angle() -> f64 {
    MEASURED_FOV_HALF_ANGLE_DEG
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub accel_psd: f64,
    #[serde(default)]
    pub init: InitSection,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            accel_psd: DEFAULT_ACCEL_PSD,
            init: InitSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 2]>,
    pub position_var: f64,
    pub velocity_var: f64,
}

impl Default for InitSection {
    fn default() -> Self {
        let d = FilterInit::default();
        Self {
            position: d.position.map(|p| [p.x, p.y]),
            position_var: d.position_var,
            velocity_var: d.velocity_var,
        }
    }
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of the `index`-th `[[section]]` header, 1-based.
fn array_entry_line(src: &str, section: &str, index: usize) -> Option<usize> {
    let header = format!("[[{section}]]");
    src.lines()
        .enumerate()
        .filter(|(_, l)| l.trim() == header)
        .nth(index)
        .map(|(i, _)| i + 1)
}

/// Line of the `[section]` header, 1-based.
fn section_line(src: &str, section: &str) -> Option<usize> {
    let header = format!("[{section}]");
    src.lines().position(|l| l.trim() == header).map(|i| i + 1)
}

impl ScenarioFile {
    pub fn parse(src: &str, path: &Path) -> Result<Self> {
        let syntax = |e: toml::de::Error| CliError::Syntax {
            path: path.to_path_buf(),
            line: e.span().map_or(1, |s| line_of_offset(src, s.start)),
            message: e.message().trim().to_string(),
        };
        let table: toml::Table = toml::from_str(src).map_err(syntax)?;
        for section in REQUIRED_SECTIONS {
            if !table.contains_key(section) {
                return Err(CliError::MissingSection {
                    path: path.to_path_buf(),
                    section: section.to_string(),
                });
            }
        }
        let file: ScenarioFile = toml::from_str(src).map_err(syntax)?;
        if file.format_version != FORMAT_VERSION {
            return Err(CliError::Invalid {
                path: path.to_path_buf(),
                line: src
                    .lines()
                    .position(|l| l.trim_start().starts_with("format_version"))
                    .map(|i| i + 1),
                message: format!(
                    "unsupported format_version {} (expected {FORMAT_VERSION})",
                    file.format_version
                ),
            });
        }
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// Builds and validates the in-memory scenario. `src` is only used to
    /// anchor diagnostics to lines.
    pub fn to_scenario(&self, src: &str, path: &Path) -> Result<Scenario> {
        let invalid = |line: Option<usize>, message: String| CliError::Invalid {
            path: path.to_path_buf(),
            line,
            message,
        };

        let mut anchors = Vec::with_capacity(self.anchors.len());
        for (i, a) in self.anchors.iter().enumerate() {
            let anchor = Anchor {
                id: a.id.clone(),
                position: Point2::new(a.x, a.y),
                tx_ref_power: a
                    .tx_ref_power_dbm
                    .unwrap_or(self.path_loss.tx_ref_power_dbm),
                path_loss_exponent: a.exponent.unwrap_or(self.path_loss.exponent),
                rss_noise_stddev: a.noise_stddev_db.unwrap_or(self.path_loss.noise_stddev_db),
            };
            anchor.validate().map_err(|e| {
                invalid(
                    array_entry_line(src, "anchors", i),
                    format!("anchors[{i}]: {e}"),
                )
            })?;
            anchors.push(anchor);
        }

        let mut sensors = Vec::with_capacity(self.sensors.len());
        for (i, s) in self.sensors.iter().enumerate() {
            let at = || array_entry_line(src, "sensors", i);
            let bias = BiasCurve::new(s.bias_table.iter().map(|p| (p[0], p[1])).collect())
                .map_err(|e| invalid(at(), format!("sensors[{i}]: {e}")))?;
            let stddev = StddevCubic::new(s.stddev_coeffs)
                .map_err(|e| invalid(at(), format!("sensors[{i}]: {e}")))?;
            let sensor = SensorModel {
                id: s.id.clone(),
                position: Point2::new(s.x, s.y),
                boresight: Point2::from_angle(s.boresight_deg.to_radians()),
                fov_half_angle: s.fov_half_angle_deg.to_radians(),
                max_range: s.max_range,
                bias_curve: bias,
                stddev,
            };
            sensor
                .validate()
                .map_err(|e| invalid(at(), format!("sensors[{i}]: {e}")))?;
            sensors.push(sensor);
        }

        let infrastructure = Infrastructure { anchors, sensors };
        infrastructure
            .validate()
            .map_err(|e| invalid(None, e.to_string()))?;

        let trajectory = Polyline::new(
            self.trajectory
                .waypoints
                .iter()
                .map(|w| Point2::new(w[0], w[1]))
                .collect(),
        )
        .map_err(|e| invalid(section_line(src, "trajectory"), format!("trajectory: {e}")))?;

        let fov_mode = match self.sim.fov_mode {
            FovModeName::Declared => FovMode::Declared,
            FovModeName::Measured => {
                FovMode::Measured(self.sim.measured_fov_half_angle_deg.to_radians())
            }
        };
        let init = &self.filter.init;
        let scenario = Scenario {
            infrastructure,
            trajectory,
            walk_speed: self.trajectory.speed,
            tick_rate: self.sim.tick_rate,
            master_seed: self.sim.seed,
            process_noise: ProcessNoise {
                accel_psd: self.filter.accel_psd,
            },
            filter_init: FilterInit {
                position: init.position.map(|p| Point2::new(p[0], p[1])),
                position_var: init.position_var,
                velocity_var: init.velocity_var,
            },
            fov_mode,
        };
        scenario.validate().map_err(|e| {
            let line = match e {
                hybridloc_core::Error::Config(ref m)
                    if m.contains("tick_rate") || m.contains("FoV") =>
                {
                    section_line(src, "sim")
                }
                hybridloc_core::Error::Config(ref m) if m.contains("walk speed") => {
                    section_line(src, "trajectory")
                }
                hybridloc_core::Error::Config(ref m) if m.contains("anchors") => None,
                _ => section_line(src, "filter"),
            };
            invalid(line, e.to_string())
        })?;
        Ok(scenario)
    }

    /// File representation of an in-memory scenario. Path-loss defaults are
    /// taken from the first anchor; other anchors carry overrides only where
    /// they differ.
    pub fn from_scenario(sc: &Scenario) -> Self {
        let anchors = &sc.infrastructure.anchors;
        let path_loss = anchors
            .first()
            .map(|a| PathLossSection {
                tx_ref_power_dbm: a.tx_ref_power,
                exponent: a.path_loss_exponent,
                noise_stddev_db: a.rss_noise_stddev,
            })
            .unwrap_or(PathLossSection {
                tx_ref_power_dbm: hybridloc_core::simulator::DEFAULT_TX_REF_POWER,
                exponent: hybridloc_core::simulator::DEFAULT_PATH_LOSS_EXPONENT,
                noise_stddev_db: hybridloc_core::simulator::DEFAULT_RSS_NOISE_STDDEV,
            });
        let differs = |v: f64, d: f64| (v != d).then_some(v);
        let (fov_mode, measured) = match sc.fov_mode {
            FovMode::Declared => (FovModeName::Declared, MEASURED_FOV_HALF_ANGLE_DEG),
            FovMode::Measured(h) => (FovModeName::Measured, h.to_degrees()),
        };
        ScenarioFile {
            format_version: FORMAT_VERSION,
            anchors: anchors
                .iter()
                .map(|a| AnchorEntry {
                    id: a.id.clone(),
                    x: a.position.x,
                    y: a.position.y,
                    tx_ref_power_dbm: differs(a.tx_ref_power, path_loss.tx_ref_power_dbm),
                    exponent: differs(a.path_loss_exponent, path_loss.exponent),
                    noise_stddev_db: differs(a.rss_noise_stddev, path_loss.noise_stddev_db),
                })
                .collect(),
            path_loss,
            sensors: sc
                .infrastructure
                .sensors
                .iter()
                .map(|s| SensorEntry {
                    id: s.id.clone(),
                    x: s.position.x,
                    y: s.position.y,
                    boresight_deg: s.boresight.angle().to_degrees(),
                    fov_half_angle_deg: s.fov_half_angle.to_degrees(),
                    max_range: s.max_range,
                    bias_table: s.bias_curve.points().iter().map(|&(d, b)| [d, b]).collect(),
                    stddev_coeffs: s.stddev.coeffs,
                })
                .collect(),
            trajectory: TrajectorySection {
                waypoints: sc
                    .trajectory
                    .vertices()
                    .iter()
                    .map(|p| [p.x, p.y])
                    .collect(),
                speed: sc.walk_speed,
            },
            sim: SimSection {
                tick_rate: sc.tick_rate,
                seed: sc.master_seed,
                fov_mode,
                measured_fov_half_angle_deg: measured,
            },
            filter: FilterSection {
                accel_psd: sc.process_noise.accel_psd,
                init: InitSection {
                    position: sc.filter_init.position.map(|p| [p.x, p.y]),
                    position_var: sc.filter_init.position_var,
                    velocity_var: sc.filter_init.velocity_var,
                },
            },
        }
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    ScenarioFile::parse(&src, path)?.to_scenario(&src, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hybridloc_core::simulator::default_scenario;

    fn p() -> &'static Path {
        Path::new("scenario.toml")
    }

    #[test]
    fn default_scenario_round_trips() {
        let sc = default_scenario();
        let file = ScenarioFile::from_scenario(&sc);
        let text = file.to_toml().unwrap();
        let parsed = ScenarioFile::parse(&text, p()).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.to_scenario(&text, p()).unwrap(), sc);
    }

    #[test]
    fn shipped_default_matches_builtin() {
        let src = include_str!("../scenarios/default.toml");
        let sc = ScenarioFile::parse(src, p())
            .unwrap()
            .to_scenario(src, p())
            .unwrap();
        assert_eq!(sc, default_scenario());
    }

    #[test]
    fn missing_anchors_section() {
        let mut text = ScenarioFile::from_scenario(&default_scenario())
            .to_toml()
            .unwrap();
        let mut file: toml::Table = toml::from_str(&text).unwrap();
        file.remove("anchors");
        text = toml::to_string(&file).unwrap();
        let err = ScenarioFile::parse(&text, p()).unwrap_err();
        assert_eq!(err.code(), "E_MISSING_SECTION");
        assert!(
            err.to_string().contains("missing section: anchors"),
            "{err}"
        );
    }

    #[test]
    fn syntax_error_has_line() {
        let err = ScenarioFile::parse("format_version = 1\n[sim\n", p()).unwrap_err();
        assert_eq!(err.code(), "E_SYNTAX");
        assert!(err.to_string().starts_with("scenario.toml:2:"), "{err}");
    }

    #[test]
    fn invalid_sensor_points_at_its_entry() {
        let mut file = ScenarioFile::from_scenario(&default_scenario());
        file.sensors[1].fov_half_angle_deg = 95.0;
        let text = file.to_toml().unwrap();
        let err = file.to_scenario(&text, p()).unwrap_err();
        assert_eq!(err.code(), "E_INVALID");
        let line = array_entry_line(&text, "sensors", 1).unwrap();
        assert!(
            err.to_string()
                .starts_with(&format!("scenario.toml:{line}:")),
            "{err}"
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut file = ScenarioFile::from_scenario(&default_scenario());
        file.sensors[0].id = "A2".into();
        let text = file.to_toml().unwrap();
        let err = file.to_scenario(&text, p()).unwrap_err();
        assert!(err.to_string().contains("duplicate id `A2`"), "{err}");
    }

    #[test]
    fn wrong_version_rejected() {
        let mut file = ScenarioFile::from_scenario(&default_scenario());
        file.format_version = 7;
        let err = ScenarioFile::parse(&file.to_toml().unwrap(), p()).unwrap_err();
        assert_eq!(err.code(), "E_INVALID");
    }

    #[test]
    fn sensor_defaults_fill_in() {
        let text = r#"
format_version = 1
[path_loss]
tx_ref_power_dbm = -59.0
exponent = 2.0
noise_stddev_db = 4.0
[[anchors]]
id = "A1"
x = 0.0
y = 0.0
[[anchors]]
id = "A2"
x = 5.0
y = 0.0
exponent = 2.5
[[anchors]]
id = "A3"
x = 0.0
y = 5.0
[[sensors]]
id = "S1"
x = 0.0
y = 1.0
boresight_deg = 0.0
[trajectory]
waypoints = [[1.0, 1.0], [4.0, 1.0]]
speed = 1.0
[sim]
tick_rate = 10.0
seed = 3
fov_mode = "declared"
"#;
        let sc = ScenarioFile::parse(text, p())
            .unwrap()
            .to_scenario(text, p())
            .unwrap();
        let s = &sc.infrastructure.sensors[0];
        assert_eq!(s.max_range, DEFAULT_MAX_RANGE);
        assert_eq!(s.stddev.coeffs, DEFAULT_STDDEV_COEFFS);
        assert_eq!(sc.infrastructure.anchors[1].path_loss_exponent, 2.5);
        assert_eq!(sc.infrastructure.anchors[2].path_loss_exponent, 2.0);
        assert_eq!(sc.fov_mode, FovMode::Declared);
        assert_eq!(sc.process_noise.accel_psd, DEFAULT_ACCEL_PSD);
    }
}
