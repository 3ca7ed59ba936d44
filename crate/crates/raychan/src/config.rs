//! Job configuration (JSON).
//!
//! Relative paths inside a config file resolve against the file's directory.
//! Speeds are in m/s: 72, 90 and 108 km/h are 20, 25 and 30 m/s.
//!
//! ```json
//! {
//!   "source": { "scene": "street.json" },
//!   "active_bs": [0],
//!   "active_areas": [0],
//!   "selected_points": "all",
//!   "bw_hz": 100e6,
//!   "f_up_hz": 3.5e9,
//!   "f_dn_hz": 3.5e9,
//!   "move": true,
//!   "movement": { "start_point": 0, "direction": "right", "speed_mps": 20,
//!                 "sample_interval_s": 0.001, "n_samples": 1000 },
//!   "beams": { "enabled": true, "dl_source": { "scene": "street_60g.json" },
//!              "n_beams": 64, "snr": 1.0, "window": 25, "horizon": 1 },
//!   "output_dir": "out"
//! }
//! ```

use std::path::{Path, PathBuf};

use raychan_core::mobility::Direction;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("config field `{field}`: {msg}")]
    Field { field: &'static str, msg: &'static str },
    #[error("reading config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn field(field: &'static str, msg: &'static str) -> ConfigError {
    ConfigError::Field { field, msg }
}

/// Where the per-path data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceSpec {
    /// A `DATAAI6G-PATHS v1` text file.
    Paths(PathBuf),
    /// A JSON scene, traced on load.
    Scene(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllKeyword {
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSelection {
    All(AllKeyword),
    List(Vec<u32>),
}

impl Default for PointSelection {
    fn default() -> Self {
        PointSelection::All(AllKeyword::All)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionName {
    Up,
    Down,
    Left,
    Right,
}

impl From<DirectionName> for Direction {
    fn from(d: DirectionName) -> Self {
        match d {
            DirectionName::Up => Direction::Up,
            DirectionName::Down => Direction::Down,
            DirectionName::Left => Direction::Left,
            DirectionName::Right => Direction::Right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovementConfig {
    /// Defaults to the first active area.
    pub area: Option<u32>,
    #[serde(default)]
    pub start_point: u32,
    pub direction: Option<DirectionName>,
    pub speed_mps: Option<f64>,
    pub sample_interval_s: Option<f64>,
    pub n_samples: Option<u32>,
}

fn d_n_beams() -> usize {
    64
}
fn d_snr() -> f64 {
    1.0
}
fn d_window() -> usize {
    25
}
fn d_horizon() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamsConfig {
    #[serde(default)]
    pub enabled: bool,
    /// DL (mmWave) path source; defaults to the main source.
    pub dl_source: Option<SourceSpec>,
    /// DL array size; defaults to every element of the BS in `dl_source`.
    pub dl_tx_elements: Option<usize>,
    #[serde(default = "d_n_beams")]
    pub n_beams: usize,
    /// Linear DL transmit SNR `P/σ²`.
    #[serde(default = "d_snr")]
    pub snr: f64,
    /// Rate bandwidth `B`; defaults to `bw_hz`.
    pub bandwidth_hz: Option<f64>,
    #[serde(default = "d_window")]
    pub window: usize,
    #[serde(default = "d_horizon")]
    pub horizon: usize,
    /// Per-entry UL observation noise variance.
    #[serde(default)]
    pub noise_var: f64,
}

impl Default for BeamsConfig {
    fn default() -> Self {
        BeamsConfig {
            enabled: false,
            dl_source: None,
            dl_tx_elements: None,
            n_beams: d_n_beams(),
            snr: d_snr(),
            bandwidth_hz: None,
            window: d_window(),
            horizon: d_horizon(),
            noise_var: 0.0,
        }
    }
}

fn d_bw() -> f64 {
    100e6
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub source: SourceSpec,
    pub active_bs: Vec<u32>,
    pub active_areas: Vec<u32>,
    #[serde(default)]
    pub selected_points: PointSelection,
    /// BS elements per link matrix; defaults to all traced elements.
    pub tx_elements: Option<usize>,
    /// User elements per link matrix; defaults to all traced elements.
    pub rx_elements: Option<usize>,
    /// Expected trace frequency (3.5e9, 28e9, 60e9 or custom); checked
    /// against the source when given.
    pub band_hz: Option<f64>,
    #[serde(default = "d_bw")]
    pub bw_hz: f64,
    /// Defaults to the source frequency.
    pub f_up_hz: Option<f64>,
    /// Defaults to the source frequency.
    pub f_dn_hz: Option<f64>,
    #[serde(default, rename = "move")]
    pub moving: bool,
    pub movement: Option<MovementConfig>,
    #[serde(default)]
    pub beams: BeamsConfig,
    #[serde(default = "d_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl JobConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.active_bs.is_empty() {
            return Err(field("active_bs", "needs at least one base station"));
        }
        if self.active_areas.is_empty() {
            return Err(field("active_areas", "needs at least one area"));
        }
        if let PointSelection::List(v) = &self.selected_points {
            if v.is_empty() {
                return Err(field("selected_points", "empty list"));
            }
        }
        if self.tx_elements == Some(0) {
            return Err(field("tx_elements", "must be at least 1"));
        }
        if self.rx_elements == Some(0) {
            return Err(field("rx_elements", "must be at least 1"));
        }
        if !positive(self.bw_hz) {
            return Err(field("bw_hz", "must be positive"));
        }
        for (name, v) in [("band_hz", self.band_hz), ("f_up_hz", self.f_up_hz), ("f_dn_hz", self.f_dn_hz)] {
            if v.is_some_and(|v| !positive(v)) {
                return Err(field(name, "must be positive"));
            }
        }
        if self.moving || self.beams.enabled {
            self.movement_checked()?;
        }
        let b = &self.beams;
        if b.enabled {
            if b.n_beams == 0 {
                return Err(field("beams.n_beams", "must be at least 1"));
            }
            if !positive(b.snr) {
                return Err(field("beams.snr", "must be positive"));
            }
            if b.bandwidth_hz.is_some_and(|v| !positive(v)) {
                return Err(field("beams.bandwidth_hz", "must be positive"));
            }
            if b.window == 0 {
                return Err(field("beams.window", "must be at least 1"));
            }
            if !(b.noise_var.is_finite() && b.noise_var >= 0.0) {
                return Err(field("beams.noise_var", "must be non-negative"));
            }
            if b.dl_tx_elements == Some(0) {
                return Err(field("beams.dl_tx_elements", "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Movement parameters with every required field present.
    pub fn movement_checked(&self) -> Result<raychan_core::mobility::MovementSpec, ConfigError> {
        let m = self.movement.as_ref().ok_or(field("movement", "required when moving"))?;
        let speed = m.speed_mps.ok_or(field("movement.speed_mps", "required when moving"))?;
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(field("movement.speed_mps", "must be finite and non-negative"));
        }
        let dt = m.sample_interval_s.ok_or(field("movement.sample_interval_s", "required when moving"))?;
        if !positive(dt) {
            return Err(field("movement.sample_interval_s", "must be positive"));
        }
        let n = m.n_samples.ok_or(field("movement.n_samples", "required when moving"))?;
        if n == 0 {
            return Err(field("movement.n_samples", "must be at least 1"));
        }
        let direction = m.direction.ok_or(field("movement.direction", "required when moving"))?;
        Ok(raychan_core::mobility::MovementSpec {
            area: m.area.unwrap_or(self.active_areas[0]),
            start_point: m.start_point,
            direction: direction.into(),
            speed,
            sample_interval: dt,
            n_samples: n,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// SHA-256 of the canonical JSON form (defaults filled, `base_dir`
    /// excluded).
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Parses and validates a config.
pub fn load_config(text: &str) -> Result<JobConfig, ConfigError> {
    let cfg: JobConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config_file(path: &Path) -> Result<JobConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut cfg = load_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}
