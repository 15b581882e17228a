//! Scenario files (TOML).
//!
//! ```toml
//! [propagation]
//! path_loss_exponent = 4.0
//! reference_distance_m = 50.0   # G = d_ref^eta (0 dB at d_ref) unless gain_constant is set
//!
//! [frame]
//! duration_ms = 10.0
//! bandwidth_hz = 1e5
//!
//! [power]
//! reference = 1.0
//! slope = 1.0                   # kappa
//! interference_threshold_db = 0.0
//!
//! [[bs]]
//! position = [0.0, 0.0]
//! antennas = 3
//!
//! [[user]]
//! position = [30.0, 20.0]
//! antennas = 1
//! arrival_kbps = 200.0
//! delay_ms = 500.0
//! violation_prob = 1e-2
//! ```
//!
//! Optional `[run]` and `[sweep]` tables carry run defaults and a sweep grid.

use std::path::Path;

use dmimo_core::{AscentConfig, QosSpec, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub propagation: Propagation,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub power: Power,
    pub bs: Vec<BsEntry>,
    pub user: Vec<UserEntry>,
    #[serde(default)]
    pub run: RunDefaults,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Propagation {
    pub path_loss_exponent: f64,
    #[serde(default = "default_ref_distance")]
    pub reference_distance_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_constant: Option<f64>,
}

fn default_ref_distance() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub duration_ms: f64,
    pub bandwidth_hz: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Frame { duration_ms: 10.0, bandwidth_hz: 1e5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Power {
    pub reference: f64,
    pub slope: f64,
    pub interference_threshold_db: f64,
}

impl Default for Power {
    fn default() -> Self {
        Power { reference: 1.0, slope: 1.0, interference_threshold_db: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsEntry {
    pub position: [f64; 2],
    pub antennas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub position: [f64; 2],
    pub antennas: usize,
    pub arrival_kbps: f64,
    pub delay_ms: f64,
    pub violation_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunDefaults {
    pub seed: u64,
    pub train_frames: usize,
    pub eval_frames: usize,
    pub cmax_frames: usize,
    pub grid_resolution_m: f64,
    pub ascent: AscentOverrides,
}

impl Default for RunDefaults {
    fn default() -> Self {
        RunDefaults {
            seed: 1,
            train_frames: 4000,
            eval_frames: 20_000,
            cmax_frames: 2000,
            grid_resolution_m: 1.0,
            ascent: AscentOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AscentOverrides {
    pub initial_step: Option<f64>,
    pub tolerance: Option<f64>,
    pub lambda_cap: Option<f64>,
    pub max_iterations: Option<usize>,
}

impl AscentOverrides {
    pub fn apply(&self, mut c: AscentConfig) -> AscentConfig {
        if let Some(v) = self.initial_step {
            c.initial_step = v;
        }
        if let Some(v) = self.tolerance {
            c.tolerance = v;
        }
        if let Some(v) = self.lambda_cap {
            c.lambda_cap = v;
        }
        if let Some(v) = self.max_iterations {
            c.max_iterations = v;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

/// Parameters a sweep may vary.
pub const SWEEP_PARAMS: &[&str] = &[
    "load_kbps",
    "kappa",
    "delay_ms",
    "violation_prob",
    "tx_antennas",
    "rx_antennas",
    "path_loss_exponent",
    "power_ref",
];

fn bad(field: impl Into<String>, reason: impl Into<String>) -> SimError {
    SimError::Config { field: field.into(), reason: reason.into() }
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| SimError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    /// Field-level checks with file-relative names, then the core invariants.
    pub fn validate(&self) -> Result<()> {
        if self.bs.is_empty() {
            return Err(bad("bs", "at least one [[bs]] entry is required"));
        }
        if self.user.is_empty() {
            return Err(bad("user", "at least one [[user]] entry is required"));
        }
        for (i, b) in self.bs.iter().enumerate() {
            if b.antennas == 0 {
                return Err(bad(format!("bs[{i}].antennas"), "must be >= 1"));
            }
            if !b.position.iter().all(|v| v.is_finite()) {
                return Err(bad(format!("bs[{i}].position"), "must be finite"));
            }
        }
        for (i, u) in self.user.iter().enumerate() {
            if u.antennas == 0 {
                return Err(bad(format!("user[{i}].antennas"), "must be >= 1"));
            }
            if !u.position.iter().all(|v| v.is_finite()) {
                return Err(bad(format!("user[{i}].position"), "must be finite"));
            }
            if !(u.arrival_kbps >= 0.0 && u.arrival_kbps.is_finite()) {
                return Err(bad(format!("user[{i}].arrival_kbps"), "must be finite and >= 0"));
            }
            if !(u.delay_ms > 0.0 && u.delay_ms.is_finite()) {
                return Err(bad(format!("user[{i}].delay_ms"), "must be > 0"));
            }
            if !(u.violation_prob > 0.0 && u.violation_prob < 1.0) {
                return Err(bad(format!("user[{i}].violation_prob"), format!("{} is outside (0, 1)", u.violation_prob)));
            }
        }
        let eta = self.propagation.path_loss_exponent;
        if !(2.0..=6.0).contains(&eta) {
            return Err(bad("propagation.path_loss_exponent", format!("{eta} is outside [2, 6]")));
        }
        if !(self.propagation.reference_distance_m > 0.0) {
            return Err(bad("propagation.reference_distance_m", "must be > 0"));
        }
        if !(self.frame.duration_ms > 0.0) {
            return Err(bad("frame.duration_ms", "must be > 0"));
        }
        if !(self.frame.bandwidth_hz > 0.0) {
            return Err(bad("frame.bandwidth_hz", "must be > 0"));
        }
        if !(self.power.reference > 0.0) {
            return Err(bad("power.reference", "must be > 0"));
        }
        if !(self.power.slope >= 0.0) {
            return Err(bad("power.slope", "must be >= 0"));
        }
        if !(self.run.grid_resolution_m > 0.0) {
            return Err(bad("run.grid_resolution_m", "must be > 0"));
        }
        if let Some(s) = &self.sweep {
            check_sweep(&s.param, &s.values)?;
        }
        self.scenario()?.validate().map_err(|e| match e {
            dmimo_core::Error::InvalidScenario { field, reason } => bad(field, reason),
            other => other.into(),
        })
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let eta = self.propagation.path_loss_exponent;
        let gain_constant = self
            .propagation
            .gain_constant
            .unwrap_or_else(|| Scenario::calibrated_gain(self.propagation.reference_distance_m, eta));
        Ok(Scenario {
            bs_positions: self.bs.iter().map(|b| b.position).collect(),
            user_positions: self.user.iter().map(|u| u.position).collect(),
            tx_antennas: self.bs.iter().map(|b| b.antennas).collect(),
            rx_antennas: self.user.iter().map(|u| u.antennas).collect(),
            path_loss_exponent: eta,
            gain_constant,
            frame_duration: self.frame.duration_ms * 1e-3,
            bandwidth: self.frame.bandwidth_hz,
            power_ref: self.power.reference,
            power_slope: self.power.slope,
            interference_threshold: 10f64.powf(self.power.interference_threshold_db / 10.0),
            qos: self
                .user
                .iter()
                .map(|u| QosSpec {
                    arrival_rate_bps: u.arrival_kbps * 1e3,
                    delay_bound_s: u.delay_ms * 1e-3,
                    violation_prob: u.violation_prob,
                })
                .collect(),
        })
    }

    /// SHA-256 over the physical scenario (run defaults and sweep excluded).
    pub fn hash(&self) -> String {
        let canonical = serde_json::json!({
            "propagation": self.propagation,
            "frame": self.frame,
            "power": self.power,
            "bs": self.bs,
            "user": self.user,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    /// Copy with `param` set to `value`.
    pub fn with_param(&self, param: &str, value: f64) -> Result<ScenarioFile> {
        let mut f = self.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(bad(param, format!("{v} is not a positive integer")))
            }
        };
        match param {
            "load_kbps" => f.user.iter_mut().for_each(|u| u.arrival_kbps = value),
            "kappa" => f.power.slope = value,
            "delay_ms" => f.user.iter_mut().for_each(|u| u.delay_ms = value),
            "violation_prob" => f.user.iter_mut().for_each(|u| u.violation_prob = value),
            "tx_antennas" => {
                let m = count(value)?;
                f.bs.iter_mut().for_each(|b| b.antennas = m);
            }
            "rx_antennas" => {
                let m = count(value)?;
                f.user.iter_mut().for_each(|u| u.antennas = m);
            }
            "path_loss_exponent" => f.propagation.path_loss_exponent = value,
            "power_ref" => f.power.reference = value,
            other => return Err(bad("sweep.param", format!("unknown parameter `{other}`; expected one of {SWEEP_PARAMS:?}"))),
        }
        Ok(f)
    }
}

pub fn check_sweep(param: &str, values: &[f64]) -> Result<()> {
    if !SWEEP_PARAMS.contains(&param) {
        return Err(bad("sweep.param", format!("unknown parameter `{param}`; expected one of {SWEEP_PARAMS:?}")));
    }
    if values.is_empty() {
        return Err(bad("sweep.values", "grid must be nonempty"));
    }
    Ok(())
}
