//! Parameter sweeps, their CSV output and run manifests.

use std::io::Write;
use std::path::Path;

use dmimo_core::dual::TrainStatus;
use dmimo_core::harness::Policy;
use dmimo_core::{Metrics, Scheme};
use serde::Serialize;

use crate::config::{check_sweep, ScenarioFile};
use crate::error::{Result, SimError};
use crate::policy::{csv_err, status_tag};
use crate::runner::{RunOptions, Runner};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub param: String,
    pub value: f64,
    pub metrics: Metrics,
    pub status: TrainStatus,
    pub lambda: Vec<f64>,
    pub config_hash: String,
}

impl SweepRow {
    /// Training converged; rows that hit the multiplier cap or the
    /// iteration limit are not claimed feasible.
    pub fn feasible(&self) -> bool {
        self.status == TrainStatus::Converged
    }
}

/// Trains and evaluates every scheme at every grid point. Infeasible
/// training does not abort the sweep: the row is evaluated with the last
/// multipliers and flagged.
pub fn sweep(
    base: &ScenarioFile,
    param: &str,
    values: &[f64],
    schemes: &[Scheme],
    options: &RunOptions,
) -> Result<Vec<SweepRow>> {
    check_sweep(param, values)?;
    let runner = Runner::new(options.clone())?;
    let mut rows = Vec::with_capacity(values.len() * schemes.len());
    for &v in values {
        let file = base.with_param(param, v)?;
        file.validate()?;
        let scenario = file.scenario()?;
        let (priority, _) = runner.priority(&scenario)?;
        for &scheme in schemes {
            let state = runner.train(&scenario, scheme, &priority)?;
            let policy = Policy { scheme, lambda: state.lambda.clone(), priority: priority.clone() };
            let metrics = runner.evaluate(&scenario, &policy)?;
            rows.push(SweepRow {
                scheme,
                param: param.to_string(),
                value: v,
                metrics,
                status: state.status,
                lambda: state.lambda,
                config_hash: file.hash(),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_header(num_users: usize) -> Vec<String> {
    let mut h: Vec<String> =
        ["scheme", "swept_param", "value", "L_bar", "L_bar_se", "area", "area_se"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=num_users).map(|n| format!("slack_{n}")));
    h.push("feasible".into());
    h
}

/// Writes `rows` as CSV, preceded by `# key=value` comment lines.
pub fn write_sweep_csv(out: impl Write, rows: &[SweepRow], num_users: usize, meta: &[(&str, String)]) -> Result<()> {
    let mut out = out;
    for (k, v) in meta {
        writeln!(out, "# {k}={v}").map_err(|e| SimError::io("writing CSV", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(num_users)).map_err(csv_err)?;
    for r in rows {
        let m = &r.metrics;
        let mut rec = vec![
            r.scheme.tag().to_string(),
            r.param.clone(),
            format!("{}", r.value),
            format!("{:.6}", m.avg_bs_usage),
            format!("{:.6}", m.avg_bs_usage_se),
            format!("{:.3}", m.avg_interfering_area),
            format!("{:.3}", m.avg_interfering_area_se),
        ];
        rec.extend(m.per_user_slack.iter().map(|s| format!("{s:.6e}")));
        rec.push(r.feasible().to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| SimError::io("writing CSV", e))
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestRow {
    pub scheme: String,
    pub value: f64,
    pub status: String,
    pub lambda: Vec<f64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub code_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub schemes: Vec<String>,
    pub train_frames: usize,
    pub eval_frames: usize,
    pub cmax_frames: usize,
    pub grid_resolution_m: Option<f64>,
    pub strict_deterministic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep_values: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn new(command: &str, file: &ScenarioFile, schemes: &[Scheme], options: &RunOptions) -> Self {
        Manifest {
            command: command.to_string(),
            code_version: crate::CODE_VERSION.to_string(),
            seed: options.seed,
            config_hash: file.hash(),
            schemes: schemes.iter().map(|s| s.tag().to_string()).collect(),
            train_frames: options.train_frames,
            eval_frames: options.eval_frames,
            cmax_frames: options.cmax_frames,
            grid_resolution_m: options.area.map(|a| a.resolution),
            strict_deterministic: options.strict,
            sweep_param: None,
            sweep_values: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn with_rows(mut self, param: &str, values: &[f64], rows: &[SweepRow]) -> Self {
        self.sweep_param = Some(param.to_string());
        self.sweep_values = values.to_vec();
        self.rows = rows
            .iter()
            .map(|r| ManifestRow {
                scheme: r.scheme.tag().to_string(),
                value: r.value,
                status: status_tag(r.status).to_string(),
                lambda: r.lambda.clone(),
                config_hash: r.config_hash.clone(),
            })
            .collect();
        self
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifests always serialize");
        std::fs::write(path, text + "\n").map_err(|e| SimError::io(format!("writing {}", path.display()), e))
    }
}
