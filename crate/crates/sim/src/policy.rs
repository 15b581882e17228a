//! Trained-policy files and convergence logs.

use std::io::Write;
use std::path::Path;

use dmimo_core::dual::{kkt_residual, TrainStatus};
use dmimo_core::harness::Policy;
use dmimo_core::{DualState, PriorityOrder, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const PTONLY_NOTE: &str = "PT-only is reconstructed as the BD-PT problem restricted to single-user modes and silence";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub scheme: String,
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    /// `converged`, `infeasible` or `max_iterations`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasible_user: Option<usize>,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub max_slack: f64,
    pub train_frames: usize,
    pub priority_order: Vec<usize>,
    pub priority_fractions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn status_tag(status: TrainStatus) -> &'static str {
    match status {
        TrainStatus::Converged => "converged",
        TrainStatus::Infeasible { .. } => "infeasible",
        TrainStatus::MaxIterations => "max_iterations",
    }
}

impl PolicyFile {
    pub fn from_state(
        scheme: Scheme,
        state: &DualState,
        priority: &PriorityOrder,
        config_hash: &str,
        seed: u64,
        train_frames: usize,
    ) -> Self {
        PolicyFile {
            scheme: scheme.tag().to_string(),
            config_hash: config_hash.to_string(),
            seed,
            code_version: crate::CODE_VERSION.to_string(),
            status: status_tag(state.status).to_string(),
            infeasible_user: match state.status {
                TrainStatus::Infeasible { user } => Some(user),
                _ => None,
            },
            lambda: state.lambda.clone(),
            iterations: state.iterations,
            max_slack: kkt_residual(&state.lambda, &state.slacks),
            train_frames,
            priority_order: priority.order.clone(),
            priority_fractions: priority.fractions.clone(),
            note: (scheme == Scheme::PtOnly).then(|| PTONLY_NOTE.to_string()),
        }
    }

    pub fn scheme(&self) -> Result<Scheme> {
        Scheme::from_tag(&self.scheme).ok_or_else(|| SimError::Config {
            field: "scheme".into(),
            reason: format!("unknown scheme tag `{}`", self.scheme),
        })
    }

    /// Only converged training counts as feasible.
    pub fn is_feasible(&self) -> bool {
        self.status == "converged"
    }

    pub fn policy(&self) -> Result<Policy> {
        Ok(Policy {
            scheme: self.scheme()?,
            lambda: self.lambda.clone(),
            priority: PriorityOrder { order: self.priority_order.clone(), fractions: self.priority_fractions.clone() },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).expect("policy files always serialize");
        std::fs::write(path, text).map_err(|e| SimError::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(format!("reading {}", path.display()), e))?;
        toml::from_str(&text).map_err(|e| SimError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    /// Refuses a policy trained on a different scenario.
    pub fn check_hash(&self, expected: &str, path: &Path) -> Result<()> {
        if self.config_hash != expected {
            return Err(SimError::HashMismatch {
                path: path.to_path_buf(),
                expected: expected.to_string(),
                found: self.config_hash.clone(),
            });
        }
        Ok(())
    }
}

/// `iteration, lambda_1..K, max_slack, mean_usage` per ascent step.
pub fn write_convergence_log(path: &Path, state: &DualState, header: &[(&str, String)]) -> Result<()> {
    let io = |e| SimError::io(format!("writing {}", path.display()), e);
    let mut file = std::fs::File::create(path).map_err(io)?;
    for (k, v) in header {
        writeln!(file, "# {k}={v}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(file);
    let k = state.lambda.len();
    let mut head = vec!["iteration".to_string()];
    head.extend((1..=k).map(|n| format!("lambda_{n}")));
    head.push("max_slack".into());
    head.push("mean_usage".into());
    w.write_record(&head).map_err(csv_err)?;
    for r in &state.history {
        let mut row = vec![r.iteration.to_string()];
        row.extend(r.lambda.iter().map(|l| format!("{l:.9e}")));
        row.push(format!("{:.9e}", r.max_slack));
        row.push(format!("{:.9e}", r.mean_usage));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

pub(crate) fn csv_err(e: csv::Error) -> SimError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => SimError::io("writing CSV", e),
        other => SimError::Usage(format!("CSV error: {other:?}")),
    }
}
