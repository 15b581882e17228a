//! Projected dual ascent on the per-user QoS multipliers.
//!
//! The slack `f_n = E[exp(-theta_n R_n)] - exp(-theta_n C_n)` is a
//! subgradient of the dual function. Its magnitude varies by orders across
//! scenarios and the optimal multipliers span several decades, so each
//! coordinate adapts its own step: it grows while the slack keeps its sign
//! and halves when it flips. A multiplier passing `lambda_cap` means the
//! constraint cannot be met and the run stops as infeasible.

use alloc::vec::Vec;

use crate::candidates::FrameCandidates;
use crate::qos::UserQos;
use crate::scheme::{decide, Scheme};
use crate::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub initial_step: f64,
    pub growth: f64,
    pub shrink: f64,
    /// Convergence threshold on `max |f_n|` (on `f_n` alone where
    /// `lambda_n = 0`).
    pub tolerance: f64,
    pub lambda_cap: f64,
    pub max_iterations: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            initial_step: 1.0,
            growth: 1.5,
            shrink: 0.5,
            tolerance: 1e-3,
            lambda_cap: 1e6,
            max_iterations: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Converged,
    Infeasible { user: usize },
    /// Stopped at the iteration limit, or every step shrank to nothing
    /// without meeting the tolerance.
    MaxIterations,
}

/// Averages over the training frames at one multiplier vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    pub slacks: Vec<f64>,
    pub mean_usage: f64,
    /// `E[min score] - sum_n lambda_n exp(-theta_n C_n)`.
    pub dual_value: f64,
}

/// Estimates the constraint slacks under the policy induced by `lambda`.
pub trait SlackOracle {
    fn num_users(&self) -> usize;
    fn evaluate(&mut self, lambda: &[f64]) -> Result<OracleOutput>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lambda: Vec<f64>,
    pub slacks: Vec<f64>,
    pub max_slack: f64,
    pub mean_usage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub status: TrainStatus,
    pub slacks: Vec<f64>,
    pub mean_usage: f64,
    pub dual_value: f64,
    pub history: Vec<IterationRecord>,
}

impl DualState {
    /// A zero-multiplier state, under which every scheme stays silent.
    pub fn silent(num_users: usize) -> Self {
        DualState {
            lambda: alloc::vec![0.0; num_users],
            iterations: 0,
            status: TrainStatus::Converged,
            slacks: Vec::new(),
            mean_usage: 0.0,
            dual_value: 0.0,
            history: Vec::new(),
        }
    }
}

/// Largest violation of the convergence conditions.
pub fn kkt_residual(lambda: &[f64], slacks: &[f64]) -> f64 {
    lambda.iter().zip(slacks).map(|(&l, &f)| if l > 0.0 { f.abs() } else { f.max(0.0) }).fold(0.0, f64::max)
}

pub fn train(oracle: &mut dyn SlackOracle, config: &AscentConfig, initial: Option<&[f64]>) -> Result<DualState> {
    let k = oracle.num_users();
    let mut lambda = match initial {
        Some(l) if l.len() == k => l.to_vec(),
        Some(_) => return Err(domain("initial multipliers do not match the user count")),
        None => alloc::vec![0.0; k],
    };
    let mut step = alloc::vec![config.initial_step; k];
    let mut last_sign = alloc::vec![0i8; k];
    let mut history = Vec::new();
    let hold = 0.5 * config.tolerance;

    for it in 0..=config.max_iterations {
        let out = oracle.evaluate(&lambda)?;
        let residual = kkt_residual(&lambda, &out.slacks);
        history.push(IterationRecord {
            iteration: it,
            lambda: lambda.clone(),
            slacks: out.slacks.clone(),
            max_slack: residual,
            mean_usage: out.mean_usage,
        });
        let finish = |lambda: &[f64], history: &[IterationRecord], status| DualState {
            lambda: lambda.to_vec(),
            iterations: it,
            status,
            slacks: out.slacks.clone(),
            mean_usage: out.mean_usage,
            dual_value: out.dual_value,
            history: history.to_vec(),
        };
        if residual <= config.tolerance {
            return Ok(finish(&lambda, &history, TrainStatus::Converged));
        }
        if it == config.max_iterations {
            break;
        }
        let mut moving = false;
        for n in 0..k {
            let f = out.slacks[n];
            if f.abs() <= hold || (lambda[n] == 0.0 && f < 0.0) {
                last_sign[n] = 0;
                continue;
            }
            let sign: i8 = if f > 0.0 { 1 } else { -1 };
            if last_sign[n] == sign {
                step[n] *= config.growth;
            } else if last_sign[n] == -sign {
                step[n] *= config.shrink;
            }
            last_sign[n] = sign;
            lambda[n] = (lambda[n] + step[n] * f64::from(sign)).max(0.0);
            if step[n] > 1e-12 * (1.0 + lambda[n]) {
                moving = true;
            }
            if lambda[n] > config.lambda_cap {
                return Ok(finish(&lambda, &history, TrainStatus::Infeasible { user: n }));
            }
        }
        if !moving {
            break;
        }
    }
    let iterations = history.len() - 1;
    Ok(stalled(history, iterations, config.tolerance))
}

/// Ascent that stopped without meeting the tolerance, typically at a kink
/// where every frame switches mode at once. Falls back to the cheapest
/// iterate whose constraints all hold, else the last one.
fn stalled(history: Vec<IterationRecord>, iterations: usize, tolerance: f64) -> DualState {
    let feasible = history
        .iter()
        .filter(|r| r.slacks.iter().all(|&f| f <= tolerance))
        .min_by(|a, b| a.mean_usage.total_cmp(&b.mean_usage));
    let pick = feasible.or(history.last()).cloned().expect("ascent records at least one iterate");
    DualState {
        lambda: pick.lambda,
        iterations,
        status: TrainStatus::MaxIterations,
        slacks: pick.slacks,
        mean_usage: pick.mean_usage,
        dual_value: f64::NAN,
        history,
    }
}

/// Partial sums over a block of frames; merged in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackSums {
    pub frames: usize,
    pub service: Vec<f64>,
    pub usage: f64,
    pub min_score: f64,
}

impl SlackSums {
    pub fn new(num_users: usize) -> Self {
        SlackSums { frames: 0, service: alloc::vec![0.0; num_users], usage: 0.0, min_score: 0.0 }
    }

    pub fn merge(&mut self, other: &SlackSums) {
        self.frames += other.frames;
        self.usage += other.usage;
        self.min_score += other.min_score;
        for (a, b) in self.service.iter_mut().zip(&other.service) {
            *a += b;
        }
    }

    pub fn finish(&self, lambda: &[f64], qos: &[UserQos]) -> Result<OracleOutput> {
        if self.frames == 0 {
            return Err(domain("no training frames"));
        }
        let n = self.frames as f64;
        let slacks = self.service.iter().zip(qos).map(|(s, q)| s / n - q.target()).collect();
        let priced: f64 = lambda.iter().zip(qos).map(|(l, q)| l * q.target()).sum();
        Ok(OracleOutput { slacks, mean_usage: self.usage / n, dual_value: self.min_score / n - priced })
    }
}

/// Frames per block when reducing over a training set.
pub const BLOCK: usize = 256;

/// Slack sums of one block of frames.
pub fn block_sums(
    scheme: Scheme,
    frames: &[FrameCandidates],
    lambda: &[f64],
    qos: &[UserQos],
    bt: f64,
) -> Result<SlackSums> {
    let mut sums = SlackSums::new(lambda.len());
    for c in frames {
        let d = decide(scheme, c, lambda, qos, bt)?;
        sums.frames += 1;
        sums.usage += d.bs_count as f64;
        sums.min_score += d.score;
        for (a, s) in sums.service.iter_mut().zip(&d.service) {
            *a += s;
        }
    }
    Ok(sums)
}

/// Sequential oracle over a fixed set of training frames.
pub struct FrameSet<'a> {
    pub scheme: Scheme,
    pub frames: &'a [FrameCandidates],
    pub qos: &'a [UserQos],
    pub bt: f64,
}

impl SlackOracle for FrameSet<'_> {
    fn num_users(&self) -> usize {
        self.qos.len()
    }

    fn evaluate(&mut self, lambda: &[f64]) -> Result<OracleOutput> {
        let mut total = SlackSums::new(lambda.len());
        for chunk in self.frames.chunks(BLOCK) {
            total.merge(&block_sums(self.scheme, chunk, lambda, self.qos, self.bt)?);
        }
        total.finish(lambda, self.qos)
    }
}
