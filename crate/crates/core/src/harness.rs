//! Monte-Carlo evaluation: power law, interfering area, metrics.

use alloc::vec::Vec;

use crate::candidates::{enumerate_candidates, FrameCandidates};
use crate::channel::{derive_seed, sample_channel_with_key, stream, Scenario};
use crate::dual::{train, AscentConfig, DualState, FrameSet};
use crate::qos::UserQos;
use crate::scheme::{decide, transmission, Scheme, Transmission};
use crate::selection::PriorityOrder;
use crate::{domain, Result};

/// `P_L = P_ref + kappa (L - 1)` for `L >= 1`, zero for `L = 0`.
pub fn total_power(l: usize, power_ref: f64, kappa: f64) -> f64 {
    if l == 0 {
        0.0
    } else {
        power_ref + kappa * (l - 1) as f64
    }
}

/// Radius at which one BS radiating `power` drops to `threshold`.
pub fn interference_radius(power: f64, gain_constant: f64, eta: f64, threshold: f64) -> f64 {
    (gain_constant * power / threshold).powf(1.0 / eta)
}

/// Area (m^2) where `sum_b P_b G / d_b^eta >= threshold`, counted on a grid
/// of square cells aligned to multiples of `resolution`.
///
/// Only cells within `r(sum P)` of some BS are visited; outside that union
/// every term is below `P_b G / r^eta` and the sum is below the threshold.
pub fn interfering_area(
    positions: &[[f64; 2]],
    powers: &[f64],
    gain_constant: f64,
    eta: f64,
    threshold: f64,
    resolution: f64,
) -> Result<f64> {
    if positions.len() != powers.len() {
        return Err(domain("one power per transmitting BS is required"));
    }
    if !(resolution > 0.0) || !(threshold > 0.0) {
        return Err(domain("grid resolution and threshold must be positive"));
    }
    if powers.iter().any(|&p| p < 0.0) {
        return Err(domain("negative BS power"));
    }
    let sources: Vec<([f64; 2], f64)> =
        positions.iter().zip(powers).filter(|(_, &p)| p > 0.0).map(|(x, &p)| (*x, p * gain_constant / threshold)).collect();
    if sources.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = powers.iter().sum();
    let r = interference_radius(total, gain_constant, eta, threshold);
    let half = eta / 2.0;
    let int_half = (half.fract() == 0.0 && half <= 16.0).then_some(half as i32);

    // Inside a source's own disc its term alone reaches the threshold.
    let inner: Vec<f64> = sources.iter().map(|(_, w)| w.powf(1.0 / eta)).collect();
    let ymin = sources.iter().map(|s| s.0[1]).fold(f64::INFINITY, f64::min) - r;
    let ymax = sources.iter().map(|s| s.0[1]).fold(f64::NEG_INFINITY, f64::max) + r;
    let (j0, j1) = ((ymin / resolution).floor() as i64, (ymax / resolution).ceil() as i64);
    let mut spans: Vec<(i64, i64)> = Vec::with_capacity(sources.len());
    let mut sure: Vec<(i64, i64)> = Vec::with_capacity(sources.len());
    let cells = |a: f64, b: f64| ((a / resolution - 0.5).ceil() as i64, (b / resolution - 0.5).floor() as i64);
    let mut count: u64 = 0;
    for j in j0..j1 {
        let y = (j as f64 + 0.5) * resolution;
        spans.clear();
        sure.clear();
        for ((p, _), &ri) in sources.iter().zip(&inner) {
            let dy = y - p[1];
            if dy.abs() <= r {
                let w = (r * r - dy * dy).sqrt();
                spans.push(cells(p[0] - w, p[0] + w));
            }
            if dy.abs() < ri {
                // shrink by a hair so rounding never counts a cell outside
                let w = (ri * ri - dy * dy).sqrt() * (1.0 - 1e-12);
                sure.push(cells(p[0] - w, p[0] + w));
            }
        }
        spans.sort_unstable();
        sure.sort_unstable();
        let mut last_i = i64::MIN;
        for &(i0, i1) in &spans {
            let mut i = i0.max(last_i.saturating_add(1));
            while i <= i1 {
                if let Some(&(_, e)) = sure.iter().find(|&&(a, b)| a <= i && i <= b) {
                    let stop = e.min(i1);
                    count += (stop - i + 1) as u64;
                    i = stop + 1;
                    continue;
                }
                let x = (i as f64 + 0.5) * resolution;
                let mut s = 0.0;
                for (p, w) in &sources {
                    let d2 = (x - p[0]).powi(2) + (y - p[1]).powi(2);
                    let dn = match int_half {
                        Some(h) => d2.powi(h),
                        None => d2.powf(half),
                    };
                    s += w / dn;
                }
                if s >= 1.0 {
                    count += 1;
                }
                i += 1;
            }
            last_i = last_i.max(i1);
        }
    }
    Ok(count as f64 * resolution * resolution)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaConfig {
    pub resolution: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        AreaConfig { resolution: 1.0 }
    }
}

/// Interfering area of one frame's transmission.
pub fn transmission_area(scenario: &Scenario, tx: &Transmission, area: &AreaConfig) -> Result<f64> {
    let pos: Vec<[f64; 2]> = tx.bs_set.iter().map(|&b| scenario.bs_positions[b]).collect();
    interfering_area(
        &pos,
        &tx.bs_power,
        scenario.gain_constant,
        scenario.path_loss_exponent,
        scenario.interference_threshold,
        area.resolution,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub avg_bs_usage: f64,
    pub avg_bs_usage_se: f64,
    pub avg_interfering_area: f64,
    pub avg_interfering_area_se: f64,
    pub per_user_slack: Vec<f64>,
    /// Nats per frame.
    pub per_user_mean_rate: Vec<f64>,
    pub frames_evaluated: usize,
}

impl Metrics {
    pub fn max_slack(&self) -> f64 {
        self.per_user_slack.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sufficient statistics; merging is exact up to float reassociation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsAccumulator {
    pub frames: usize,
    pub usage_sum: f64,
    pub usage_sq: f64,
    pub area_sum: f64,
    pub area_sq: f64,
    pub service_sum: Vec<f64>,
    pub rate_sum: Vec<f64>,
}

impl MetricsAccumulator {
    pub fn new(num_users: usize) -> Self {
        MetricsAccumulator {
            frames: 0,
            usage_sum: 0.0,
            usage_sq: 0.0,
            area_sum: 0.0,
            area_sq: 0.0,
            service_sum: alloc::vec![0.0; num_users],
            rate_sum: alloc::vec![0.0; num_users],
        }
    }

    pub fn push(&mut self, outcome: &FrameOutcome) {
        let l = outcome.bs_count as f64;
        self.frames += 1;
        self.usage_sum += l;
        self.usage_sq += l * l;
        self.area_sum += outcome.area;
        self.area_sq += outcome.area * outcome.area;
        for (a, s) in self.service_sum.iter_mut().zip(&outcome.service) {
            *a += s;
        }
        for (a, r) in self.rate_sum.iter_mut().zip(&outcome.delivered) {
            *a += r;
        }
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.frames += other.frames;
        self.usage_sum += other.usage_sum;
        self.usage_sq += other.usage_sq;
        self.area_sum += other.area_sum;
        self.area_sq += other.area_sq;
        for (a, b) in self.service_sum.iter_mut().zip(&other.service_sum) {
            *a += b;
        }
        for (a, b) in self.rate_sum.iter_mut().zip(&other.rate_sum) {
            *a += b;
        }
    }

    pub fn finish(&self, qos: &[UserQos]) -> Result<Metrics> {
        if self.frames == 0 {
            return Err(domain("no frames evaluated"));
        }
        let n = self.frames as f64;
        let se = |sum: f64, sq: f64| {
            if self.frames < 2 {
                return 0.0;
            }
            let mean = sum / n;
            let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        };
        Ok(Metrics {
            avg_bs_usage: self.usage_sum / n,
            avg_bs_usage_se: se(self.usage_sum, self.usage_sq),
            avg_interfering_area: self.area_sum / n,
            avg_interfering_area_se: se(self.area_sum, self.area_sq),
            per_user_slack: self.service_sum.iter().zip(qos).map(|(s, q)| s / n - q.target()).collect(),
            per_user_mean_rate: self.rate_sum.iter().map(|r| r / n).collect(),
            frames_evaluated: self.frames,
        })
    }
}

/// A trained (or supplied) policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub scheme: Scheme,
    pub lambda: Vec<f64>,
    pub priority: PriorityOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub bs_count: usize,
    pub area: f64,
    pub service: Vec<f64>,
    pub delivered: Vec<f64>,
}

/// Candidates of frame `index` drawn from the stream `seed`.
pub fn frame_candidates(
    scenario: &Scenario,
    scheme: Scheme,
    priority: &PriorityOrder,
    seed: u64,
    index: u64,
) -> Result<FrameCandidates> {
    let (state, key) = sample_channel_with_key(scenario, seed, index);
    enumerate_candidates(&state, scenario, priority, scheme.families(), key)
}

pub fn evaluate_frame(
    scenario: &Scenario,
    policy: &Policy,
    qos: &[UserQos],
    seed: u64,
    index: u64,
    area: Option<&AreaConfig>,
) -> Result<FrameOutcome> {
    let cands = frame_candidates(scenario, policy.scheme, &policy.priority, seed, index)?;
    let bt = scenario.bt();
    let d = decide(policy.scheme, &cands, &policy.lambda, qos, bt)?;
    let a = match area {
        Some(cfg) if d.bs_count > 0 => {
            let tx = transmission(&cands, &d, bt, &scenario.tx_antennas)?;
            transmission_area(scenario, &tx, cfg)?
        }
        _ => 0.0,
    };
    Ok(FrameOutcome { bs_count: d.bs_count, area: a, service: d.service, delivered: d.delivered })
}

/// Accumulates frames `range` of the evaluation stream of `master_seed`.
pub fn evaluate_range(
    scenario: &Scenario,
    policy: &Policy,
    master_seed: u64,
    range: core::ops::Range<u64>,
    area: Option<&AreaConfig>,
) -> Result<MetricsAccumulator> {
    let qos = scenario.user_qos()?;
    let seed = derive_seed(master_seed, stream::EVAL);
    let mut acc = MetricsAccumulator::new(scenario.num_users());
    for i in range {
        acc.push(&evaluate_frame(scenario, policy, &qos, seed, i, area)?);
    }
    Ok(acc)
}

/// Sequential evaluation on fresh frames.
pub fn run_simulation(
    scenario: &Scenario,
    policy: &Policy,
    frames: usize,
    master_seed: u64,
    area: Option<&AreaConfig>,
) -> Result<Metrics> {
    if frames == 0 {
        return Err(domain("at least one evaluation frame is required"));
    }
    let acc = evaluate_range(scenario, policy, master_seed, 0..frames as u64, area)?;
    acc.finish(&scenario.user_qos()?)
}

/// Training frames drawn from the training stream of `master_seed`.
pub fn training_frames(
    scenario: &Scenario,
    scheme: Scheme,
    priority: &PriorityOrder,
    frames: usize,
    master_seed: u64,
) -> Result<Vec<FrameCandidates>> {
    training_frames_range(scenario, scheme, priority, master_seed, 0..frames as u64)
}

/// Frames `range` of the training stream.
pub fn training_frames_range(
    scenario: &Scenario,
    scheme: Scheme,
    priority: &PriorityOrder,
    master_seed: u64,
    range: core::ops::Range<u64>,
) -> Result<Vec<FrameCandidates>> {
    let seed = derive_seed(master_seed, stream::TRAIN);
    range.map(|i| frame_candidates(scenario, scheme, priority, seed, i)).collect()
}

/// Sequential dual ascent for one scheme.
pub fn train_lambda(
    scenario: &Scenario,
    scheme: Scheme,
    priority: &PriorityOrder,
    frames: usize,
    master_seed: u64,
    config: &AscentConfig,
) -> Result<DualState> {
    if frames == 0 {
        return Err(domain("at least one training frame is required"));
    }
    let qos = scenario.user_qos()?;
    let set = training_frames(scenario, scheme, priority, frames, master_seed)?;
    let mut oracle = FrameSet { scheme, frames: &set, qos: &qos, bt: scenario.bt() };
    train(&mut oracle, config, None)
}
