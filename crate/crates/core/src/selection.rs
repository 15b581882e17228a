//! Per-state choice of base-station subsets and active-user sets.
//!
//! Priorities come from each user's effective-capacity fraction
//! `C / C_max`. Ties are always broken towards the lower index.

use alloc::format;
use alloc::vec::Vec;


use crate::channel::{average_power_gain_matrix, sample_channel, stacked_channel, ChannelState, GainMatrix, Scenario};
use crate::linalg::CMat;
use crate::qos::effective_capacity;
use crate::rates::{bd_precoder_for, Link};
use crate::{domain, Error, Result};

/// Users sorted by descending effective-capacity fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityOrder {
    /// `order[0]` is the highest-priority user.
    pub order: Vec<usize>,
    /// `C_n / C_max^(n)` indexed by user.
    pub fractions: Vec<f64>,
}

impl PriorityOrder {
    /// Position of `user` in the order (0 = highest priority).
    pub fn rank_of(&self, user: usize) -> usize {
        self.order.iter().position(|&u| u == user).expect("user in priority order")
    }

    pub fn identity(num_users: usize) -> Self {
        Self { order: (0..num_users).collect(), fractions: alloc::vec![0.0; num_users] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Silence,
    SingleUser,
    MultiUser,
}

/// A base-station subset together with the users it serves.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransmissionMode {
    /// Selected base stations, in selection order.
    pub bs_set: Vec<usize>,
    /// Active users, in admission order.
    pub users: Vec<usize>,
}

impl TransmissionMode {
    pub fn silence() -> Self {
        Self::default()
    }

    /// Number of active base stations `L`.
    pub fn cardinality(&self) -> usize {
        self.bs_set.len()
    }

    /// A subset that ends up serving nobody still counts as a multi-user
    /// slot; it can never win a score comparison against silence.
    pub fn kind(&self) -> ModeKind {
        match (self.bs_set.len(), self.users.len()) {
            (0, _) => ModeKind::Silence,
            (_, 1) => ModeKind::SingleUser,
            _ => ModeKind::MultiUser,
        }
    }
}

/// Rate over the full stacked channel `H_n` with power `P_{K_bs}`.
pub fn max_rate(state: &ChannelState, scenario: &Scenario, user: usize) -> f64 {
    let all: Vec<usize> = (0..scenario.num_bs()).collect();
    let h = stacked_channel(state, &all, user).expect("full base-station set is valid");
    Link::from_channel(&h).rate(scenario.total_power(scenario.num_bs()), scenario.bt())
}

/// `C_max^(n)` for every user, estimated from the given channel states.
/// Idle users (zero exponent) report the mean rate.
pub fn cmax_from_states<'a>(
    scenario: &Scenario,
    states: impl IntoIterator<Item = &'a ChannelState>,
) -> Result<Vec<f64>> {
    let qos = scenario.user_qos()?;
    let k_mu = scenario.num_users();
    let mut samples: Vec<Vec<f64>> = alloc::vec![Vec::new(); k_mu];
    for st in states {
        for (n, s) in samples.iter_mut().enumerate() {
            s.push(max_rate(st, scenario, n));
        }
    }
    samples
        .iter()
        .zip(&qos)
        .map(|(s, q)| {
            if s.is_empty() {
                return Err(domain("no frames for C_max estimation"));
            }
            if q.theta > 0.0 {
                effective_capacity(s, q.theta)
            } else {
                Ok(s.iter().sum::<f64>() / s.len() as f64)
            }
        })
        .collect()
}

/// Monte-Carlo `C_max` over `mc_frames` fresh draws keyed by `seed`.
pub fn compute_cmax(scenario: &Scenario, mc_frames: usize, seed: u64) -> Result<Vec<f64>> {
    if mc_frames == 0 {
        return Err(domain("C_max estimation needs at least one frame"));
    }
    let states: Vec<ChannelState> = (0..mc_frames as u64).map(|k| sample_channel(scenario, seed, k)).collect();
    cmax_from_states(scenario, &states)
}

/// Sorts users by descending `C_n / C_max^(n)`.
pub fn user_priority_order(arrivals: &[f64], cmax: &[f64]) -> Result<PriorityOrder> {
    if arrivals.len() != cmax.len() {
        return Err(domain("arrival and C_max lists differ in length"));
    }
    let mut fractions = Vec::with_capacity(arrivals.len());
    for (n, (&c, &cm)) in arrivals.iter().zip(cmax).enumerate() {
        if c > 0.0 && !(cm > 0.0) {
            return Err(Error::InfeasibleUser { user: n });
        }
        fractions.push(if c == 0.0 { 0.0 } else { c / cm });
    }
    let mut order: Vec<usize> = (0..arrivals.len()).collect();
    order.sort_by(|&a, &b| fractions[b].partial_cmp(&fractions[a]).unwrap_or(core::cmp::Ordering::Equal));
    Ok(PriorityOrder { order, fractions })
}

/// Round-robin over users in priority order; each user in turn takes the
/// unselected base station with its largest aggregate gain.
pub fn priority_bs_selection(gains: &GainMatrix, priority: &PriorityOrder, l: usize) -> Result<Vec<usize>> {
    let k_bs = gains.num_bs();
    if l == 0 || l > k_bs {
        return Err(domain(format!("cannot select {l} of {k_bs} base stations")));
    }
    let mut free: Vec<usize> = (0..k_bs).collect();
    let mut chosen = Vec::with_capacity(l);
    let mut j = 0;
    while chosen.len() < l {
        let row = gains.row(priority.order[j]);
        let (pos, _) = free
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (p, &m)| if row[m] > best.1 { (p, row[m]) } else { best });
        chosen.push(free.remove(pos));
        j = (j + 1) % priority.order.len();
    }
    Ok(chosen)
}

/// Indices of the `l` largest gains in `row`, ties to the lower index.
pub fn single_user_bs_selection(row: &[f64], l: usize) -> Result<Vec<usize>> {
    if l == 0 || l > row.len() {
        return Err(domain(format!("cannot select {l} of {} base stations", row.len())));
    }
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap_or(core::cmp::Ordering::Equal));
    idx.truncate(l);
    Ok(idx)
}

/// Mean post-precoding channel power per transmit antenna,
/// `(1/M) E{||H Gamma||_F^2 | Gamma}` for independent zero-mean entries.
fn mean_precoded_power(avg: &crate::channel::PowerGainMatrix, precoder: &CMat, m_sigma: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..avg.rows {
        for i in 0..avg.cols {
            let row_energy: f64 = (0..precoder.cols()).map(|j| precoder[(i, j)].norm_sqr()).sum();
            acc += avg.get(k, i) * row_energy;
        }
    }
    acc / m_sigma as f64
}

/// Greedy joint channel-priority admission of users for the subset
/// `bs_set`. A candidate is favoured when its instantaneous post-precoding
/// power beats its average; among equals the higher-priority user wins.
/// Admission stops at the first winner whose average is zero.
pub fn active_user_selection(
    state: &ChannelState,
    scenario: &Scenario,
    bs_set: &[usize],
    priority: &PriorityOrder,
) -> Result<Vec<usize>> {
    if bs_set.is_empty() {
        return Err(domain("active-user selection needs a non-empty base-station set"));
    }
    let m_sigma: usize = bs_set.iter().map(|&m| scenario.tx_antennas[m]).sum();
    let k_mu = scenario.num_users();
    let channels: Vec<CMat> = (0..k_mu).map(|n| stacked_channel(state, bs_set, n)).collect::<Result<_>>()?;
    let averages: Vec<_> =
        (0..k_mu).map(|n| average_power_gain_matrix(scenario, bs_set, n)).collect::<Result<Vec<_>>>()?;

    let mut admitted: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = priority.order.clone();
    while !remaining.is_empty() {
        // (indicator, priority rank, varpi) per remaining user
        let mut best: Option<(bool, usize, f64, usize)> = None;
        for &n in &remaining {
            let mut trial: Vec<CMat> = admitted.iter().map(|&u| channels[u].clone()).collect();
            trial.push(channels[n].clone());
            let pre = bd_precoder_for(&trial, trial.len() - 1, n);
            let (varpi, instant) = match &pre.precoder {
                Some(g) => (mean_precoded_power(&averages[n], g, m_sigma), pre.effective.frobenius_sq() / m_sigma as f64),
                None => (0.0, 0.0),
            };
            let indicator = varpi > 0.0 && varpi <= instant;
            let rank = priority.rank_of(n);
            let better = match best {
                None => true,
                Some((bi, br, _, _)) => (indicator && !bi) || (indicator == bi && rank < br),
            };
            if better {
                best = Some((indicator, rank, varpi, n));
            }
        }
        let (_, _, varpi, winner) = best.expect("remaining users");
        if varpi > 0.0 {
            admitted.push(winner);
            remaining.retain(|&u| u != winner);
        } else {
            break;
        }
    }
    Ok(admitted)
}
