//! The per-state candidate modes every scheme scores.
//!
//! Everything here is independent of the dual multipliers, so a training
//! run enumerates candidates once per frame and reuses them across ascent
//! iterations.

use alloc::vec::Vec;

use crate::channel::{stacked_channel, ChannelState, Scenario};
use crate::rates::{bd_precoders, Link, WaterfillResult};
use crate::selection::{active_user_selection, priority_bs_selection, single_user_bs_selection, PriorityOrder, TransmissionMode};
use crate::Result;

/// Identifies a candidate inside one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CandidateId {
    Silence,
    /// Block-diagonalized mode on the priority subset of size `l`.
    MultiUser { l: usize },
    /// Norm-selected subset of size `l` serving `user` alone.
    SingleUser { l: usize, user: usize },
    /// Priority subset of size `l` shared in time by all users.
    Tdma { l: usize },
}

impl CandidateId {
    pub fn bs_count(&self) -> usize {
        match *self {
            CandidateId::Silence => 0,
            CandidateId::MultiUser { l } | CandidateId::SingleUser { l, .. } | CandidateId::Tdma { l } => l,
        }
    }
}

/// One active user of a block-diagonalized mode. `link` is `None` when the
/// user's precoder does not exist.
#[derive(Debug, Clone, PartialEq)]
pub struct BdUser {
    pub user: usize,
    pub link: Option<Link>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiUserCandidate {
    pub mode: TransmissionMode,
    pub users: Vec<BdUser>,
    pub total_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleUserCandidate {
    pub mode: TransmissionMode,
    pub user: usize,
    pub link: Link,
    /// Water-filled allocation at the full power `P_L`; `None` for a dead
    /// link (rate zero).
    pub allocation: Option<WaterfillResult>,
}

impl SingleUserCandidate {
    pub fn rate(&self) -> f64 {
        self.allocation.as_ref().map_or(0.0, |w| w.rate)
    }
}

/// Priority subset of size `l` with each user's single-user link over it.
#[derive(Debug, Clone, PartialEq)]
pub struct TdmaCandidate {
    pub l: usize,
    pub bs_set: Vec<usize>,
    pub links: Vec<Link>,
    pub allocations: Vec<Option<WaterfillResult>>,
}

impl TdmaCandidate {
    pub fn rates(&self) -> Vec<f64> {
        self.allocations.iter().map(|a| a.as_ref().map_or(0.0, |w| w.rate)).collect()
    }
}

/// Which candidate families to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateFamilies {
    pub multi_user: bool,
    pub single_user: bool,
    pub tdma: bool,
}

impl CandidateFamilies {
    pub const ALL: Self = Self { multi_user: true, single_user: true, tdma: true };
    pub const BDPT: Self = Self { multi_user: true, single_user: true, tdma: false };
    pub const PTONLY: Self = Self { multi_user: false, single_user: true, tdma: false };
    pub const TDMA: Self = Self { multi_user: false, single_user: false, tdma: true };

    pub fn union(self, other: Self) -> Self {
        Self {
            multi_user: self.multi_user || other.multi_user,
            single_user: self.single_user || other.single_user,
            tdma: self.tdma || other.tdma,
        }
    }
}

/// All candidates for one frame. Silence is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCandidates {
    pub frame_index: u64,
    pub tie_key: u64,
    /// Indexed by `l - 1`.
    pub multi_user: Vec<MultiUserCandidate>,
    /// `l`-major: entry `(l - 1) * K_mu + n`.
    pub single_user: Vec<SingleUserCandidate>,
    /// Indexed by `l - 1`.
    pub tdma: Vec<TdmaCandidate>,
}

impl FrameCandidates {
    /// Silence plus every multi-user and single-user mode.
    pub fn mode_count(&self) -> usize {
        1 + self.multi_user.len() + self.single_user.len()
    }

    /// `(id, mode)` for silence, multi-user and single-user candidates.
    pub fn modes(&self) -> Vec<(CandidateId, TransmissionMode)> {
        let mut out = Vec::with_capacity(self.mode_count());
        out.push((CandidateId::Silence, TransmissionMode::silence()));
        for (i, c) in self.multi_user.iter().enumerate() {
            out.push((CandidateId::MultiUser { l: i + 1 }, c.mode.clone()));
        }
        for c in &self.single_user {
            out.push((CandidateId::SingleUser { l: c.mode.cardinality(), user: c.user }, c.mode.clone()));
        }
        out
    }
}

/// Builds the requested candidate families for one fading state.
pub fn enumerate_candidates(
    state: &ChannelState,
    scenario: &Scenario,
    priority: &PriorityOrder,
    families: CandidateFamilies,
    tie_key: u64,
) -> Result<FrameCandidates> {
    let k_bs = scenario.num_bs();
    let k_mu = scenario.num_users();
    let bt = scenario.bt();
    let gains = state.gain_matrix(scenario);

    let mut priority_sets = Vec::new();
    if families.multi_user || families.tdma {
        for l in 1..=k_bs {
            priority_sets.push(priority_bs_selection(&gains, priority, l)?);
        }
    }

    let mut multi_user = Vec::new();
    if families.multi_user {
        for (i, bs_set) in priority_sets.iter().enumerate() {
            let users = active_user_selection(state, scenario, bs_set, priority)?;
            let bd_users = if users.is_empty() {
                Vec::new()
            } else {
                bd_precoders(state, bs_set, &users)?
                    .precoders
                    .iter()
                    .map(|p| BdUser { user: p.user, link: p.link().filter(|l| !l.is_dead()) })
                    .collect()
            };
            multi_user.push(MultiUserCandidate {
                mode: TransmissionMode { bs_set: bs_set.clone(), users },
                users: bd_users,
                total_power: scenario.total_power(i + 1),
            });
        }
    }

    let mut single_user = Vec::new();
    if families.single_user {
        for l in 1..=k_bs {
            let power = scenario.total_power(l);
            for n in 0..k_mu {
                let bs_set = single_user_bs_selection(gains.row(n), l)?;
                let link = Link::from_channel(&stacked_channel(state, &bs_set, n)?);
                let allocation = link.waterfill(power, bt);
                single_user.push(SingleUserCandidate {
                    mode: TransmissionMode { bs_set, users: alloc::vec![n] },
                    user: n,
                    link,
                    allocation,
                });
            }
        }
    }

    let mut tdma = Vec::new();
    if families.tdma {
        for (i, bs_set) in priority_sets.iter().enumerate() {
            let power = scenario.total_power(i + 1);
            let links: Vec<Link> = (0..k_mu)
                .map(|n| stacked_channel(state, bs_set, n).map(|h| Link::from_channel(&h)))
                .collect::<Result<_>>()?;
            let allocations = links.iter().map(|l| l.waterfill(power, bt)).collect();
            tdma.push(TdmaCandidate { l: i + 1, bs_set: bs_set.clone(), links, allocations });
        }
    }

    Ok(FrameCandidates { frame_index: state.frame_index, tie_key, multi_user, single_user, tdma })
}
