//! Uniform per-frame decision interface over the three schemes.

use alloc::vec::Vec;

use crate::bdpt::mode_scores;
use crate::candidates::{CandidateFamilies, CandidateId, FrameCandidates};
use crate::ptonly::ptonly_mode_choice;
use crate::qos::UserQos;
use crate::rates::Link;
use crate::tdma::tdma_mode_choice;
use crate::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    BdPt,
    Tdma,
    PtOnly,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::BdPt, Scheme::Tdma, Scheme::PtOnly];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::BdPt => "bdpt",
            Scheme::Tdma => "tdma",
            Scheme::PtOnly => "ptonly",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| s.tag() == tag)
    }

    pub fn families(self) -> CandidateFamilies {
        match self {
            Scheme::BdPt => CandidateFamilies::BDPT,
            Scheme::Tdma => CandidateFamilies::TDMA,
            Scheme::PtOnly => CandidateFamilies::PTONLY,
        }
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Outcome of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub id: CandidateId,
    pub bs_count: usize,
    pub score: f64,
    /// Number of candidates sharing the minimum score.
    pub tie_count: usize,
    /// `exp(-theta_n * served_n)` per user: the constraint sample.
    pub service: Vec<f64>,
    /// Nats delivered to each user this frame (slot-weighted for TDMA).
    pub delivered: Vec<f64>,
    /// Power assigned to each user while it transmits.
    pub powers: Vec<f64>,
    /// Fraction of the frame each user transmits.
    pub time_shares: Vec<f64>,
    /// Every candidate score, in evaluation order.
    pub scores: Vec<(CandidateId, f64)>,
}

/// Runs the scheme's per-frame procedure on precomputed candidates.
pub fn decide(scheme: Scheme, cands: &FrameCandidates, lambda: &[f64], qos: &[UserQos], bt: f64) -> Result<Decision> {
    if lambda.len() != qos.len() {
        return Err(domain("one multiplier per user is required"));
    }
    let k = lambda.len();
    match scheme {
        Scheme::BdPt | Scheme::PtOnly => {
            let choice = if scheme == Scheme::BdPt {
                mode_scores(cands, lambda, qos, bt)?
            } else {
                ptonly_mode_choice(cands, lambda, qos)?
            };
            let scores = choice.evaluations.iter().map(|e| (e.id, e.score)).collect();
            let best = choice.best();
            let time_shares = best.powers.iter().map(|&p| if p > 0.0 { 1.0 } else { 0.0 }).collect();
            Ok(Decision {
                id: best.id,
                bs_count: best.id.bs_count(),
                score: best.score,
                tie_count: choice.tied.len(),
                service: best.service.clone(),
                delivered: best.rates.clone(),
                powers: best.powers.clone(),
                time_shares,
                scores,
            })
        }
        Scheme::Tdma => {
            let choice = tdma_mode_choice(cands, lambda, qos)?;
            let scores = choice.evaluations.iter().map(|e| (e.id(), e.score)).collect();
            let best = choice.best();
            let power = if best.l == 0 {
                0.0
            } else {
                cands.tdma[best.l - 1].allocations.iter().flatten().map(|w| w.powers.iter().sum::<f64>()).fold(0.0, f64::max)
            };
            let powers = (0..k).map(|n| if best.shares[n] > 0.0 { power } else { 0.0 }).collect();
            Ok(Decision {
                id: best.id(),
                bs_count: best.l,
                score: best.score,
                tie_count: choice.tied.len(),
                service: best.service.clone(),
                delivered: (0..k).map(|n| best.shares[n] * best.slot_rates[n]).collect(),
                powers,
                time_shares: best.shares.clone(),
                scores,
            })
        }
    }
}

/// Physical layout of a decision: which BSs transmit and the time-averaged
/// power each radiates.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub bs_set: Vec<usize>,
    pub bs_power: Vec<f64>,
}

impl Transmission {
    pub fn silent() -> Self {
        Transmission { bs_set: Vec::new(), bs_power: Vec::new() }
    }

    pub fn total_power(&self) -> f64 {
        self.bs_power.iter().sum()
    }
}

/// Per-BS power of a decision: every served user's covariance
/// `D diag(rho) D^H`, weighted by its time share, summed over the antenna
/// rows of each selected BS.
pub fn transmission(cands: &FrameCandidates, decision: &Decision, bt: f64, tx_antennas: &[usize]) -> Result<Transmission> {
    let (bs_set, links): (&[usize], Vec<(usize, &Link)>) = match decision.id {
        CandidateId::Silence => return Ok(Transmission::silent()),
        CandidateId::MultiUser { l } => {
            let c = cands.multi_user.get(l - 1).ok_or_else(|| domain("missing multi-user candidate"))?;
            (&c.mode.bs_set, c.users.iter().filter_map(|u| u.link.as_ref().map(|l| (u.user, l))).collect())
        }
        CandidateId::SingleUser { l, user } => {
            let k = decision.powers.len();
            let c = cands.single_user.get((l - 1) * k + user).ok_or_else(|| domain("missing single-user candidate"))?;
            (&c.mode.bs_set, alloc::vec![(user, &c.link)])
        }
        CandidateId::Tdma { l } => {
            let c = cands.tdma.get(l - 1).ok_or_else(|| domain("missing TDMA candidate"))?;
            (&c.bs_set, c.links.iter().enumerate().collect())
        }
    };
    let dims: Vec<usize> = bs_set.iter().map(|&b| tx_antennas[b]).collect();
    let mut antenna = alloc::vec![0.0; dims.iter().sum()];
    for (user, link) in links {
        let (p, t) = (decision.powers[user], decision.time_shares[user]);
        if p <= 0.0 || t <= 0.0 {
            continue;
        }
        if let Some(w) = link.waterfill(p, bt) {
            for (a, v) in antenna.iter_mut().zip(link.antenna_powers(&w.powers)) {
                *a += t * v;
            }
        }
    }
    let mut rest = &antenna[..];
    let bs_power = dims
        .iter()
        .map(|&m| {
            let (head, tail) = rest.split_at(m);
            rest = tail;
            head.iter().sum()
        })
        .collect();
    Ok(Transmission { bs_set: bs_set.to_vec(), bs_power })
}
