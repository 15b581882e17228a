//! BD-PT: per-state power split across block-diagonalized users and the
//! Lagrangian mode scores.
//!
//! For fixed multipliers the per-frame problem is
//! `min_{modes} L + sum_n lambda_n exp(-theta_n R_n)`. Inside a multi-user
//! mode the split of `P_L` is priced by a power multiplier `zeta`; each
//! user's water level then has a closed form on every water-filling bin, and
//! the total allocated power is strictly decreasing in `zeta`.

use alloc::vec::Vec;

use crate::candidates::{CandidateId, FrameCandidates, MultiUserCandidate, SingleUserCandidate};
use crate::qos::UserQos;
use crate::rates::Link;
use crate::{domain, Error, Result};

/// One user's share of a multi-user power split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSplit {
    pub power: f64,
    pub rate: f64,
    /// Water level, zero for an unfunded user.
    pub water_level: f64,
    pub active_count: usize,
}

impl UserSplit {
    const ZERO: Self = Self { power: 0.0, rate: 0.0, water_level: 0.0, active_count: 0 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSplit {
    pub users: Vec<UserSplit>,
    /// The power multiplier `zeta` at the solution.
    pub zeta: f64,
    pub ln_zeta: f64,
}

impl PowerSplit {
    pub fn total_power(&self) -> f64 {
        self.users.iter().map(|u| u.power).sum()
    }
}

/// `zeta = BT lambda theta exp(-theta R) / mu`: the power price at which a
/// user with water level `mu` and rate `R` is stationary.
pub fn stationary_zeta(bt: f64, lambda: f64, theta: f64, water_level: f64, rate: f64) -> f64 {
    bt * lambda * theta * (-theta * rate).exp() / water_level
}

/// Per-user data for evaluating the power response to `ln zeta`.
struct Priced<'a> {
    snrs: &'a [f64],
    /// `ln(BT theta lambda)`.
    ln_scale: f64,
    /// `BT theta`.
    k: f64,
    /// Prefix sums of `ln eps_j` and `1/eps_j`.
    log_prefix: Vec<f64>,
    inv_prefix: Vec<f64>,
    /// `ln zeta` at which the `i`-th subchannel starts receiving power.
    thresholds: Vec<f64>,
}

impl<'a> Priced<'a> {
    fn new(snrs: &'a [f64], lambda: f64, theta: f64, bt: f64) -> Self {
        let k = bt * theta;
        let ln_scale = (bt * theta * lambda).ln();
        let mut log_prefix = Vec::with_capacity(snrs.len());
        let mut inv_prefix = Vec::with_capacity(snrs.len());
        let mut thresholds = Vec::with_capacity(snrs.len());
        let (mut ls, mut is) = (0.0, 0.0);
        for (i, &e) in snrs.iter().enumerate() {
            let le = e.ln();
            // rate at mu = 1/eps_i uses the i channels above it
            let rate_at = bt * (ls - i as f64 * le);
            thresholds.push(ln_scale + le - theta * rate_at);
            ls += le;
            is += 1.0 / e;
            log_prefix.push(ls);
            inv_prefix.push(is);
        }
        Priced { snrs, ln_scale, k, log_prefix, inv_prefix, thresholds }
    }

    /// `(power, d power / d ln zeta, ln mu, active count)` at `x = ln zeta`.
    fn response(&self, x: f64) -> (f64, f64, f64, usize) {
        let i = self.thresholds.iter().take_while(|&&t| x < t).count();
        if i == 0 {
            return (0.0, 0.0, f64::NEG_INFINITY, 0);
        }
        let fi = i as f64;
        let denom = 1.0 + fi * self.k;
        let ln_mu = (self.ln_scale - x - self.k * self.log_prefix[i - 1]) / denom;
        let mu = ln_mu.exp();
        let power = (fi * mu - self.inv_prefix[i - 1]).max(0.0);
        (power, -fi * mu / denom, ln_mu, i)
    }
}

/// Optimal split of `total_power` among the users of a multi-user mode.
///
/// `links[k]` is `None` for a user without a precoder; such users, and
/// users with `lambda == 0` or `theta == 0`, receive no power. With a single
/// priced user the split is plain water-filling.
pub fn optimal_power_split(
    links: &[Option<&Link>],
    lambda: &[f64],
    theta: &[f64],
    total_power: f64,
    bt: f64,
) -> Result<PowerSplit> {
    if links.len() != lambda.len() || links.len() != theta.len() {
        return Err(domain("power split inputs differ in length"));
    }
    if !(total_power > 0.0 && total_power.is_finite()) {
        return Err(domain("multi-user power split needs a positive power budget"));
    }
    if lambda.iter().chain(theta).any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(domain("multipliers and QoS exponents must be finite and >= 0"));
    }
    let priced: Vec<Option<Priced>> = links
        .iter()
        .zip(lambda.iter().zip(theta))
        .map(|(l, (&lam, &th))| match l {
            Some(link) if lam > 0.0 && th > 0.0 && !link.is_dead() => Some(Priced::new(&link.snrs, lam, th, bt)),
            _ => None,
        })
        .collect();
    let funded = priced.iter().filter(|p| p.is_some()).count();
    if funded == 0 {
        return Err(Error::NoPricedUser);
    }

    if funded == 1 {
        let idx = priced.iter().position(|p| p.is_some()).unwrap_or(0);
        let link = links[idx].ok_or(Error::NoPricedUser)?;
        let w = link.waterfill(total_power, bt).ok_or(Error::NoPricedUser)?;
        let mut users = alloc::vec![UserSplit::ZERO; links.len()];
        users[idx] = UserSplit { power: total_power, rate: w.rate, water_level: w.water_level, active_count: w.active_count };
        let zeta = stationary_zeta(bt, lambda[idx], theta[idx], w.water_level, w.rate);
        return Ok(PowerSplit { users, zeta, ln_zeta: zeta.ln() });
    }

    let excess = |x: f64| -> (f64, f64) {
        priced.iter().flatten().fold((-total_power, 0.0), |(g, d), p| {
            let (pw, dp, _, _) = p.response(x);
            (g + pw, d + dp)
        })
    };

    // At `hi` nobody is funded; walk `lo` down until the budget is exceeded.
    let mut hi = priced.iter().flatten().map(|p| p.thresholds[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut lo = hi - 1.0;
    let mut width = 1.0;
    let mut g_lo = excess(lo).0;
    while g_lo < 0.0 {
        hi = lo;
        width *= 2.0;
        lo -= width;
        g_lo = excess(lo).0;
        if width > 1e6 {
            return Err(domain("power multiplier bracket did not close"));
        }
    }

    // Safeguarded Newton on ln zeta.
    let tol = 1e-13 * total_power;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (g, d) = excess(x);
        if g.abs() <= tol {
            break;
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if d < 0.0 { x - g / d } else { f64::NAN };
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }

    let users = priced
        .iter()
        .map(|p| match p {
            None => UserSplit::ZERO,
            Some(p) => {
                let (power, _, ln_mu, i) = p.response(x);
                if i == 0 {
                    return UserSplit::ZERO;
                }
                let mu = ln_mu.exp();
                let rate = p.snrs[..i].iter().map(|e| (e * mu).ln()).sum::<f64>() * bt;
                UserSplit { power, rate, water_level: mu, active_count: i }
            }
        })
        .collect();
    Ok(PowerSplit { users, zeta: x.exp(), ln_zeta: x })
}

/// Scored candidate. `service[n]` is `exp(-theta_n R_n)` (one for users
/// the mode does not serve) and `powers[n]` the power given to user `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEvaluation {
    pub id: CandidateId,
    pub score: f64,
    pub rates: Vec<f64>,
    pub powers: Vec<f64>,
    pub service: Vec<f64>,
}

impl ModeEvaluation {
    pub fn silence(lambda: &[f64]) -> Self {
        let k = lambda.len();
        ModeEvaluation {
            id: CandidateId::Silence,
            score: lambda.iter().sum(),
            rates: alloc::vec![0.0; k],
            powers: alloc::vec![0.0; k],
            service: alloc::vec![1.0; k],
        }
    }
}

fn score_of(l: usize, lambda: &[f64], service: &[f64]) -> f64 {
    l as f64 + lambda.iter().zip(service).map(|(a, s)| a * s).sum::<f64>()
}

/// `psi_L` for a multi-user candidate, with the optimal split of `P_L`.
pub fn evaluate_multi_user(
    c: &MultiUserCandidate,
    lambda: &[f64],
    qos: &[UserQos],
    bt: f64,
) -> Result<ModeEvaluation> {
    let k = lambda.len();
    let l = c.mode.cardinality();
    let mut rates = alloc::vec![0.0; k];
    let mut powers = alloc::vec![0.0; k];
    let mut service = alloc::vec![1.0; k];
    if !c.users.is_empty() {
        let links: Vec<Option<&Link>> = c.users.iter().map(|u| u.link.as_ref()).collect();
        let lam: Vec<f64> = c.users.iter().map(|u| lambda[u.user]).collect();
        let th: Vec<f64> = c.users.iter().map(|u| qos[u.user].theta).collect();
        match optimal_power_split(&links, &lam, &th, c.total_power, bt) {
            Ok(split) => {
                for (u, s) in c.users.iter().zip(&split.users) {
                    rates[u.user] = s.rate;
                    powers[u.user] = s.power;
                    service[u.user] = qos[u.user].service_term(s.rate);
                }
            }
            Err(Error::NoPricedUser) => {}
            Err(e) => return Err(e),
        }
    }
    let score = score_of(l, lambda, &service);
    Ok(ModeEvaluation { id: CandidateId::MultiUser { l }, score, rates, powers, service })
}

/// `psi_{L,n}`: user `n` alone at full power, every other user idle.
pub fn evaluate_single_user(c: &SingleUserCandidate, lambda: &[f64], qos: &[UserQos]) -> ModeEvaluation {
    let k = lambda.len();
    let l = c.mode.cardinality();
    let mut rates = alloc::vec![0.0; k];
    let mut powers = alloc::vec![0.0; k];
    let mut service = alloc::vec![1.0; k];
    let r = c.rate();
    rates[c.user] = r;
    service[c.user] = qos[c.user].service_term(r);
    if r > 0.0 {
        powers[c.user] = c.allocation.as_ref().map_or(0.0, |w| w.powers.iter().sum());
    }
    let score = score_of(l, lambda, &service);
    ModeEvaluation { id: CandidateId::SingleUser { l, user: c.user }, score, rates, powers, service }
}

/// Result of scoring a candidate list: the evaluations, the indices
/// attaining the minimum, and the one picked by the frame's tie key.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeChoice {
    pub evaluations: Vec<ModeEvaluation>,
    pub tied: Vec<usize>,
    pub chosen: usize,
}

impl ModeChoice {
    pub fn best(&self) -> &ModeEvaluation {
        &self.evaluations[self.chosen]
    }

    /// Selection probability of evaluation `idx`: uniform over exact ties.
    pub fn probability(&self, idx: usize) -> f64 {
        if self.tied.contains(&idx) {
            1.0 / self.tied.len() as f64
        } else {
            0.0
        }
    }
}

/// Indices whose score equals the minimum exactly, and the member picked by
/// `tie_key`.
pub fn argmin_with_ties(scores: impl Iterator<Item = f64>, tie_key: u64) -> Result<(Vec<usize>, usize)> {
    let mut best = f64::INFINITY;
    let mut tied = Vec::new();
    for (i, s) in scores.enumerate() {
        if s.is_nan() {
            return Err(domain("NaN mode score"));
        }
        if s < best {
            best = s;
            tied.clear();
            tied.push(i);
        } else if s == best {
            tied.push(i);
        }
    }
    if tied.is_empty() {
        return Err(domain("no candidate mode to choose from"));
    }
    let chosen = tied[(tie_key % tied.len() as u64) as usize];
    Ok((tied, chosen))
}

/// Chooses among silence, the multi-user modes and the single-user modes of
/// `cands` by minimum score.
pub fn mode_scores(cands: &FrameCandidates, lambda: &[f64], qos: &[UserQos], bt: f64) -> Result<ModeChoice> {
    let mut evaluations = Vec::with_capacity(cands.mode_count());
    evaluations.push(ModeEvaluation::silence(lambda));
    for c in &cands.multi_user {
        evaluations.push(evaluate_multi_user(c, lambda, qos, bt)?);
    }
    for c in &cands.single_user {
        evaluations.push(evaluate_single_user(c, lambda, qos));
    }
    let (tied, chosen) = argmin_with_ties(evaluations.iter().map(|e| e.score), cands.tie_key)?;
    Ok(ModeChoice { evaluations, tied, chosen })
}
