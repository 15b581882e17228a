//! TDMA: each priority subset `Omega_L` is time-shared by all users, each
//! transmitting alone at the full power `P_L` during its slot.

use alloc::vec::Vec;

use crate::bdpt::argmin_with_ties;
use crate::candidates::{CandidateId, FrameCandidates};
use crate::qos::UserQos;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeShares {
    /// Slot fraction per user, summing to one.
    pub shares: Vec<f64>,
    /// Time-budget multiplier `delta`; zero on the degenerate path.
    pub delta: f64,
    /// No user has `lambda theta R > 0`; the shares are uniform and carry
    /// no information.
    pub degenerate: bool,
}

/// Minimizes `sum_n lambda_n exp(-theta_n t_n R_n)` over the simplex.
///
/// Stationarity gives `t_n = [ln(a_n / delta) / b_n]^+` with
/// `a_n = lambda_n theta_n R_n` and `b_n = theta_n R_n`. The users with
/// positive share are those with the largest `a_n`, and on a fixed active
/// set `ln delta` has a closed form, so the active set is found by scanning
/// prefixes of the users sorted by `a_n`.
pub fn time_shares(rates: &[f64], lambda: &[f64], theta: &[f64]) -> TimeShares {
    let k = rates.len();
    let mut users: Vec<(usize, f64, f64)> = (0..k)
        .filter_map(|n| {
            let b = theta[n] * rates[n];
            let a = lambda[n] * b;
            (a > 0.0 && a.is_finite()).then_some((n, a, b))
        })
        .collect();
    if users.is_empty() {
        let u = if k == 0 { 0.0 } else { 1.0 / k as f64 };
        return TimeShares { shares: alloc::vec![u; k], delta: 0.0, degenerate: true };
    }
    users.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));

    let (mut num, mut den) = (0.0, 0.0);
    let mut ln_delta = 0.0;
    let mut active = users.len();
    for (j, &(_, a, b)) in users.iter().enumerate() {
        num += a.ln() / b;
        den += 1.0 / b;
        ln_delta = (num - 1.0) / den;
        let next_in = users.get(j + 1).is_some_and(|&(_, a2, _)| a2.ln() > ln_delta);
        if !next_in {
            active = j + 1;
            break;
        }
    }
    let mut shares = alloc::vec![0.0; k];
    for &(n, a, b) in &users[..active] {
        shares[n] = ((a.ln() - ln_delta) / b).max(0.0);
    }
    // remove the last few ulps of drift
    let total: f64 = shares.iter().sum();
    if total > 0.0 {
        shares.iter_mut().for_each(|t| *t /= total);
    }
    TimeShares { shares, delta: ln_delta.exp(), degenerate: false }
}

/// `sum_n lambda_n exp(-theta_n t_n R_n)`.
pub fn tdma_objective(rates: &[f64], shares: &[f64], lambda: &[f64], theta: &[f64]) -> f64 {
    (0..rates.len()).map(|n| lambda[n] * (-theta[n] * shares[n] * rates[n]).exp()).sum()
}

/// Scored TDMA option for one subset size (or silence at `l = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct TdmaEvaluation {
    pub l: usize,
    pub score: f64,
    pub shares: Vec<f64>,
    /// Rate each user gets during its own slot.
    pub slot_rates: Vec<f64>,
    pub service: Vec<f64>,
}

impl TdmaEvaluation {
    pub fn id(&self) -> CandidateId {
        if self.l == 0 {
            CandidateId::Silence
        } else {
            CandidateId::Tdma { l: self.l }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdmaChoice {
    /// Indexed by `l`, silence first.
    pub evaluations: Vec<TdmaEvaluation>,
    pub tied: Vec<usize>,
    pub chosen: usize,
}

impl TdmaChoice {
    pub fn best(&self) -> &TdmaEvaluation {
        &self.evaluations[self.chosen]
    }
}

/// Scores `l + sum_n lambda_n exp(-theta_n t*_{l,n} R_n)` for every subset
/// size, each with its own optimal shares, and picks the minimum.
pub fn tdma_mode_choice(cands: &FrameCandidates, lambda: &[f64], qos: &[UserQos]) -> Result<TdmaChoice> {
    let k = lambda.len();
    let theta: Vec<f64> = qos.iter().map(|q| q.theta).collect();
    let mut evaluations = Vec::with_capacity(cands.tdma.len() + 1);
    evaluations.push(TdmaEvaluation {
        l: 0,
        score: lambda.iter().sum(),
        shares: alloc::vec![0.0; k],
        slot_rates: alloc::vec![0.0; k],
        service: alloc::vec![1.0; k],
    });
    for c in &cands.tdma {
        let rates = c.rates();
        let ts = time_shares(&rates, lambda, &theta);
        let service: Vec<f64> = (0..k).map(|n| qos[n].service_term(ts.shares[n] * rates[n])).collect();
        let score = c.l as f64 + lambda.iter().zip(&service).map(|(a, s)| a * s).sum::<f64>();
        evaluations.push(TdmaEvaluation { l: c.l, score, shares: ts.shares, slot_rates: rates, service });
    }
    let (tied, chosen) = argmin_with_ties(evaluations.iter().map(|e| e.score), cands.tie_key)?;
    Ok(TdmaChoice { evaluations, tied, chosen })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_users_share_evenly() {
        let t = time_shares(&[10.0, 10.0], &[2.0, 2.0], &[0.3, 0.3]);
        assert!(!t.degenerate);
        assert!((t.shares[0] - 0.5).abs() < 1e-12 && (t.shares[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_multiplier_gets_no_slot() {
        let t = time_shares(&[10.0, 4.0], &[0.0, 1.0], &[0.3, 0.3]);
        assert_eq!(t.shares, [0.0, 1.0]);
    }

    #[test]
    fn degenerate_path_is_flagged() {
        let t = time_shares(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[0.1, 0.1, 0.1]);
        assert!(t.degenerate);
        assert!((t.shares.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weak_user_clipped_and_kkt_holds() {
        let (r, l, th) = ([50.0, 40.0, 0.5], [3.0, 2.0, 0.01], [0.2, 0.2, 0.2]);
        let t = time_shares(&r, &l, &th);
        assert!((t.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(t.shares[2], 0.0);
        for n in 0..2 {
            let grad = l[n] * th[n] * r[n] * (-th[n] * t.shares[n] * r[n]).exp();
            assert!((grad - t.delta).abs() <= 1e-9 * t.delta);
        }
        assert!(l[2] * th[2] * r[2] <= t.delta);
    }
}
