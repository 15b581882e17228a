//! MIMO capacities via water-filling and block-diagonalization precoders.
//!
//! Rates are `BT * sum ln(1 + eps_z rho_z)` in nats per frame.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::{stacked_channel, ChannelState};
use crate::linalg::{null_space, svd, CMat};
use crate::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    /// Subchannel SNRs `eps_z`, descending.
    pub snrs: Vec<f64>,
    /// Power per subchannel.
    pub powers: Vec<f64>,
    /// Common water level `mu`.
    pub water_level: f64,
    /// Number of subchannels with positive power.
    pub active_count: usize,
    /// `BT * sum ln(1 + eps rho)`.
    pub rate: f64,
}

impl WaterfillResult {
    /// Same rate through the log-product form
    /// `BT ln(prod_{j<=i} eps_j) + BT i ln(mu)`.
    pub fn closed_form_rate(&self, bt: f64) -> f64 {
        let i = self.active_count;
        if i == 0 {
            return 0.0;
        }
        let log_prod: f64 = self.snrs[..i].iter().map(|e| e.ln()).sum();
        bt * log_prod + bt * i as f64 * self.water_level.ln()
    }
}

/// Capacity-achieving split of `total_power` over parallel subchannels.
///
/// The water level is solved exactly: on the bin with `i` active channels the
/// level is `(P + sum_{j<=i} 1/eps_j) / i`, accepted once it falls below
/// `1/eps_{i+1}`.
pub fn waterfill(snrs: &[f64], total_power: f64, bt: f64) -> Result<WaterfillResult> {
    if snrs.is_empty() {
        return Err(domain("water-filling over zero subchannels"));
    }
    if !(total_power >= 0.0 && total_power.is_finite()) {
        return Err(domain(format!("total power {total_power} must be finite and >= 0")));
    }
    if snrs.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(domain("subchannel SNRs must be positive and finite"));
    }
    if snrs.windows(2).any(|w| w[0] < w[1]) {
        return Err(domain("subchannel SNRs must be sorted descending"));
    }
    let z = snrs.len();
    if total_power == 0.0 {
        return Ok(WaterfillResult {
            snrs: snrs.to_vec(),
            powers: alloc::vec![0.0; z],
            water_level: 0.0,
            active_count: 0,
            rate: 0.0,
        });
    }
    let mut inv_sum = 0.0;
    let mut level = 0.0;
    let mut active = z;
    for i in 1..=z {
        inv_sum += 1.0 / snrs[i - 1];
        level = (total_power + inv_sum) / i as f64;
        let next = if i < z { 1.0 / snrs[i] } else { f64::INFINITY };
        if level < next {
            active = i;
            break;
        }
    }
    let powers: Vec<f64> =
        snrs.iter().enumerate().map(|(j, e)| if j < active { (level - 1.0 / e).max(0.0) } else { 0.0 }).collect();
    let rate = bt * snrs.iter().zip(&powers).map(|(e, p)| (e * p).ln_1p()).sum::<f64>();
    Ok(WaterfillResult { snrs: snrs.to_vec(), powers, water_level: level, active_count: active, rate })
}

/// `dR/dP = BT / mu` for a water-filled allocation with positive power.
pub fn rate_derivative(result: &WaterfillResult, bt: f64) -> f64 {
    bt / result.water_level
}

/// A channel reduced to its eigenmodes: positive subchannel SNRs and the
/// matching unit-norm transmit directions (columns, in stacked-antenna
/// coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub snrs: Vec<f64>,
    pub directions: CMat,
}

impl Link {
    pub fn from_channel(h: &CMat) -> Self {
        let dec = svd(h);
        let rank = dec.rank();
        let snrs = dec.s[..rank].iter().map(|s| s * s).collect();
        Link { snrs, directions: dec.v.columns(0, rank) }
    }

    /// Effective channel `H Gamma` with its directions mapped back through
    /// the precoder.
    pub fn with_precoder(h: &CMat, precoder: &CMat) -> Self {
        let eff = Link::from_channel(&h.mul(precoder));
        Link { snrs: eff.snrs, directions: precoder.mul(&eff.directions) }
    }

    pub fn is_dead(&self) -> bool {
        self.snrs.is_empty()
    }

    pub fn tx_dim(&self) -> usize {
        self.directions.rows()
    }

    /// Water-filled allocation; `None` when the link has no eigenmode.
    pub fn waterfill(&self, power: f64, bt: f64) -> Option<WaterfillResult> {
        if self.is_dead() {
            return None;
        }
        waterfill(&self.snrs, power, bt).ok()
    }

    pub fn rate(&self, power: f64, bt: f64) -> f64 {
        self.waterfill(power, bt).map_or(0.0, |w| w.rate)
    }

    /// Diagonal of the transmit covariance `D diag(rho) D^H`, one entry per
    /// stacked transmit antenna.
    pub fn antenna_powers(&self, powers: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.tx_dim()];
        for (z, &p) in powers.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (o, d) in out.iter_mut().zip(self.directions.col(z)) {
                *o += p * d.norm_sqr();
            }
        }
        out
    }
}

/// Single-user capacity `max_{Tr Xi = P} BT ln det(I + H Xi H^H)`.
pub fn mimo_capacity(h: &CMat, total_power: f64, bt: f64) -> Result<f64> {
    if h.is_empty() {
        return Err(domain("capacity of an empty channel"));
    }
    if total_power < 0.0 {
        return Err(domain("negative power"));
    }
    Ok(Link::from_channel(h).rate(total_power, bt))
}

/// Block-diagonalization precoder for one active user.
#[derive(Debug, Clone, PartialEq)]
pub struct BdPrecoder {
    pub user: usize,
    /// Orthonormal basis of the other active users' joint null space, or
    /// `None` when that null space is trivial.
    pub precoder: Option<CMat>,
    /// Effective channel `H^(n) Gamma^(n)`; empty when no precoder exists.
    pub effective: CMat,
}

impl BdPrecoder {
    pub fn exists(&self) -> bool {
        self.precoder.is_some()
    }

    /// Eigenmodes of the effective channel.
    pub fn link(&self) -> Option<Link> {
        let g = self.precoder.as_ref()?;
        let eff = Link::from_channel(&self.effective);
        Some(Link { snrs: eff.snrs, directions: g.mul(&eff.directions) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdPrecoderSet {
    pub precoders: Vec<BdPrecoder>,
}

/// Stacked channels `H_Omega^(n)` for every user in `users`.
pub fn stacked_channels(state: &ChannelState, bs_set: &[usize], users: &[usize]) -> Result<Vec<CMat>> {
    users.iter().map(|&n| stacked_channel(state, bs_set, n)).collect()
}

/// Precoder for `users[idx]` given the other users' stacked channels.
pub fn bd_precoder_for(channels: &[CMat], idx: usize, user: usize) -> BdPrecoder {
    let tx = channels[idx].cols();
    let others: Vec<&CMat> = channels.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, h)| h).collect();
    let basis = if others.is_empty() { CMat::identity(tx) } else { null_space(&CMat::vcat(&others)) };
    if basis.cols() == 0 {
        return BdPrecoder { user, precoder: None, effective: CMat::zeros(channels[idx].rows(), 0) };
    }
    let effective = channels[idx].mul(&basis);
    BdPrecoder { user, precoder: Some(basis), effective }
}

/// Block-diagonalization precoders for the active set `users` over
/// `bs_set`: each user transmits in the null space of every other active
/// user's stacked channel.
pub fn bd_precoders(state: &ChannelState, bs_set: &[usize], users: &[usize]) -> Result<BdPrecoderSet> {
    if users.is_empty() {
        return Err(domain("block diagonalization needs at least one user"));
    }
    let channels = stacked_channels(state, bs_set, users)?;
    let precoders = users.iter().enumerate().map(|(i, &n)| bd_precoder_for(&channels, i, n)).collect();
    Ok(BdPrecoderSet { precoders })
}

/// Capacity of the BD-equivalent channel with power `power`; zero when the
/// precoder does not exist.
pub fn bd_rate(precoder: &BdPrecoder, power: f64, bt: f64) -> Result<f64> {
    if power < 0.0 {
        return Err(domain("negative power"));
    }
    if !precoder.exists() || power == 0.0 || precoder.effective.is_empty() {
        return Ok(0.0);
    }
    mimo_capacity(&precoder.effective, power, bt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, tests::line_scenario};
    use num_complex::Complex64;

    #[test]
    fn waterfill_two_channels() {
        let w = waterfill(&[2.0, 1.0], 1.0, 1.0).unwrap();
        assert!((w.water_level - 1.25).abs() < 1e-15);
        assert!((w.powers[0] - 0.75).abs() < 1e-15 && (w.powers[1] - 0.25).abs() < 1e-15);
        let expect = 2.5f64.ln() + 1.25f64.ln();
        assert!((w.rate - expect).abs() < 1e-12);
        assert!((w.rate - 1.13943).abs() < 1e-5);
        assert!((w.closed_form_rate(1.0) - w.rate).abs() < 1e-12);
        assert!((rate_derivative(&w, 1.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn waterfill_edge_cases() {
        let e = core::f64::consts::E;
        let w = waterfill(&[e], 3.0, 7.0).unwrap();
        assert!((w.rate - 7.0 * (1.0 + 3.0 * e).ln()).abs() < 1e-12);
        let w = waterfill(&[5.0, 0.1], 0.0, 1.0).unwrap();
        assert_eq!(w.rate, 0.0);
        assert!(w.powers.iter().all(|&p| p == 0.0));
        assert!(waterfill(&[], 1.0, 1.0).is_err());
        assert!(waterfill(&[1.0, 2.0], 1.0, 1.0).is_err());
        // weak channel stays dry
        let w = waterfill(&[10.0, 0.01], 1.0, 1.0).unwrap();
        assert_eq!(w.active_count, 1);
        assert_eq!(w.powers[1], 0.0);
    }

    #[test]
    fn capacity_of_identity_and_rank_deficient() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let id = CMat::identity(2);
        assert!((mimo_capacity(&id, 2.0, 1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        let row = CMat::from_rows(&[&[one, Complex64::new(0.5, -0.5)]]);
        let padded = CMat::from_rows(&[&[one, Complex64::new(0.5, -0.5)], &[zero, zero]]);
        let a = mimo_capacity(&row, 1.3, 2.0).unwrap();
        assert!((mimo_capacity(&padded, 1.3, 2.0).unwrap() - a).abs() < 1e-12);
        assert_eq!(mimo_capacity(&CMat::zeros(2, 2), 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn bd_singleton_matches_capacity() {
        let sc = line_scenario(3, 2, 2, 1);
        let st = sample_channel(&sc, 3, 5);
        let set = bd_precoders(&st, &[0, 2], &[1]).unwrap();
        let h = stacked_channel(&st, &[0, 2], 1).unwrap();
        let r = bd_rate(&set.precoders[0], 1.7, 1000.0).unwrap();
        let c = mimo_capacity(&h, 1.7, 1000.0).unwrap();
        assert!((r - c).abs() <= 1e-9 * c);
        assert_eq!(bd_rate(&set.precoders[0], 0.0, 1000.0).unwrap(), 0.0);
        assert!(bd_rate(&set.precoders[0], -1.0, 1000.0).is_err());
    }

    #[test]
    fn bd_trivial_null_space() {
        // one BS with 2 antennas, two users with 2 receive antennas each
        let sc = line_scenario(1, 2, 2, 2);
        let st = sample_channel(&sc, 3, 5);
        let set = bd_precoders(&st, &[0], &[0, 1]).unwrap();
        assert!(set.precoders.iter().all(|p| !p.exists()));
        assert_eq!(bd_rate(&set.precoders[0], 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn bd_orthogonality_four_antennas() {
        let sc = line_scenario(2, 2, 2, 1);
        for f in 0..20 {
            let st = sample_channel(&sc, 9, f);
            let set = bd_precoders(&st, &[0, 1], &[0, 1]).unwrap();
            for (i, p) in set.precoders.iter().enumerate() {
                let g = p.precoder.as_ref().unwrap();
                assert!(g.cols() >= 3);
                let other = stacked_channel(&st, &[0, 1], 1 - i).unwrap();
                let leak = other.mul(g).frobenius_sq().sqrt();
                assert!(leak <= 1e-9 * other.frobenius_sq().sqrt() * g.frobenius_sq().sqrt());
            }
        }
    }

    #[test]
    fn link_antenna_powers_sum_to_total() {
        let sc = line_scenario(2, 1, 3, 2);
        let st = sample_channel(&sc, 4, 1);
        let h = stacked_channel(&st, &[1, 0], 0).unwrap();
        let link = Link::from_channel(&h);
        let w = link.waterfill(2.5, 1.0).unwrap();
        let per = link.antenna_powers(&w.powers);
        assert!((per.iter().sum::<f64>() - 2.5).abs() < 1e-12);
    }
}
