//! Effective-capacity calculus.
//!
//! Internally every rate is in nats per frame and every QoS exponent is per
//! nat, so `theta * rate` is dimensionless. Configuration values (bits per
//! second, seconds) are converted once through [`QosSpec::internal`].

use alloc::format;
use core::f64::consts::LN_2;

use crate::{domain, Result};

/// Per-user delay requirement as written in a scenario file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosSpec {
    /// Constant arrival rate in bits per second. Zero marks an idle user
    /// whose constraint is vacuous.
    pub arrival_rate_bps: f64,
    /// Delay bound in seconds.
    pub delay_bound_s: f64,
    /// Tolerated delay-bound violation probability, in (0, 1).
    pub violation_prob: f64,
}

impl QosSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_rate_bps >= 0.0 && self.arrival_rate_bps.is_finite()) {
            return Err(domain(format!("arrival rate {} must be finite and >= 0", self.arrival_rate_bps)));
        }
        if !(self.delay_bound_s > 0.0 && self.delay_bound_s.is_finite()) {
            return Err(domain(format!("delay bound {} must be > 0", self.delay_bound_s)));
        }
        if !(self.violation_prob > 0.0 && self.violation_prob < 1.0) {
            return Err(domain(format!("violation probability {} must lie in (0, 1)", self.violation_prob)));
        }
        Ok(())
    }

    /// Converts to internal units for a frame of `frame_duration` seconds.
    pub fn internal(&self, frame_duration: f64) -> Result<UserQos> {
        self.validate()?;
        let arrival = self.arrival_rate_bps * frame_duration * LN_2;
        let delay_frames = self.delay_bound_s / frame_duration;
        let theta = if arrival == 0.0 { 0.0 } else { qos_exponent(arrival, delay_frames, self.violation_prob)? };
        Ok(UserQos { arrival, theta })
    }
}

/// A user's QoS requirement in internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserQos {
    /// Arrival rate in nats per frame.
    pub arrival: f64,
    /// QoS exponent per nat. Zero for an idle user.
    pub theta: f64,
}

impl UserQos {
    /// Right-hand side of the expectation-form constraint, `exp(-theta * C)`.
    #[inline]
    pub fn target(&self) -> f64 {
        (-self.theta * self.arrival).exp()
    }

    /// `exp(-theta * r)` for a single frame's service `r`.
    #[inline]
    pub fn service_term(&self, rate: f64) -> f64 {
        (-self.theta * rate).exp()
    }
}

/// Minimum QoS exponent meeting `Pr{D > D_th} <= xi` for a constant arrival
/// rate: `theta = -ln(xi) / (C * D_th)`. Units of `arrival * delay` set the
/// unit of the result.
pub fn qos_exponent(arrival: f64, delay: f64, violation_prob: f64) -> Result<f64> {
    if !(violation_prob > 0.0 && violation_prob < 1.0) {
        return Err(domain(format!("violation probability {violation_prob} must lie in (0, 1)")));
    }
    if !(arrival > 0.0 && delay > 0.0) {
        return Err(domain("arrival rate and delay bound must be positive"));
    }
    Ok(-violation_prob.ln() / (arrival * delay))
}

/// `-(1/theta) ln E[exp(-theta R)]` over the samples, evaluated as a shifted
/// log-mean-exp so large `theta * R` stays finite.
pub fn effective_capacity(rates: &[f64], theta: f64) -> Result<f64> {
    if rates.is_empty() {
        return Err(domain("effective capacity of an empty sample set"));
    }
    if !(theta > 0.0) {
        return Err(domain(format!("QoS exponent {theta} must be positive")));
    }
    let shift = rates.iter().fold(f64::INFINITY, |m, &r| m.min(theta * r));
    let mean = rates.iter().map(|&r| (shift - theta * r).exp()).sum::<f64>() / rates.len() as f64;
    Ok((shift - mean.ln()) / theta)
}

/// Sample estimate of `E[exp(-theta R)] - exp(-theta C)`; the QoS constraint
/// holds iff the value is `<= 0`.
pub fn qos_slack(rates: &[f64], theta: f64, arrival: f64) -> Result<f64> {
    if rates.is_empty() {
        return Err(domain("QoS slack of an empty sample set"));
    }
    let mean = rates.iter().map(|&r| (-theta * r).exp()).sum::<f64>() / rates.len() as f64;
    Ok(mean - (-theta * arrival).exp())
}

/// Large-deviation estimate `exp(-theta C D_th)` of the delay-bound
/// violation probability. Diagnostic only.
pub fn delay_violation_estimate(theta: f64, arrival: f64, delay: f64) -> f64 {
    (-theta * arrival * delay).exp()
}
