//! Geometry, propagation and block-fading channel draws.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::CMat;
use crate::qos::{QosSpec, UserQos};
use crate::{domain, Error, Result};

/// Static description of the network: where everything is, how it
/// propagates, and what each user demands.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Base-station positions in meters.
    pub bs_positions: Vec<[f64; 2]>,
    /// User positions in meters.
    pub user_positions: Vec<[f64; 2]>,
    /// Transmit antennas per base station.
    pub tx_antennas: Vec<usize>,
    /// Receive antennas per user.
    pub rx_antennas: Vec<usize>,
    pub path_loss_exponent: f64,
    /// Propagation constant `G` in `G / d^eta`.
    pub gain_constant: f64,
    /// Frame length `T` in seconds.
    pub frame_duration: f64,
    /// Bandwidth `B` in hertz.
    pub bandwidth: f64,
    /// Total power with a single active base station (noise-normalized).
    pub power_ref: f64,
    /// Extra total power per additional active base station.
    pub power_slope: f64,
    /// Received-power threshold for the interfering-area metric.
    pub interference_threshold: f64,
    pub qos: Vec<QosSpec>,
}

fn invalid(field: &'static str, reason: impl Into<alloc::string::String>) -> Error {
    Error::InvalidScenario { field, reason: reason.into() }
}

impl Scenario {
    /// `G` such that the mean gain is one (0 dB) at `reference_distance`.
    pub fn calibrated_gain(reference_distance: f64, path_loss_exponent: f64) -> f64 {
        reference_distance.powf(path_loss_exponent)
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    /// Frame time-bandwidth product, the scale of every rate in nats/frame.
    pub fn bt(&self) -> f64 {
        self.bandwidth * self.frame_duration
    }

    pub fn validate(&self) -> Result<()> {
        let k_bs = self.num_bs();
        let k_mu = self.num_users();
        if k_bs == 0 {
            return Err(invalid("bs_positions", "at least one base station is required"));
        }
        if k_mu == 0 {
            return Err(invalid("user_positions", "at least one user is required"));
        }
        if self.tx_antennas.len() != k_bs {
            return Err(invalid("tx_antennas", format!("expected {k_bs} entries, got {}", self.tx_antennas.len())));
        }
        if self.rx_antennas.len() != k_mu {
            return Err(invalid("rx_antennas", format!("expected {k_mu} entries, got {}", self.rx_antennas.len())));
        }
        if self.qos.len() != k_mu {
            return Err(invalid("qos", format!("expected {k_mu} entries, got {}", self.qos.len())));
        }
        if self.tx_antennas.iter().any(|&m| m == 0) {
            return Err(invalid("tx_antennas", "antenna counts must be >= 1"));
        }
        if self.rx_antennas.iter().any(|&m| m == 0) {
            return Err(invalid("rx_antennas", "antenna counts must be >= 1"));
        }
        let finite = |p: &[f64; 2]| p[0].is_finite() && p[1].is_finite();
        if !self.bs_positions.iter().all(finite) {
            return Err(invalid("bs_positions", "positions must be finite"));
        }
        if !self.user_positions.iter().all(finite) {
            return Err(invalid("user_positions", "positions must be finite"));
        }
        if !(2.0..=6.0).contains(&self.path_loss_exponent) {
            return Err(invalid("path_loss_exponent", format!("{} is outside [2, 6]", self.path_loss_exponent)));
        }
        if !(self.gain_constant > 0.0 && self.gain_constant.is_finite()) {
            return Err(invalid("gain_constant", "must be positive"));
        }
        if !(self.frame_duration > 0.0) {
            return Err(invalid("frame_duration", "must be positive"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(invalid("bandwidth", "must be positive"));
        }
        if !(self.power_ref > 0.0) {
            return Err(invalid("power_ref", "must be positive"));
        }
        if !(self.power_slope >= 0.0) {
            return Err(invalid("power_slope", "must be >= 0"));
        }
        if !(self.interference_threshold > 0.0) {
            return Err(invalid("interference_threshold", "must be positive"));
        }
        for q in &self.qos {
            q.validate().map_err(|e| invalid("qos", format!("{e}")))?;
        }
        for (n, u) in self.user_positions.iter().enumerate() {
            for (m, b) in self.bs_positions.iter().enumerate() {
                if distance(*u, *b) <= 0.0 {
                    return Err(invalid("user_positions", format!("user {n} coincides with base station {m}")));
                }
            }
        }
        Ok(())
    }

    /// Mean power gain `h(n, m)` of every entry of `H_{n,m}`.
    pub fn mean_gain(&self, user: usize, bs: usize) -> f64 {
        let d = distance(self.user_positions[user], self.bs_positions[bs]);
        path_gain(d, self.gain_constant, self.path_loss_exponent).unwrap_or(0.0)
    }

    /// Total transmit power with `l` active base stations.
    pub fn total_power(&self, l: usize) -> f64 {
        crate::harness::total_power(l, self.power_ref, self.power_slope)
    }

    /// QoS requirements converted to internal units.
    pub fn user_qos(&self) -> Result<Vec<UserQos>> {
        self.qos.iter().map(|q| q.internal(self.frame_duration)).collect()
    }

    /// Column offset of each base station inside a stacked channel for
    /// the ordered set `bs_set`.
    pub fn column_offsets(&self, bs_set: &[usize]) -> Vec<usize> {
        let mut acc = 0;
        bs_set
            .iter()
            .map(|&m| {
                let o = acc;
                acc += self.tx_antennas[m];
                o
            })
            .collect()
    }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Average power gain `G / d^eta`.
pub fn path_gain(distance: f64, gain_constant: f64, path_loss_exponent: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(domain(format!("distance {distance} must be positive")));
    }
    Ok(gain_constant / distance.powf(path_loss_exponent))
}

/// One block-fading realization: `H_{n,m}` for every (user, base station).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    num_bs: usize,
    blocks: Vec<CMat>,
    pub frame_index: u64,
}

impl ChannelState {
    /// Assembles a state from user-major blocks (`blocks[n * num_bs + m]`).
    pub fn from_blocks(num_bs: usize, blocks: Vec<CMat>, frame_index: u64) -> Self {
        assert!(num_bs > 0 && blocks.len() % num_bs == 0);
        Self { num_bs, blocks, frame_index }
    }

    #[inline]
    pub fn block(&self, user: usize, bs: usize) -> &CMat {
        &self.blocks[user * self.num_bs + bs]
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_users(&self) -> usize {
        self.blocks.len() / self.num_bs
    }

    /// `gamma[n][m]`, the instantaneous aggregate power gains.
    pub fn gain_matrix(&self, scenario: &Scenario) -> GainMatrix {
        let k_mu = self.num_users();
        let mut g = Vec::with_capacity(k_mu * self.num_bs);
        for n in 0..k_mu {
            for m in 0..self.num_bs {
                g.push(aggregate_power_gain(self.block(n, m), scenario.tx_antennas[m]));
            }
        }
        GainMatrix { num_bs: self.num_bs, gains: g }
    }
}

/// Aggregate power gains, one row per user.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    num_bs: usize,
    gains: Vec<f64>,
}

impl GainMatrix {
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let num_bs = rows.first().map_or(0, |r| r.len());
        let gains = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { num_bs, gains }
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.gains[user * self.num_bs..(user + 1) * self.num_bs]
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }
}

/// `(1 / M) ||H||_F^2`.
pub fn aggregate_power_gain(h: &CMat, tx_antennas: usize) -> f64 {
    h.frobenius_sq() / tx_antennas as f64
}

/// `[H_{n,i_1} H_{n,i_2} ...]` for the ordered base-station set.
pub fn stacked_channel(state: &ChannelState, bs_set: &[usize], user: usize) -> Result<CMat> {
    if bs_set.is_empty() {
        return Err(domain("empty base-station set"));
    }
    check_distinct(bs_set, state.num_bs())?;
    let blocks: Vec<&CMat> = bs_set.iter().map(|&m| state.block(user, m)).collect();
    Ok(CMat::hcat(&blocks))
}

pub(crate) fn check_distinct(bs_set: &[usize], num_bs: usize) -> Result<()> {
    for (i, &a) in bs_set.iter().enumerate() {
        if a >= num_bs {
            return Err(domain(format!("base station index {a} out of range")));
        }
        if bs_set[..i].contains(&a) {
            return Err(domain(format!("duplicate base station {a}")));
        }
    }
    Ok(())
}

/// Entry-wise mean power of the stacked channel, `rx x sum(M_i)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGainMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl PowerGainMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }
}

pub fn average_power_gain_matrix(scenario: &Scenario, bs_set: &[usize], user: usize) -> Result<PowerGainMatrix> {
    check_distinct(bs_set, scenario.num_bs())?;
    let rows = scenario.rx_antennas[user];
    let mut row = Vec::new();
    for &m in bs_set {
        let g = scenario.mean_gain(user, m);
        row.extend(core::iter::repeat_n(g, scenario.tx_antennas[m]));
    }
    let cols = row.len();
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        values.extend_from_slice(&row);
    }
    Ok(PowerGainMatrix { rows, cols, values })
}

/// Stream purposes, mixed into the master seed so that C_max estimation,
/// training and evaluation never share draws.
pub mod stream {
    pub const CMAX: u64 = 0x434d_4158;
    pub const TRAIN: u64 = 0x5452_4149;
    pub const EVAL: u64 = 0x4556_414c;
}

/// SplitMix64 finalizer over `(master, purpose)`.
pub fn derive_seed(master: u64, purpose: u64) -> u64 {
    let mut z = master ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for frame `frame_index`: a ChaCha8 stream keyed by the seed.
/// Frames are independent of evaluation order.
pub fn frame_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);
    rng
}

/// Draws every `H_{n,m}` with i.i.d. CN(0, h(n,m)) entries (real and
/// imaginary parts each of variance h/2), plus a tie-breaking key.
pub fn sample_channel(scenario: &Scenario, seed: u64, frame_index: u64) -> ChannelState {
    sample_channel_with_key(scenario, seed, frame_index).0
}

pub fn sample_channel_with_key(scenario: &Scenario, seed: u64, frame_index: u64) -> (ChannelState, u64) {
    let mut rng = frame_rng(seed, frame_index);
    let k_bs = scenario.num_bs();
    let mut blocks = Vec::with_capacity(k_bs * scenario.num_users());
    for n in 0..scenario.num_users() {
        for m in 0..k_bs {
            let sd = (scenario.mean_gain(n, m) / 2.0).sqrt();
            let block = CMat::from_fn(scenario.rx_antennas[n], scenario.tx_antennas[m], |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(sd * re, sd * im)
            });
            blocks.push(block);
        }
    }
    let tie_key = rng.next_u64();
    (ChannelState::from_blocks(k_bs, blocks, frame_index), tie_key)
}
