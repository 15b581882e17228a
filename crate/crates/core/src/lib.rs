//! QoS-driven base-station selection for distributed multi-user MIMO
//! downlinks.
//!
//! A central server drives `K_bs` geographically spread base stations that
//! serve `K_mu` users over block-fading Rayleigh channels. Each user carries
//! a constant-rate flow with a statistical delay bound, expressed through an
//! effective-capacity constraint. Per fading state the server picks a subset
//! of base stations and a transmission mode; the schemes implemented here aim
//! to minimize the average number of active base stations while keeping every
//! user's effective-capacity constraint:
//!
//! * **BD-PT**: block-diagonalized multi-user modes and norm-selected
//!   single-user modes, chosen per frame by a Lagrangian score.
//! * **TDMA**: priority-selected base-station subsets with the frame split
//!   into per-user time slots.
//! * **PT-only**: only the single-user modes (plus silence).
//!
//! All three share one outer loop, a projected dual ascent on the per-user
//! QoS multipliers (see [`dual`]).
//!
//! The crate is `no_std` (it needs `alloc`). File formats, parallel drivers
//! and the command-line front end live in the companion `dmimo-sim` crate.
#![no_std]

extern crate alloc;

pub mod bdpt;
pub mod candidates;
pub mod channel;
pub mod dual;
pub mod harness;
pub mod linalg;
pub mod ptonly;
pub mod qos;
pub mod rates;
pub mod scheme;
pub mod selection;
pub mod tdma;

pub use candidates::{CandidateFamilies, CandidateId, FrameCandidates};
pub use channel::{ChannelState, Scenario};
pub use dual::{AscentConfig, DualState, SlackOracle, TrainStatus};
pub use harness::{Metrics, MetricsAccumulator};
pub use linalg::CMat;
pub use qos::{QosSpec, UserQos};
pub use scheme::{Decision, Scheme};
pub use selection::{PriorityOrder, TransmissionMode};

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A scenario field violates its invariant.
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidScenario { field: &'static str, reason: String },
    /// A user demands traffic but cannot be served at all.
    #[error("user {user} has positive load but zero maximum effective capacity")]
    InfeasibleUser { user: usize },
    /// No active user in a multi-user mode has a positive multiplier, so the
    /// power budget cannot be priced. Callers score the mode with zero rates.
    #[error("no active user with a positive multiplier; score the mode as L + sum(lambda)")]
    NoPricedUser,
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
