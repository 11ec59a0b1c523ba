//! Dynamic fraud-proof finality for delegated execution sessions.
//!
//! - [`schedule`]: exponentially growing challenge windows with decaying
//!   sign-off thresholds.
//! - [`protocol`]: the assert/challenge state machine over delegated accounts.
//! - [`economics`]: bond escrow, slashing and lazy-challenger probes.
//! - [`security`]: closed-form and Monte Carlo challenge probabilities.
//! - [`sim`]: a seeded discrete-event simulator with adversarial policies.

pub mod economics;
pub mod ids;
pub mod protocol;
pub mod ratio;
pub mod schedule;
pub mod security;
pub mod sim;

pub use ids::{AccountId, ChallengeId, CommitmentId, DaPointer, DelegationId, NodeId, ProbeId};
pub use ratio::Ratio;
pub use schedule::{human_duration, FinalitySchedule, ScheduleError, ScheduleRow};
