//! Bond escrow, slashing and lazy-challenger probing.

mod ledger;
mod probe;

pub use ledger::{BondLedger, BondPurpose, LedgerError, LedgerRow, LedgerSnapshot, SlashEvent, SlashReason};
pub use probe::{assess_closed_probe, assess_probe, issue_probe, Probe, ProbeResponses, ProbeTerms};

use thiserror::Error;

use crate::ids::ProbeId;
use crate::protocol::ProtocolError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EconomicsError {
    #[error("a probe needs at least one target")]
    EmptyTargets,
    #[error("probe {0} was already assessed")]
    AlreadyAssessed(ProbeId),
    #[error("probe {0} is still open for responses")]
    ProbeOpen(ProbeId),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
