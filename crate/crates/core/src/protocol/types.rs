use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{AccountId, ChallengeId, CommitmentId, DaPointer, DelegationId, NodeId, ProbeId};
use crate::protocol::ProtocolError;
use crate::schedule::FinalitySchedule;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountState {
    pub account: AccountId,
    pub data: Vec<u8>,
    pub version: u64,
    pub delegated: bool,
}

/// Proposed replacement of one account's data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountDiff {
    pub account: AccountId,
    pub data: Vec<u8>,
    pub new_version: u64,
}

/// Base-layer account storage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccountTable {
    accounts: BTreeMap<AccountId, AccountState>,
}

impl AccountTable {
    pub fn get(&self, id: &AccountId) -> Option<&AccountState> {
        self.accounts.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AccountState> {
        self.accounts.values()
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    pub fn create(&mut self, id: AccountId, data: Vec<u8>) -> Result<(), ProtocolError> {
        if self.accounts.contains_key(&id) {
            return Err(ProtocolError::AccountExists(id));
        }
        self.accounts.insert(
            id,
            AccountState {
                account: id,
                data,
                version: 0,
                delegated: false,
            },
        );
        Ok(())
    }

    /// Direct base-layer write; refused while the account is delegated.
    pub fn write(&mut self, id: &AccountId, data: Vec<u8>) -> Result<u64, ProtocolError> {
        let acc = self
            .accounts
            .get_mut(id)
            .ok_or(ProtocolError::UnknownAccount(*id))?;
        if acc.delegated {
            return Err(ProtocolError::AccountLocked(*id));
        }
        acc.data = data;
        acc.version += 1;
        Ok(acc.version)
    }

    pub(crate) fn set_delegated(&mut self, id: &AccountId, delegated: bool) {
        if let Some(acc) = self.accounts.get_mut(id) {
            acc.delegated = delegated;
        }
    }

    /// Applies every diff or none. Each diff must advance its account's
    /// version by exactly one.
    pub fn apply_bundle(&mut self, diffs: &[AccountDiff]) -> Result<(), ProtocolError> {
        if diffs.is_empty() {
            return Err(ProtocolError::EmptyBundle);
        }
        for diff in diffs {
            let acc = self
                .accounts
                .get(&diff.account)
                .ok_or(ProtocolError::UnknownAccount(diff.account))?;
            if diff.new_version != acc.version + 1 {
                return Err(ProtocolError::VersionConflict {
                    account: diff.account,
                    current: acc.version,
                    proposed: diff.new_version,
                });
            }
        }
        for diff in diffs {
            let acc = self.accounts.get_mut(&diff.account).expect("checked above");
            acc.data.clone_from(&diff.data);
            acc.version = diff.new_version;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelegationStatus {
    Active,
    Undelegated,
}

/// Terms under which accounts are handed to an operator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelegationTerms {
    pub max_lifetime_ms: u64,
    pub update_frequency_ms: u64,
    pub schedule: FinalitySchedule,
    pub challenger_pool: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelegationRecord {
    pub id: DelegationId,
    pub accounts: BTreeSet<AccountId>,
    pub operator: NodeId,
    pub terms: DelegationTerms,
    pub created_at: u64,
    pub status: DelegationStatus,
}

impl DelegationRecord {
    pub fn schedule(&self) -> &FinalitySchedule {
        &self.terms.schedule
    }

    pub fn expires_at(&self) -> u64 {
        self.created_at.saturating_add(self.terms.max_lifetime_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitmentStatus {
    Pending,
    Disputed,
    Finalized,
    Reverted,
}

impl CommitmentStatus {
    pub fn is_open(self) -> bool {
        matches!(self, CommitmentStatus::Pending | CommitmentStatus::Disputed)
    }

    /// Allowed status edges. Extension keeps a commitment `Pending`, so
    /// `Pending -> Pending` is a legal self-loop.
    pub fn can_transition_to(self, next: CommitmentStatus) -> bool {
        use CommitmentStatus::*;
        matches!(
            (self, next),
            (Pending, Pending)
                | (Pending, Disputed)
                | (Pending, Finalized)
                | (Pending, Reverted)
                | (Disputed, Disputed)
                | (Disputed, Pending)
                | (Disputed, Reverted)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitmentKind {
    Assertion,
    /// Decoy with a deliberately wrong diff; never applied.
    Probe(ProbeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub id: CommitmentId,
    pub operator: NodeId,
    pub diffs: Vec<AccountDiff>,
    pub da_pointer: DaPointer,
    pub delegation: DelegationId,
    pub submitted_at: u64,
    pub status: CommitmentStatus,
    pub kind: CommitmentKind,
    pub settled_at: Option<u64>,
}

impl Commitment {
    pub fn is_probe(&self) -> bool {
        matches!(self.kind, CommitmentKind::Probe(_))
    }

    pub fn accounts(&self) -> impl Iterator<Item = &AccountId> {
        self.diffs.iter().map(|d| &d.account)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeWindow {
    pub commitment: CommitmentId,
    pub step: u32,
    pub opened_at: u64,
    pub deadline: u64,
    pub required: u64,
    pub sampled_challengers: BTreeSet<NodeId>,
    pub sign_offs: BTreeSet<NodeId>,
    pub challenges: Vec<ChallengeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeStatus {
    Open,
    Upheld,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub id: ChallengeId,
    pub challenger: NodeId,
    pub commitment: CommitmentId,
    pub raised_at: u64,
    pub bond: u64,
    pub status: ChallengeStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictOutcome {
    FraudProven,
    ChallengeInvalid,
}

/// Result of a dispute game for one challenge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisputeVerdict {
    pub challenge: ChallengeId,
    pub outcome: VerdictOutcome,
}

/// What happened when a window's deadline was evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum WindowOutcome {
    /// Threshold met, bundle applied.
    Finalized { step: u32 },
    /// Threshold missed; the window re-opened.
    Extended {
        step: u32,
        deadline: u64,
        required: u64,
    },
    /// A dispute is open; nothing happens until its verdict.
    Blocked,
    /// Threshold met but the bundle no longer applies; nothing was written.
    BundleReverted { account: AccountId },
    /// Decoy window closed; never applied.
    ProbeClosed { probe: ProbeId },
}
