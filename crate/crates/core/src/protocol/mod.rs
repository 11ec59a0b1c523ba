//! The assert/challenge state machine.
//!
//! An operator commits a bundle of account diffs against a delegation. A
//! challenge window opens with a randomly sampled set of challengers whose
//! sign-offs are needed to settle. Anyone may raise a bonded challenge while
//! the window is open, which blocks settlement until a verdict arrives. At the
//! deadline the window either finalizes the bundle atomically or extends with
//! a longer window and a lower threshold.
//!
//! All transitions go through `&mut Protocol` and are appended to a
//! [`Trace`]; identical inputs and seed give an identical trace.

mod trace;
mod types;

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use trace::{Trace, TraceEntry, TraceKind, TraceRecord};
pub use types::*;

use crate::economics::{BondLedger, BondPurpose, LedgerError, SlashEvent, SlashReason};
use crate::ids::{AccountId, ChallengeId, CommitmentId, DaPointer, DelegationId, NodeId, ProbeId};
use crate::ratio::Ratio;
use crate::schedule::ScheduleError;
use crate::sim::sampling::{sample_challengers, SampleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("unknown account {0}")]
    UnknownAccount(AccountId),
    #[error("account {0} already exists")]
    AccountExists(AccountId),
    #[error("account {0} is delegated and locked on the base layer")]
    AccountLocked(AccountId),
    #[error("account {0} is already delegated")]
    AlreadyDelegated(AccountId),
    #[error("delegation must cover at least one account")]
    EmptyDelegation,
    #[error("challenger pool has {pool} members but the schedule needs {needed}")]
    PoolTooSmall { pool: usize, needed: u64 },
    #[error("challenger pool lists {0} twice")]
    DuplicatePoolMember(NodeId),
    #[error("delegation lifetime must be positive")]
    ZeroLifetime,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("unknown delegation {0}")]
    UnknownDelegation(DelegationId),
    #[error("delegation {0} is no longer active")]
    DelegationInactive(DelegationId),
    #[error("delegation {delegation} expired at {expired_at} ms")]
    DelegationExpired { delegation: DelegationId, expired_at: u64 },
    #[error("{got} is not the operator of this delegation ({expected} is)")]
    Unauthorized { expected: NodeId, got: NodeId },
    #[error("account {0} is not part of the delegation")]
    NotDelegated(AccountId),
    #[error("account {0} appears twice in one bundle")]
    DuplicateAccount(AccountId),
    #[error("commitment must carry at least one diff")]
    EmptyBundle,
    #[error("account {account} already has in-flight commitment {commitment}")]
    InFlight {
        account: AccountId,
        commitment: CommitmentId,
    },
    #[error("account {account} is at version {current}, diff proposes {proposed}")]
    VersionConflict {
        account: AccountId,
        current: u64,
        proposed: u64,
    },
    #[error("unknown commitment {0}")]
    UnknownCommitment(CommitmentId),
    #[error("unknown challenge {0}")]
    UnknownChallenge(ChallengeId),
    #[error("{node} was not sampled for commitment {commitment}")]
    NotSelected { node: NodeId, commitment: CommitmentId },
    #[error("window closed at {deadline} ms, now {now} ms")]
    TooLate { now: u64, deadline: u64 },
    #[error("{node} challenged commitment {commitment} and cannot sign it off")]
    InconsistentRole { node: NodeId, commitment: CommitmentId },
    #[error("challenge bond {offered} below minimum {minimum}")]
    InsufficientBond { offered: u64, minimum: u64 },
    #[error("commitment {commitment} is {status:?}")]
    InvalidState {
        commitment: CommitmentId,
        status: CommitmentStatus,
    },
    #[error("challenge {0} already has a verdict")]
    ChallengeClosed(ChallengeId),
    #[error("challenge {0} targets a probe and settles at probe assessment")]
    ProbeChallenge(ChallengeId),
    #[error("window deadline is {deadline} ms, now {now} ms")]
    NotDue { now: u64, deadline: u64 },
    #[error("delegation {delegation} has in-flight commitment {commitment}")]
    Busy {
        delegation: DelegationId,
        commitment: CommitmentId,
    },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Sampling(#[from] SampleError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Bond and slashing parameters enforced by the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub min_challenger_bond: u64,
    /// Slashed from the operator bond when fraud is proven (capped by escrow).
    pub operator_slash: u64,
    /// Share of any slash paid to the counterparty; the rest is burned.
    pub slash_reward_share: Ratio,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            min_challenger_bond: 1,
            operator_slash: 0,
            slash_reward_share: Ratio::new(1, 2).expect("non-zero denominator"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Protocol {
    config: ProtocolConfig,
    accounts: AccountTable,
    delegations: BTreeMap<DelegationId, DelegationRecord>,
    commitments: BTreeMap<CommitmentId, Commitment>,
    windows: BTreeMap<CommitmentId, ChallengeWindow>,
    challenges: BTreeMap<ChallengeId, Challenge>,
    in_flight: BTreeMap<AccountId, CommitmentId>,
    ledger: BondLedger,
    slashes: Vec<SlashEvent>,
    rng: ChaCha8Rng,
    trace: Trace,
    next_delegation: u64,
    next_commitment: u64,
    next_challenge: u64,
    next_probe: u64,
}

impl Protocol {
    pub fn new(config: ProtocolConfig, ledger: BondLedger, seed: u64) -> Self {
        Self {
            config,
            accounts: AccountTable::default(),
            delegations: BTreeMap::new(),
            commitments: BTreeMap::new(),
            windows: BTreeMap::new(),
            challenges: BTreeMap::new(),
            in_flight: BTreeMap::new(),
            ledger,
            slashes: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            trace: Trace::default(),
            next_delegation: 0,
            next_commitment: 0,
            next_challenge: 0,
            next_probe: 0,
        }
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn accounts(&self) -> &AccountTable {
        &self.accounts
    }

    pub fn account(&self, id: &AccountId) -> Option<&AccountState> {
        self.accounts.get(id)
    }

    pub fn delegation(&self, id: DelegationId) -> Option<&DelegationRecord> {
        self.delegations.get(&id)
    }

    pub fn commitment(&self, id: CommitmentId) -> Option<&Commitment> {
        self.commitments.get(&id)
    }

    pub fn commitments(&self) -> impl Iterator<Item = &Commitment> {
        self.commitments.values()
    }

    pub fn window(&self, id: CommitmentId) -> Option<&ChallengeWindow> {
        self.windows.get(&id)
    }

    pub fn challenge(&self, id: ChallengeId) -> Option<&Challenge> {
        self.challenges.get(&id)
    }

    pub fn in_flight(&self, account: &AccountId) -> Option<CommitmentId> {
        self.in_flight.get(account).copied()
    }

    pub fn ledger(&self) -> &BondLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut BondLedger {
        &mut self.ledger
    }

    pub fn slashes(&self) -> &[SlashEvent] {
        &self.slashes
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// Appends a record for an event observed outside the state machine
    /// (censorship, probe assessment).
    pub fn note(&mut self, at_ms: u64, kind: TraceKind, entry: TraceEntry) -> u64 {
        self.trace.push(at_ms, kind, entry)
    }

    pub fn create_account(&mut self, id: AccountId, data: Vec<u8>) -> Result<(), ProtocolError> {
        self.accounts.create(id, data)
    }

    pub fn base_layer_write(&mut self, id: &AccountId, data: Vec<u8>) -> Result<u64, ProtocolError> {
        self.accounts.write(id, data)
    }

    fn record(&mut self, at: u64, kind: TraceKind, commitment: CommitmentId, node: Option<NodeId>) {
        let status = self.commitments.get(&commitment).map(|c| c.status);
        let w = self.windows.get(&commitment);
        let entry = TraceEntry {
            commitment: Some(commitment),
            step: w.map(|w| w.step),
            sign_offs: w.map(|w| w.sign_offs.len() as u64),
            required: w.map(|w| w.required),
            status,
            node,
        };
        self.trace.push(at, kind, entry);
    }

    /// Locks `accounts` for `operator` under `terms`.
    pub fn delegate(
        &mut self,
        accounts: BTreeSet<AccountId>,
        operator: NodeId,
        terms: DelegationTerms,
        now: u64,
    ) -> Result<DelegationId, ProtocolError> {
        if accounts.is_empty() {
            return Err(ProtocolError::EmptyDelegation);
        }
        if terms.max_lifetime_ms == 0 {
            return Err(ProtocolError::ZeroLifetime);
        }
        terms.schedule.validate()?;
        let needed = terms.schedule.sample_size();
        if (terms.challenger_pool.len() as u64) < needed {
            return Err(ProtocolError::PoolTooSmall {
                pool: terms.challenger_pool.len(),
                needed,
            });
        }
        let mut seen = BTreeSet::new();
        for node in &terms.challenger_pool {
            if !seen.insert(*node) {
                return Err(ProtocolError::DuplicatePoolMember(*node));
            }
        }
        for id in &accounts {
            let acc = self
                .accounts
                .get(id)
                .ok_or(ProtocolError::UnknownAccount(*id))?;
            if acc.delegated {
                return Err(ProtocolError::AlreadyDelegated(*id));
            }
        }
        for id in &accounts {
            self.accounts.set_delegated(id, true);
        }
        let id = DelegationId(self.next_delegation);
        self.next_delegation += 1;
        self.delegations.insert(
            id,
            DelegationRecord {
                id,
                accounts,
                operator,
                terms,
                created_at: now,
                status: DelegationStatus::Active,
            },
        );
        self.trace.push(
            now,
            TraceKind::Delegated,
            TraceEntry {
                node: Some(operator),
                ..Default::default()
            },
        );
        Ok(id)
    }

    /// Releases the delegation's accounts back to the base layer. Refused
    /// while any of them has a pending or disputed commitment; otherwise
    /// allowed at any time, including after the lifetime expired.
    pub fn undelegate(&mut self, delegation: DelegationId, now: u64) -> Result<Vec<AccountId>, ProtocolError> {
        let record = self
            .delegations
            .get(&delegation)
            .ok_or(ProtocolError::UnknownDelegation(delegation))?;
        if record.status != DelegationStatus::Active {
            return Err(ProtocolError::DelegationInactive(delegation));
        }
        if let Some(commitment) = record.accounts.iter().find_map(|a| self.in_flight.get(a)) {
            return Err(ProtocolError::Busy {
                delegation,
                commitment: *commitment,
            });
        }
        let released: Vec<AccountId> = record.accounts.iter().copied().collect();
        let operator = record.operator;
        for id in &released {
            self.accounts.set_delegated(id, false);
        }
        self.delegations.get_mut(&delegation).expect("present").status = DelegationStatus::Undelegated;
        self.trace.push(
            now,
            TraceKind::Undelegated,
            TraceEntry {
                node: Some(operator),
                ..Default::default()
            },
        );
        Ok(released)
    }

    fn active_delegation(&self, delegation: DelegationId, now: u64) -> Result<&DelegationRecord, ProtocolError> {
        let record = self
            .delegations
            .get(&delegation)
            .ok_or(ProtocolError::UnknownDelegation(delegation))?;
        if record.status != DelegationStatus::Active {
            return Err(ProtocolError::DelegationInactive(delegation));
        }
        if now > record.expires_at() {
            return Err(ProtocolError::DelegationExpired {
                delegation,
                expired_at: record.expires_at(),
            });
        }
        Ok(record)
    }

    fn check_bundle(record: &DelegationRecord, diffs: &[AccountDiff]) -> Result<(), ProtocolError> {
        if diffs.is_empty() {
            return Err(ProtocolError::EmptyBundle);
        }
        let mut seen = BTreeSet::new();
        for d in diffs {
            if !record.accounts.contains(&d.account) {
                return Err(ProtocolError::NotDelegated(d.account));
            }
            if !seen.insert(d.account) {
                return Err(ProtocolError::DuplicateAccount(d.account));
            }
        }
        Ok(())
    }

    /// Records the operator's bundle and opens its step-zero window.
    pub fn submit_commitment(
        &mut self,
        delegation: DelegationId,
        operator: NodeId,
        diffs: Vec<AccountDiff>,
        da_pointer: DaPointer,
        now: u64,
    ) -> Result<CommitmentId, ProtocolError> {
        let record = self.active_delegation(delegation, now)?;
        if record.operator != operator {
            return Err(ProtocolError::Unauthorized {
                expected: record.operator,
                got: operator,
            });
        }
        Self::check_bundle(record, &diffs)?;
        if let Some((account, commitment)) = diffs
            .iter()
            .find_map(|d| self.in_flight.get(&d.account).map(|c| (d.account, *c)))
        {
            return Err(ProtocolError::InFlight { account, commitment });
        }
        let k = record.terms.schedule.sample_size() as usize;
        let pool = record.terms.challenger_pool.clone();
        let sampled = sample_challengers(&pool, k, &mut self.rng)?;

        let id = self.insert_commitment(
            delegation,
            operator,
            diffs,
            da_pointer,
            CommitmentKind::Assertion,
            sampled,
            now,
        )?;
        let accounts: Vec<AccountId> = self.commitments[&id].accounts().copied().collect();
        for a in accounts {
            self.in_flight.insert(a, id);
        }
        self.record(now, TraceKind::Submitted, id, Some(operator));
        Ok(id)
    }

    /// Opens a decoy commitment watched by `targets`. Probes bypass the
    /// operator and exclusivity checks and are never applied.
    pub fn submit_probe(
        &mut self,
        delegation: DelegationId,
        diffs: Vec<AccountDiff>,
        da_pointer: DaPointer,
        targets: BTreeSet<NodeId>,
        now: u64,
    ) -> Result<(CommitmentId, ProbeId), ProtocolError> {
        let record = self.active_delegation(delegation, now)?;
        Self::check_bundle(record, &diffs)?;
        let operator = record.operator;
        let probe = ProbeId(self.next_probe);
        self.next_probe += 1;
        let id = self.insert_commitment(
            delegation,
            operator,
            diffs,
            da_pointer,
            CommitmentKind::Probe(probe),
            targets,
            now,
        )?;
        self.record(now, TraceKind::ProbeIssued, id, Some(operator));
        Ok((id, probe))
    }

    #[allow(clippy::too_many_arguments)]
    fn insert_commitment(
        &mut self,
        delegation: DelegationId,
        operator: NodeId,
        diffs: Vec<AccountDiff>,
        da_pointer: DaPointer,
        kind: CommitmentKind,
        sampled: BTreeSet<NodeId>,
        now: u64,
    ) -> Result<CommitmentId, ProtocolError> {
        let schedule = &self.delegations[&delegation].terms.schedule;
        let deadline = now + schedule.window_duration(0)?;
        let required = schedule.required_challengers(0)?;
        let id = CommitmentId(self.next_commitment);
        self.next_commitment += 1;
        self.commitments.insert(
            id,
            Commitment {
                id,
                operator,
                diffs,
                da_pointer,
                delegation,
                submitted_at: now,
                status: CommitmentStatus::Pending,
                kind,
                settled_at: None,
            },
        );
        self.windows.insert(
            id,
            ChallengeWindow {
                commitment: id,
                step: 0,
                opened_at: now,
                deadline,
                required,
                sampled_challengers: sampled,
                sign_offs: BTreeSet::new(),
                challenges: Vec::new(),
            },
        );
        Ok(id)
    }

    fn open_commitment(&self, id: CommitmentId) -> Result<(&Commitment, &ChallengeWindow), ProtocolError> {
        let c = self
            .commitments
            .get(&id)
            .ok_or(ProtocolError::UnknownCommitment(id))?;
        let w = &self.windows[&id];
        Ok((c, w))
    }

    fn has_challenged(&self, window: &ChallengeWindow, node: NodeId) -> bool {
        window
            .challenges
            .iter()
            .any(|ch| self.challenges[ch].challenger == node)
    }

    /// Adds a sampled challenger's approval. Repeated sign-offs are no-ops.
    /// Returns the number of sign-offs collected.
    pub fn sign_off(&mut self, commitment: CommitmentId, challenger: NodeId, now: u64) -> Result<u64, ProtocolError> {
        let (c, w) = self.open_commitment(commitment)?;
        if c.status != CommitmentStatus::Pending {
            return Err(ProtocolError::InvalidState {
                commitment,
                status: c.status,
            });
        }
        if !w.sampled_challengers.contains(&challenger) {
            return Err(ProtocolError::NotSelected {
                node: challenger,
                commitment,
            });
        }
        if now > w.deadline {
            return Err(ProtocolError::TooLate {
                now,
                deadline: w.deadline,
            });
        }
        if self.has_challenged(w, challenger) {
            return Err(ProtocolError::InconsistentRole {
                node: challenger,
                commitment,
            });
        }
        let w = self.windows.get_mut(&commitment).expect("present");
        let fresh = w.sign_offs.insert(challenger);
        let count = w.sign_offs.len() as u64;
        if fresh {
            self.record(now, TraceKind::SignedOff, commitment, Some(challenger));
        }
        Ok(count)
    }

    /// Opens a bonded challenge. Any node may challenge, sampled or not.
    pub fn raise_challenge(
        &mut self,
        commitment: CommitmentId,
        challenger: NodeId,
        bond: u64,
        now: u64,
    ) -> Result<ChallengeId, ProtocolError> {
        let (c, w) = self.open_commitment(commitment)?;
        if c.status != CommitmentStatus::Pending {
            return Err(ProtocolError::InvalidState {
                commitment,
                status: c.status,
            });
        }
        if now > w.deadline {
            return Err(ProtocolError::TooLate {
                now,
                deadline: w.deadline,
            });
        }
        let minimum = self.config.min_challenger_bond.max(1);
        if bond < minimum {
            return Err(ProtocolError::InsufficientBond {
                offered: bond,
                minimum,
            });
        }
        let is_probe = c.is_probe();
        self.ledger.post_bond(challenger, bond, BondPurpose::DisputeBond)?;

        let id = ChallengeId(self.next_challenge);
        self.next_challenge += 1;
        self.challenges.insert(
            id,
            Challenge {
                id,
                challenger,
                commitment,
                raised_at: now,
                bond,
                status: ChallengeStatus::Open,
            },
        );
        self.windows.get_mut(&commitment).expect("present").challenges.push(id);
        if !is_probe {
            self.commitments.get_mut(&commitment).expect("present").status = CommitmentStatus::Disputed;
        }
        self.record(now, TraceKind::ChallengeRaised, commitment, Some(challenger));
        Ok(id)
    }

    fn slash(&mut self, event: SlashEvent) -> Result<(), ProtocolError> {
        self.ledger.apply_verdict(&event)?;
        self.slashes.push(event);
        Ok(())
    }

    fn unlock(&mut self, commitment: CommitmentId) {
        self.in_flight.retain(|_, c| *c != commitment);
    }

    /// Applies a dispute-game verdict. Proven fraud reverts the commitment and
    /// slashes the operator in favour of the challenger. An invalid challenge
    /// forfeits the challenger's bond and returns the commitment to `Pending`
    /// with its original deadline.
    pub fn resolve_dispute(&mut self, verdict: DisputeVerdict, now: u64) -> Result<CommitmentStatus, ProtocolError> {
        let ch = self
            .challenges
            .get(&verdict.challenge)
            .ok_or(ProtocolError::UnknownChallenge(verdict.challenge))?
            .clone();
        if ch.status != ChallengeStatus::Open {
            return Err(ProtocolError::ChallengeClosed(ch.id));
        }
        let c = &self.commitments[&ch.commitment];
        if c.is_probe() {
            return Err(ProtocolError::ProbeChallenge(ch.id));
        }
        if c.status != CommitmentStatus::Disputed {
            return Err(ProtocolError::InvalidState {
                commitment: c.id,
                status: c.status,
            });
        }
        let operator = c.operator;
        let share = self.config.slash_reward_share;
        let status = match verdict.outcome {
            VerdictOutcome::FraudProven => {
                self.ledger
                    .release_bond(ch.challenger, ch.bond, BondPurpose::DisputeBond)?;
                let amount = self
                    .config
                    .operator_slash
                    .min(self.ledger.escrowed(operator, BondPurpose::OperatorBond));
                self.slash(SlashEvent::new(
                    operator,
                    amount,
                    SlashReason::FraudProven,
                    Some(ch.challenger),
                    share,
                ))?;
                CommitmentStatus::Reverted
            }
            VerdictOutcome::ChallengeInvalid => {
                self.slash(SlashEvent::new(
                    ch.challenger,
                    ch.bond,
                    SlashReason::FalseChallenge,
                    Some(operator),
                    share,
                ))?;
                CommitmentStatus::Pending
            }
        };
        self.challenges.get_mut(&ch.id).expect("present").status = match verdict.outcome {
            VerdictOutcome::FraudProven => ChallengeStatus::Upheld,
            VerdictOutcome::ChallengeInvalid => ChallengeStatus::Rejected,
        };
        let c = self.commitments.get_mut(&ch.commitment).expect("present");
        c.status = status;
        if status == CommitmentStatus::Reverted {
            c.settled_at = Some(now);
            self.unlock(ch.commitment);
        }
        self.record(now, TraceKind::DisputeResolved, ch.commitment, Some(ch.challenger));
        Ok(status)
    }

    /// Settles, extends or blocks a window whose deadline has passed.
    pub fn evaluate_window(&mut self, commitment: CommitmentId, now: u64) -> Result<WindowOutcome, ProtocolError> {
        let (c, w) = self.open_commitment(commitment)?;
        if !c.status.is_open() {
            return Err(ProtocolError::InvalidState {
                commitment,
                status: c.status,
            });
        }
        if now < w.deadline {
            return Err(ProtocolError::NotDue {
                now,
                deadline: w.deadline,
            });
        }
        if c.status == CommitmentStatus::Disputed {
            self.record(now, TraceKind::Blocked, commitment, None);
            return Ok(WindowOutcome::Blocked);
        }
        if let CommitmentKind::Probe(probe) = c.kind {
            self.close_probe(commitment, now)?;
            return Ok(WindowOutcome::ProbeClosed { probe });
        }
        if w.sign_offs.len() as u64 >= w.required {
            if let Some(open) = w
                .challenges
                .iter()
                .find(|ch| self.challenges[ch].status == ChallengeStatus::Open)
            {
                return Err(ProtocolError::Invariant(format!(
                    "commitment {commitment} reached finalization with open challenge {open}"
                )));
            }
            let step = w.step;
            return self.finalize_bundle(commitment, step, now);
        }

        let delegation = c.delegation;
        let schedule = &self.delegations[&delegation].terms.schedule;
        let step = (w.step + 1).min(schedule.max_step);
        let duration = schedule.window_duration(step)?;
        let required = schedule.required_challengers(step)?;
        let w = self.windows.get_mut(&commitment).expect("present");
        w.step = step;
        w.opened_at = now;
        w.deadline = now + duration;
        w.required = required;
        let deadline = w.deadline;
        self.record(now, TraceKind::Extended, commitment, None);
        Ok(WindowOutcome::Extended {
            step,
            deadline,
            required,
        })
    }

    /// Applies all diffs of an approved commitment atomically. A version
    /// conflict on any account leaves every account untouched and reverts the
    /// commitment.
    fn finalize_bundle(&mut self, commitment: CommitmentId, step: u32, now: u64) -> Result<WindowOutcome, ProtocolError> {
        let diffs = self.commitments[&commitment].diffs.clone();
        let outcome = match self.accounts.apply_bundle(&diffs) {
            Ok(()) => {
                self.commitments.get_mut(&commitment).expect("present").status = CommitmentStatus::Finalized;
                WindowOutcome::Finalized { step }
            }
            Err(ProtocolError::VersionConflict { account, .. }) => {
                self.commitments.get_mut(&commitment).expect("present").status = CommitmentStatus::Reverted;
                WindowOutcome::BundleReverted { account }
            }
            Err(e) => return Err(e),
        };
        self.commitments.get_mut(&commitment).expect("present").settled_at = Some(now);
        self.unlock(commitment);
        let kind = match outcome {
            WindowOutcome::Finalized { .. } => TraceKind::Finalized,
            _ => TraceKind::Reverted,
        };
        self.record(now, kind, commitment, None);
        Ok(outcome)
    }

    fn close_probe(&mut self, commitment: CommitmentId, now: u64) -> Result<(), ProtocolError> {
        let open: Vec<ChallengeId> = self.windows[&commitment]
            .challenges
            .iter()
            .copied()
            .filter(|ch| self.challenges[ch].status == ChallengeStatus::Open)
            .collect();
        for id in open {
            let ch = self.challenges.get_mut(&id).expect("present");
            ch.status = ChallengeStatus::Upheld;
            let (party, bond) = (ch.challenger, ch.bond);
            self.ledger.release_bond(party, bond, BondPurpose::DisputeBond)?;
        }
        let c = self.commitments.get_mut(&commitment).expect("present");
        c.status = CommitmentStatus::Reverted;
        c.settled_at = Some(now);
        self.record(now, TraceKind::ProbeClosed, commitment, None);
        Ok(())
    }

    /// Nodes that challenged `commitment`, in challenge order.
    pub fn challengers_of(&self, commitment: CommitmentId) -> Vec<NodeId> {
        self.windows
            .get(&commitment)
            .map(|w| w.challenges.iter().map(|ch| self.challenges[ch].challenger).collect())
            .unwrap_or_default()
    }
}
