//! Single-threaded discrete-event loop.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::economics::{
    assess_closed_probe, issue_probe, BondLedger, BondPurpose, EconomicsError, Probe, ProbeTerms,
};
use crate::ids::{AccountId, ChallengeId, CommitmentId, DelegationId, NodeId};
use crate::protocol::{
    AccountState, CommitmentKind, CommitmentStatus, DelegationTerms, DisputeVerdict, Protocol, ProtocolConfig,
    ProtocolError, Trace, TraceEntry, TraceKind, VerdictOutcome, WindowOutcome,
};
use crate::sim::audit::audit_trace;
use crate::sim::config::{ConfigError, NodeSpec, ScenarioConfig};
use crate::sim::policy::{decide_action, Action, NodePolicy, Observation, Role, SuppressTarget};
use crate::sim::report::{CommitmentRecord, LatencySummary, ProbeRecord, SimReport};
use crate::sim::sampling::sample_challengers;
use crate::sim::transition::{random_transactions, replay, verify_diff, DaRecord, DaStore, CHECKSUM_LEN};

const ACCOUNT_BODY_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("protocol error at {at_ms} ms: {error}")]
    Protocol { at_ms: u64, error: ProtocolError },
    #[error("economics error at {at_ms} ms: {error}")]
    Economics { at_ms: u64, error: EconomicsError },
    #[error("invariant violated at trace position {seq}: {detail}")]
    InvariantViolation { seq: u64, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    SubmitCommitment { operator: NodeId },
    /// A commitment reaches a node, which decides how to react.
    Observe { node: NodeId, commitment: CommitmentId },
    SignOff { node: NodeId, commitment: CommitmentId },
    RaiseChallenge { node: NodeId, commitment: CommitmentId },
    WindowDeadline { commitment: CommitmentId, deadline: u64 },
    DisputeVerdictArrives { challenge: ChallengeId },
    ProbeIssued,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldEvent {
    pub at: u64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for WorldEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

impl PartialOrd for WorldEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: SimReport,
    pub trace: Trace,
    pub commitments: Vec<CommitmentRecord>,
    pub probes: Vec<ProbeRecord>,
}

struct OperatorState {
    delegation: DelegationId,
    accounts: Vec<AccountId>,
}

#[derive(Default)]
struct CommitmentMeta {
    fraudulent: bool,
    withheld: bool,
    challenged: bool,
    /// Nodes that need not look at this commitment again.
    done: BTreeSet<NodeId>,
}

struct Censor {
    p_suppress: f64,
    remaining: u64,
    target: SuppressTarget,
    until_step: Option<u32>,
}

#[derive(Default)]
struct Counters {
    skipped_busy: u64,
    skipped_expired: u64,
    fraud_attempted: u64,
    challenges_raised: u64,
    challenges_upheld: u64,
    challenges_rejected: u64,
    actions_rejected: u64,
    suppressed_sign_offs: u64,
    suppressed_challenges: u64,
    probes_issued: u64,
    probe_slashes: u64,
    probe_slashed_amount: u64,
}

struct World {
    config: ScenarioConfig,
    nodes: BTreeMap<NodeId, NodeSpec>,
    verifiers: Vec<NodeId>,
    pool: Vec<NodeId>,
    protocol: Protocol,
    da: DaStore,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<WorldEvent>>,
    next_seq: u64,
    now: u64,
    operators: BTreeMap<NodeId, OperatorState>,
    probe_delegation: Option<DelegationId>,
    meta: BTreeMap<CommitmentId, CommitmentMeta>,
    probes: BTreeMap<CommitmentId, Probe>,
    probe_records: Vec<ProbeRecord>,
    censors: Vec<Censor>,
    probe_debt: f64,
    counters: Counters,
}

/// Runs `config` to its duration. Every invariant is checked as the run
/// proceeds and the trace is audited at the end; a violation aborts the run.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun, SimError> {
    config.validate()?;
    let mut world = World::new(config.clone())?;
    world.run()?;
    world.finish()
}

impl World {
    fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        let specs = config.nodes();
        let treasury = (NodeId::TREASURY, config.bonds.treasury_balance);
        let ledger = BondLedger::new(specs.iter().map(|n| (n.id, n.balance)).chain([treasury]))
            .map_err(|e| ConfigError::Invalid {
                field: "population".into(),
                reason: e.to_string(),
            })?;
        let protocol = Protocol::new(
            ProtocolConfig {
                min_challenger_bond: config.bonds.min_challenger_bond,
                operator_slash: config.bonds.operator_slash,
                slash_reward_share: config.bonds.slash_reward_share,
            },
            ledger,
            config.seed,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let censors = specs
            .iter()
            .filter_map(|n| match n.policy {
                NodePolicy::CensoringAdversary {
                    p_suppress,
                    budget,
                    target,
                    until_step,
                } => Some(Censor {
                    p_suppress,
                    remaining: budget,
                    target,
                    until_step,
                }),
                _ => None,
            })
            .collect();
        let mut world = World {
            verifiers: specs.iter().filter(|n| n.policy.is_verifier()).map(|n| n.id).collect(),
            pool: config.challenger_pool(),
            nodes: specs.into_iter().map(|n| (n.id, n)).collect(),
            config,
            protocol,
            da: DaStore::default(),
            rng,
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: 0,
            operators: BTreeMap::new(),
            probe_delegation: None,
            meta: BTreeMap::new(),
            probes: BTreeMap::new(),
            probe_records: Vec::new(),
            censors,
            probe_debt: 0.0,
            counters: Counters::default(),
        };
        world.setup()?;
        Ok(world)
    }

    fn protocol_err(&self, error: ProtocolError) -> SimError {
        SimError::Protocol { at_ms: self.now, error }
    }

    fn terms(&self) -> DelegationTerms {
        DelegationTerms {
            max_lifetime_ms: self.config.delegation_lifetime(),
            update_frequency_ms: self.config.commitment_cadence_ms,
            schedule: self.config.schedule.clone(),
            challenger_pool: self.pool.clone(),
        }
    }

    fn create_accounts(&mut self, namespace: u32) -> Result<Vec<AccountId>, SimError> {
        let ids: Vec<AccountId> = (0..self.config.accounts_per_operator as u64)
            .map(|i| AccountId::derived(namespace, i))
            .collect();
        for id in &ids {
            self.protocol
                .create_account(*id, vec![0; CHECKSUM_LEN + ACCOUNT_BODY_LEN])
                .map_err(|e| self.protocol_err(e))?;
        }
        Ok(ids)
    }

    fn setup(&mut self) -> Result<(), SimError> {
        let bonds = self.config.bonds.clone();
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in ids {
            let node = &self.nodes[&id];
            let (role, verifier) = (node.role, node.policy.is_verifier());
            if role == Role::Operator {
                if bonds.operator_bond > 0 {
                    self.protocol
                        .ledger_mut()
                        .post_bond(id, bonds.operator_bond, BondPurpose::OperatorBond)
                        .map_err(|e| self.protocol_err(e.into()))?;
                }
                let accounts = self.create_accounts(id.0)?;
                let terms = self.terms();
                let delegation = self
                    .protocol
                    .delegate(accounts.iter().copied().collect(), id, terms, 0)
                    .map_err(|e| self.protocol_err(e))?;
                self.operators.insert(id, OperatorState { delegation, accounts });
                self.schedule(0, EventKind::SubmitCommitment { operator: id })?;
            } else if verifier && bonds.challenger_stake > 0 {
                self.protocol
                    .ledger_mut()
                    .post_bond(id, bonds.challenger_stake, BondPurpose::ChallengerBond)
                    .map_err(|e| self.protocol_err(e.into()))?;
            }
        }
        if self.config.probe_rate > 0.0 {
            let accounts = self.create_accounts(NodeId::TREASURY.0)?;
            let terms = self.terms();
            let delegation = self
                .protocol
                .delegate(accounts.into_iter().collect(), NodeId::TREASURY, terms, 0)
                .map_err(|e| self.protocol_err(e))?;
            self.probe_delegation = Some(delegation);
        }
        Ok(())
    }

    fn schedule(&mut self, at: u64, kind: EventKind) -> Result<(), SimError> {
        if at < self.now {
            return Err(SimError::InvariantViolation {
                seq: self.protocol.trace().len() as u64,
                detail: format!("event scheduled at {at} ms while processing {} ms", self.now),
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(WorldEvent { at, seq, kind }));
        Ok(())
    }

    fn run(&mut self) -> Result<(), SimError> {
        while let Some(Reverse(event)) = self.queue.pop() {
            if event.at > self.config.duration_ms {
                break;
            }
            self.now = event.at;
            let touches_ledger = !matches!(event.kind, EventKind::Observe { .. } | EventKind::SignOff { .. });
            self.handle(event.kind)?;
            if touches_ledger {
                self.check_ledger()?;
            }
        }
        Ok(())
    }

    fn check_ledger(&self) -> Result<(), SimError> {
        self.protocol
            .ledger()
            .check_conservation()
            .map_err(|e| SimError::InvariantViolation {
                seq: self.protocol.trace().len() as u64,
                detail: e.to_string(),
            })
    }

    fn handle(&mut self, kind: EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::SubmitCommitment { operator } => self.on_submit(operator),
            EventKind::Observe { node, commitment } => self.on_observe(node, commitment),
            EventKind::SignOff { node, commitment } => self.on_sign_off(node, commitment),
            EventKind::RaiseChallenge { node, commitment } => self.on_challenge(node, commitment),
            EventKind::WindowDeadline { commitment, deadline } => self.on_deadline(commitment, deadline),
            EventKind::DisputeVerdictArrives { challenge } => self.on_verdict(challenge),
            EventKind::ProbeIssued => self.on_probe(),
        }
    }

    fn stake_at_risk(&self, operator: NodeId) -> u64 {
        self.config
            .bonds
            .operator_slash
            .min(self.protocol.ledger().escrowed(operator, BondPurpose::OperatorBond))
    }

    fn on_submit(&mut self, operator: NodeId) -> Result<(), SimError> {
        let next = self.now + self.config.commitment_cadence_ms;
        if next < self.config.submit_until() {
            self.schedule(next, EventKind::SubmitCommitment { operator })?;
        }
        let state = &self.operators[&operator];
        let delegation = state.delegation;
        let free: Vec<AccountId> = state
            .accounts
            .iter()
            .copied()
            .filter(|a| self.protocol.in_flight(a).is_none())
            .collect();
        if free.len() < self.config.bundle_size {
            self.counters.skipped_busy += 1;
            return Ok(());
        }
        let expires = self
            .protocol
            .delegation(delegation)
            .expect("operator delegation exists")
            .expires_at();
        if self.now > expires {
            self.counters.skipped_expired += 1;
            return Ok(());
        }
        let mut picked: Vec<AccountId> = rand::seq::index::sample(&mut self.rng, free.len(), self.config.bundle_size)
            .into_iter()
            .map(|i| free[i])
            .collect();
        picked.sort();
        let pre: Vec<AccountState> = picked
            .iter()
            .map(|a| self.protocol.account(a).expect("operator accounts exist").clone())
            .collect();
        let txs = random_transactions(&mut self.rng, &picked, self.config.transactions_per_commitment);

        let policy = self.nodes[&operator].policy.clone();
        let fraud_p = policy.fraud_rate(self.stake_at_risk(operator));
        let forged = self.rng.random::<f64>() < fraud_p;
        let withhold_p = match policy {
            NodePolicy::FraudulentOperator { p_withhold_da, .. } => p_withhold_da,
            _ => 0.0,
        };
        let withheld = self.rng.random::<f64>() < withhold_p;
        let (diffs, published) = if forged {
            // The committed state includes an injected transaction. Detectable
            // frauds leave it out of the DA record; the rest publish it so the
            // replay matches.
            let stealth = self.rng.random::<f64>() >= self.config.detection.p_detect_given_fraud;
            let mut forged_txs = txs.clone();
            forged_txs.extend(random_transactions(&mut self.rng, &picked, 1));
            let diffs = replay(&pre, &forged_txs).expect("transactions target the pre-state");
            (diffs, if stealth { forged_txs } else { txs })
        } else {
            (replay(&pre, &txs).expect("transactions target the pre-state"), txs)
        };
        let timely = self.rng.random::<f64>() < self.config.detection.p_window;
        let pointer = if withheld {
            self.da.reserve()
        } else {
            self.da.put(DaRecord {
                transactions: published,
            })
        };
        let fraudulent = forged || withheld;
        if fraudulent {
            self.counters.fraud_attempted += 1;
        }
        let id = match self
            .protocol
            .submit_commitment(delegation, operator, diffs, pointer, self.now)
        {
            Ok(id) => id,
            Err(ProtocolError::DelegationExpired { .. }) => {
                self.counters.skipped_expired += 1;
                return Ok(());
            }
            Err(e) => return Err(self.protocol_err(e)),
        };
        self.meta.insert(
            id,
            CommitmentMeta {
                fraudulent,
                withheld,
                ..Default::default()
            },
        );
        let deadline = self.protocol.window(id).expect("window opened").deadline;
        self.schedule(deadline, EventKind::WindowDeadline { commitment: id, deadline })?;
        let observe_at = if timely {
            self.now + self.config.verification_latency_ms
        } else {
            deadline + 1
        };
        for node in self.verifiers.clone() {
            self.schedule(observe_at, EventKind::Observe { node, commitment: id })?;
        }

        let rate = self.config.probe_rate;
        if rate > 0.0 {
            self.probe_debt += rate;
            while self.probe_debt >= 1.0 {
                self.probe_debt -= 1.0;
                self.schedule(self.now, EventKind::ProbeIssued)?;
            }
            let frac = self.probe_debt;
            if frac > 0.0 && self.rng.random::<f64>() < frac {
                self.probe_debt = 0.0;
                self.schedule(self.now, EventKind::ProbeIssued)?;
            }
        }
        Ok(())
    }

    fn on_observe(&mut self, node: NodeId, commitment: CommitmentId) -> Result<(), SimError> {
        let c = self.protocol.commitment(commitment).expect("observed commitments exist");
        if c.status != CommitmentStatus::Pending || self.meta[&commitment].done.contains(&node) {
            return Ok(());
        }
        let w = self.protocol.window(commitment).expect("window opened");
        let sampled = w.sampled_challengers.contains(&node);
        let pre: Vec<AccountState> = c
            .diffs
            .iter()
            .map(|d| self.protocol.account(&d.account).expect("committed accounts exist").clone())
            .collect();
        let observation = Observation {
            pre_state: &pre,
            diffs: &c.diffs,
            da: self.da.get(c.da_pointer),
        };
        let oracle = |o: &Observation<'_>| verify_diff(o.pre_state, o.diffs, o.da);
        let policy = &self.nodes[&node].policy;
        let action = decide_action(policy, &observation, &oracle, &mut self.rng);
        match action {
            Action::SignOff if sampled => self.schedule(self.now, EventKind::SignOff { node, commitment }),
            Action::SignOff => {
                self.meta.get_mut(&commitment).expect("tracked").done.insert(node);
                Ok(())
            }
            Action::Challenge => self.schedule(self.now, EventKind::RaiseChallenge { node, commitment }),
            Action::Abstain => Ok(()),
        }
    }

    /// Asks each censor in turn whether it suppresses `action` on a window
    /// at `step`.
    fn censored(&mut self, action: Action, commitment: CommitmentId, node: NodeId, step: u32) -> bool {
        for i in 0..self.censors.len() {
            let c = &self.censors[i];
            if c.remaining == 0 || !c.target.covers(action) || c.until_step.is_some_and(|u| step >= u) {
                continue;
            }
            if self.rng.random::<f64>() < c.p_suppress {
                self.censors[i].remaining -= 1;
                match action {
                    Action::SignOff => self.counters.suppressed_sign_offs += 1,
                    _ => self.counters.suppressed_challenges += 1,
                }
                let status = self.protocol.commitment(commitment).map(|c| c.status);
                self.protocol.note(
                    self.now,
                    TraceKind::Suppressed,
                    TraceEntry {
                        commitment: Some(commitment),
                        step: Some(step),
                        status,
                        node: Some(node),
                        ..Default::default()
                    },
                );
                return true;
            }
        }
        false
    }

    fn window_step(&self, commitment: CommitmentId) -> Option<u32> {
        let c = self.protocol.commitment(commitment)?;
        if !c.status.is_open() {
            return None;
        }
        self.protocol.window(commitment).map(|w| w.step)
    }

    fn benign(&mut self, e: ProtocolError) -> Result<(), SimError> {
        match e {
            ProtocolError::InvalidState { .. }
            | ProtocolError::TooLate { .. }
            | ProtocolError::InconsistentRole { .. }
            | ProtocolError::Ledger(_) => {
                self.counters.actions_rejected += 1;
                Ok(())
            }
            e => Err(self.protocol_err(e)),
        }
    }

    fn on_sign_off(&mut self, node: NodeId, commitment: CommitmentId) -> Result<(), SimError> {
        let Some(step) = self.window_step(commitment) else {
            self.counters.actions_rejected += 1;
            return Ok(());
        };
        if self.censored(Action::SignOff, commitment, node, step) {
            return Ok(());
        }
        match self.protocol.sign_off(commitment, node, self.now) {
            Ok(_) => {
                self.meta.get_mut(&commitment).expect("tracked").done.insert(node);
                Ok(())
            }
            Err(e) => self.benign(e),
        }
    }

    fn on_challenge(&mut self, node: NodeId, commitment: CommitmentId) -> Result<(), SimError> {
        let Some(step) = self.window_step(commitment) else {
            self.counters.actions_rejected += 1;
            return Ok(());
        };
        if self.censored(Action::Challenge, commitment, node, step) {
            return Ok(());
        }
        let bond = self.config.bonds.challenge_bond;
        match self.protocol.raise_challenge(commitment, node, bond, self.now) {
            Ok(challenge) => {
                self.counters.challenges_raised += 1;
                let meta = self.meta.get_mut(&commitment).expect("tracked");
                meta.challenged = true;
                meta.done.insert(node);
                if !self.probes.contains_key(&commitment) {
                    let at = self.now + self.config.dispute_latency_ms;
                    self.schedule(at, EventKind::DisputeVerdictArrives { challenge })?;
                }
                Ok(())
            }
            Err(e) => self.benign(e),
        }
    }

    fn on_deadline(&mut self, commitment: CommitmentId, deadline: u64) -> Result<(), SimError> {
        let c = self.protocol.commitment(commitment).expect("scheduled commitments exist");
        let w = self.protocol.window(commitment).expect("window opened");
        if !c.status.is_open() || w.deadline != deadline {
            return Ok(());
        }
        let outcome = self
            .protocol
            .evaluate_window(commitment, self.now)
            .map_err(|e| self.protocol_err(e))?;
        match outcome {
            WindowOutcome::Extended { deadline, .. } => {
                self.schedule(deadline, EventKind::WindowDeadline { commitment, deadline })?;
                let done = &self.meta[&commitment].done;
                let again: Vec<NodeId> = self.verifiers.iter().copied().filter(|n| !done.contains(n)).collect();
                for node in again {
                    self.schedule(self.now, EventKind::Observe { node, commitment })?;
                }
            }
            WindowOutcome::ProbeClosed { .. } => self.assess(commitment)?,
            WindowOutcome::Finalized { .. } | WindowOutcome::Blocked | WindowOutcome::BundleReverted { .. } => {}
        }
        Ok(())
    }

    fn assess(&mut self, commitment: CommitmentId) -> Result<(), SimError> {
        let mut probe = self.probes.remove(&commitment).expect("probe commitments are tracked");
        let terms = ProbeTerms {
            slash: self.config.bonds.probe_slash,
            reward: self.config.bonds.probe_reward,
            treasury: NodeId::TREASURY,
        };
        let slashes = assess_closed_probe(&mut self.protocol, &mut probe, &terms).map_err(|error| {
            SimError::Economics {
                at_ms: self.now,
                error,
            }
        })?;
        let w = self.protocol.window(commitment).expect("window opened");
        let record = ProbeRecord {
            probe: probe.id,
            commitment,
            targets: probe.targets.iter().copied().collect(),
            signers: w.sign_offs.iter().copied().collect(),
            challengers: self.protocol.challengers_of(commitment),
            slashed: slashes.iter().map(|s| s.party).collect(),
        };
        self.counters.probe_slashes += slashes.len() as u64;
        self.counters.probe_slashed_amount += slashes.iter().map(|s| s.amount).sum::<u64>();
        for s in &slashes {
            self.protocol.note(
                self.now,
                TraceKind::ProbeAssessed,
                TraceEntry {
                    commitment: Some(commitment),
                    node: Some(s.party),
                    ..Default::default()
                },
            );
        }
        self.probe_records.push(record);
        Ok(())
    }

    fn on_verdict(&mut self, challenge: ChallengeId) -> Result<(), SimError> {
        let ch = self.protocol.challenge(challenge).expect("scheduled challenges exist").clone();
        let meta = &self.meta[&ch.commitment];
        let outcome = if meta.fraudulent {
            VerdictOutcome::FraudProven
        } else {
            VerdictOutcome::ChallengeInvalid
        };
        let status = self
            .protocol
            .resolve_dispute(DisputeVerdict { challenge, outcome }, self.now)
            .map_err(|e| self.protocol_err(e))?;
        match outcome {
            VerdictOutcome::FraudProven => self.counters.challenges_upheld += 1,
            VerdictOutcome::ChallengeInvalid => self.counters.challenges_rejected += 1,
        }
        if status == CommitmentStatus::Pending {
            let deadline = self.protocol.window(ch.commitment).expect("window opened").deadline;
            if deadline <= self.now {
                // the original deadline passed while blocked
                self.schedule(
                    self.now,
                    EventKind::WindowDeadline {
                        commitment: ch.commitment,
                        deadline,
                    },
                )?;
            }
        }
        Ok(())
    }

    fn on_probe(&mut self) -> Result<(), SimError> {
        let delegation = self.probe_delegation.expect("probe delegation exists when probing");
        let k = self.config.probe_target_count() as usize;
        let targets = sample_challengers(&self.pool, k, &mut self.rng)
            .map_err(|e| self.protocol_err(e.into()))?;
        let probe = issue_probe(&mut self.protocol, &mut self.da, delegation, targets, &mut self.rng, self.now)
            .map_err(|error| SimError::Economics {
                at_ms: self.now,
                error,
            })?;
        self.counters.probes_issued += 1;
        let commitment = probe.commitment;
        let deadline = self.protocol.window(commitment).expect("window opened").deadline;
        self.meta.insert(commitment, CommitmentMeta::default());
        let observe_at = self.now + self.config.verification_latency_ms;
        let targets: Vec<NodeId> = probe
            .targets
            .iter()
            .copied()
            .filter(|n| self.nodes[n].policy.is_verifier())
            .collect();
        self.probes.insert(commitment, probe);
        self.schedule(deadline, EventKind::WindowDeadline { commitment, deadline })?;
        for node in targets {
            self.schedule(observe_at, EventKind::Observe { node, commitment })?;
        }
        Ok(())
    }

    fn finish(self) -> Result<ScenarioRun, SimError> {
        let trace = self.protocol.trace().clone();
        if let Some(v) = audit_trace(trace.records()).into_iter().next() {
            return Err(SimError::InvariantViolation {
                seq: v.seq,
                detail: v.detail,
            });
        }
        self.check_ledger()?;

        let mut commitments = Vec::new();
        let (mut finalized, mut reverted, mut pending) = (0, 0, 0);
        let (mut fraud_finalized, mut fraud_caught, mut challenged) = (0, 0, 0);
        let mut latencies = Vec::new();
        let mut histogram = BTreeMap::new();
        for c in self.protocol.commitments() {
            if c.kind != CommitmentKind::Assertion {
                continue;
            }
            let meta = &self.meta[&c.id];
            let w = self.protocol.window(c.id).expect("window opened");
            let latency = c.settled_at.map(|t| t - c.submitted_at);
            match c.status {
                CommitmentStatus::Finalized => {
                    finalized += 1;
                    latencies.push(latency.expect("settled"));
                    *histogram.entry(w.step).or_insert(0u64) += 1;
                    if meta.fraudulent {
                        fraud_finalized += 1;
                    }
                }
                CommitmentStatus::Reverted => {
                    reverted += 1;
                    if meta.fraudulent && meta.challenged {
                        fraud_caught += 1;
                    }
                }
                CommitmentStatus::Pending | CommitmentStatus::Disputed => pending += 1,
            }
            if meta.challenged {
                challenged += 1;
            }
            commitments.push(CommitmentRecord {
                id: c.id,
                operator: c.operator,
                submitted_at_ms: c.submitted_at,
                status: c.status,
                settled_at_ms: c.settled_at,
                latency_ms: latency,
                final_step: w.step,
                sign_offs: w.sign_offs.len() as u64,
                fraudulent: meta.fraudulent,
                da_withheld: meta.withheld,
                challenged: meta.challenged,
            });
        }
        let n = &self.counters;
        let report = SimReport {
            seed: self.config.seed,
            duration_ms: self.config.duration_ms,
            submitted: commitments.len() as u64,
            finalized,
            reverted,
            pending,
            skipped_busy: n.skipped_busy,
            skipped_expired: n.skipped_expired,
            fraud_attempted: n.fraud_attempted,
            fraud_finalized,
            fraud_caught,
            challenged_commitments: challenged,
            challenges_raised: n.challenges_raised,
            challenges_upheld: n.challenges_upheld,
            challenges_rejected: n.challenges_rejected,
            actions_rejected: n.actions_rejected,
            suppressed_sign_offs: n.suppressed_sign_offs,
            suppressed_challenges: n.suppressed_challenges,
            probes_issued: n.probes_issued,
            probes_assessed: self.probe_records.len() as u64,
            probe_slashes: n.probe_slashes,
            probe_slashed_amount: n.probe_slashed_amount,
            latency: LatencySummary::from_samples(&latencies),
            step_histogram: histogram,
            ledger: self.protocol.ledger().snapshot(),
            trace_records: trace.len() as u64,
            trace_sha256: trace.digest(),
        };
        if !report.is_consistent() {
            return Err(SimError::InvariantViolation {
                seq: trace.len() as u64,
                detail: "report counts do not add up".into(),
            });
        }
        Ok(ScenarioRun {
            report,
            trace,
            commitments,
            probes: self.probe_records,
        })
    }
}
