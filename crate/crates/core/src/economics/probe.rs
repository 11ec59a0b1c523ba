use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BondLedger, BondPurpose, EconomicsError, SlashEvent, SlashReason};
use crate::ids::{CommitmentId, DelegationId, NodeId, ProbeId};
use crate::protocol::{AccountState, CommitmentStatus, Protocol};
use crate::ratio::Ratio;
use crate::sim::transition::{corrupt, random_transactions, replay, DaRecord, DaStore};

/// A decoy commitment with a deliberately wrong diff, sent to `targets`
/// through the ordinary commitment pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub id: ProbeId,
    pub commitment: CommitmentId,
    pub targets: BTreeSet<NodeId>,
    pub issued_at: u64,
    assessed: bool,
}

impl Probe {
    pub fn is_assessed(&self) -> bool {
        self.assessed
    }
}

/// How each target reacted to a probe.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeResponses {
    pub signers: BTreeSet<NodeId>,
    pub challengers: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeTerms {
    /// Taken from each signer's challenger bond (capped by what is escrowed).
    pub slash: u64,
    /// Paid from the treasury to each target that challenged.
    pub reward: u64,
    pub treasury: NodeId,
}

/// Builds a decoy on one account of `delegation`: the DA record holds honest
/// transactions while the committed diff has one flipped bit.
pub fn issue_probe<R: Rng + ?Sized>(
    protocol: &mut Protocol,
    da: &mut DaStore,
    delegation: DelegationId,
    targets: BTreeSet<NodeId>,
    rng: &mut R,
    now: u64,
) -> Result<Probe, EconomicsError> {
    if targets.is_empty() {
        return Err(EconomicsError::EmptyTargets);
    }
    let record = protocol
        .delegation(delegation)
        .ok_or(crate::protocol::ProtocolError::UnknownDelegation(delegation))?;
    let accounts: Vec<_> = record.accounts.iter().copied().collect();
    let account = accounts[rng.random_range(0..accounts.len())];
    let pre: Vec<AccountState> = vec![protocol
        .account(&account)
        .expect("delegated accounts exist")
        .clone()];
    let n_tx = rng.random_range(1..=4usize);
    let txs = random_transactions(rng, &[account], n_tx);
    let mut diffs = replay(&pre, &txs).expect("transactions target the pre-state");
    corrupt(rng, &mut diffs);
    let ptr = da.put(DaRecord { transactions: txs });
    let (commitment, id) = protocol.submit_probe(delegation, diffs, ptr, targets.clone(), now)?;
    Ok(Probe {
        id,
        commitment,
        targets,
        issued_at: now,
        assessed: false,
    })
}

/// Slashes every target that signed the decoy and rewards every target that
/// challenged it. Returns the slashes applied; zero-amount slashes are
/// recorded for signers with nothing escrowed.
pub fn assess_probe(
    ledger: &mut BondLedger,
    probe: &mut Probe,
    responses: &ProbeResponses,
    terms: &ProbeTerms,
) -> Result<Vec<SlashEvent>, EconomicsError> {
    if probe.assessed {
        return Err(EconomicsError::AlreadyAssessed(probe.id));
    }
    let mut slashes = Vec::new();
    for &signer in responses.signers.intersection(&probe.targets) {
        let amount = terms
            .slash
            .min(ledger.escrowed(signer, BondPurpose::ChallengerBond));
        let event = SlashEvent::new(signer, amount, SlashReason::LazyProbeFailure, None, Ratio::ZERO);
        ledger.apply_verdict(&event)?;
        slashes.push(event);
    }
    for &challenger in responses.challengers.intersection(&probe.targets) {
        if responses.signers.contains(&challenger) {
            continue;
        }
        let paid = terms.reward.min(ledger.balance(terms.treasury));
        if paid > 0 {
            ledger.transfer(terms.treasury, challenger, paid)?;
        }
    }
    probe.assessed = true;
    Ok(slashes)
}

/// Collects responses from the probe's closed window and assesses it against
/// the protocol's ledger.
pub fn assess_closed_probe(
    protocol: &mut Protocol,
    probe: &mut Probe,
    terms: &ProbeTerms,
) -> Result<Vec<SlashEvent>, EconomicsError> {
    let c = protocol
        .commitment(probe.commitment)
        .ok_or(crate::protocol::ProtocolError::UnknownCommitment(probe.commitment))?;
    if c.status != CommitmentStatus::Reverted {
        return Err(EconomicsError::ProbeOpen(probe.id));
    }
    let w = protocol.window(probe.commitment).expect("commitments have windows");
    let responses = ProbeResponses {
        signers: w.sign_offs.clone(),
        challengers: protocol.challengers_of(probe.commitment).into_iter().collect(),
    };
    assess_probe(protocol.ledger_mut(), probe, &responses, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(targets: impl IntoIterator<Item = u32>) -> Probe {
        Probe {
            id: ProbeId(0),
            commitment: CommitmentId(0),
            targets: targets.into_iter().map(NodeId).collect(),
            issued_at: 0,
            assessed: false,
        }
    }

    fn terms() -> ProbeTerms {
        ProbeTerms {
            slash: 100,
            reward: 10,
            treasury: NodeId::TREASURY,
        }
    }

    fn staked_ledger(n: u32) -> BondLedger {
        let mut l = BondLedger::new(
            (0..n)
                .map(|i| (NodeId(i), 1_000))
                .chain([(NodeId::TREASURY, 1_000)]),
        )
        .unwrap();
        for i in 0..n {
            l.post_bond(NodeId(i), 500, BondPurpose::ChallengerBond).unwrap();
        }
        l
    }

    #[test]
    fn three_of_ten_signers_slashed() {
        let mut l = staked_ledger(10);
        let mut p = probe(0..10);
        let responses = ProbeResponses {
            signers: [1, 4, 7].into_iter().map(NodeId).collect(),
            challengers: [0, 2].into_iter().map(NodeId).collect(),
        };
        let slashes = assess_probe(&mut l, &mut p, &responses, &terms()).unwrap();
        assert_eq!(slashes.len(), 3);
        assert!(slashes.iter().all(|s| s.amount == 100 && s.reason == SlashReason::LazyProbeFailure));
        assert_eq!(l.escrowed(NodeId(4), BondPurpose::ChallengerBond), 400);
        assert_eq!(l.balance(NodeId(0)), 510);
        assert_eq!(l.burned(), 300);
        l.check_conservation().unwrap();
    }

    #[test]
    fn no_signers_no_slashes() {
        let mut l = staked_ledger(3);
        let mut p = probe(0..3);
        let slashes = assess_probe(&mut l, &mut p, &ProbeResponses::default(), &terms()).unwrap();
        assert!(slashes.is_empty());
    }

    #[test]
    fn empty_escrow_gives_zero_slash() {
        let mut l = BondLedger::new([(NodeId(0), 50)]).unwrap();
        let mut p = probe([0]);
        let responses = ProbeResponses {
            signers: [NodeId(0)].into(),
            ..Default::default()
        };
        let slashes = assess_probe(&mut l, &mut p, &responses, &terms()).unwrap();
        assert_eq!(slashes.len(), 1);
        assert_eq!(slashes[0].amount, 0);
        assert_eq!(l.balance(NodeId(0)), 50);
    }

    #[test]
    fn second_assessment_rejected() {
        let mut l = staked_ledger(1);
        let mut p = probe([0]);
        assess_probe(&mut l, &mut p, &ProbeResponses::default(), &terms()).unwrap();
        assert_eq!(
            assess_probe(&mut l, &mut p, &ProbeResponses::default(), &terms()),
            Err(EconomicsError::AlreadyAssessed(ProbeId(0)))
        );
    }

    #[test]
    fn non_targets_ignored() {
        let mut l = staked_ledger(3);
        let mut p = probe([0]);
        let responses = ProbeResponses {
            signers: [NodeId(1)].into(),
            challengers: [NodeId(2)].into(),
        };
        assert!(assess_probe(&mut l, &mut p, &responses, &terms()).unwrap().is_empty());
        assert_eq!(l.balance(NodeId(2)), 500);
    }
}
