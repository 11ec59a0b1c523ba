use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::NodeId;
use crate::ratio::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("{party} has {available} lamports, needs {requested}")]
    InsufficientFunds {
        party: NodeId,
        available: u64,
        requested: u64,
    },
    #[error("bond amount must be positive")]
    ZeroBond,
    #[error("{party} has {escrowed} lamports escrowed as {purpose:?}, cannot take {requested}")]
    InsufficientEscrow {
        party: NodeId,
        purpose: BondPurpose,
        escrowed: u64,
        requested: u64,
    },
    #[error("slash split is not a valid fraction: reward {reward_share:?}, burn {burn_share:?}")]
    InvalidSplit { reward_share: Ratio, burn_share: Ratio },
    #[error("conservation violated: balances {balances} + escrow {escrow} + burned {burned} != supply {supply}")]
    Conservation {
        balances: u128,
        escrow: u128,
        burned: u128,
        supply: u128,
    },
    #[error("duplicate party {0} in initial allocation")]
    DuplicateParty(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondPurpose {
    /// Standing stake of an operator, slashed on proven fraud.
    OperatorBond,
    /// Standing stake of a challenger, slashed on failed probes.
    ChallengerBond,
    /// Per-challenge escrow, returned when upheld and slashed when rejected.
    DisputeBond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlashReason {
    FraudProven,
    FalseChallenge,
    LazyProbeFailure,
}

impl SlashReason {
    pub fn purpose(self) -> BondPurpose {
        match self {
            SlashReason::FraudProven => BondPurpose::OperatorBond,
            SlashReason::FalseChallenge => BondPurpose::DisputeBond,
            SlashReason::LazyProbeFailure => BondPurpose::ChallengerBond,
        }
    }
}

/// A confiscation of escrowed stake. The reward part (rounded down) goes to
/// `reward_to`; the remainder is burned. Without a recipient everything burns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlashEvent {
    pub party: NodeId,
    pub amount: u64,
    pub reason: SlashReason,
    pub reward_to: Option<NodeId>,
    pub reward_share: Ratio,
    pub burn_share: Ratio,
}

impl SlashEvent {
    pub fn new(
        party: NodeId,
        amount: u64,
        reason: SlashReason,
        reward_to: Option<NodeId>,
        reward_share: Ratio,
    ) -> Self {
        let (reward_share, burn_share) = match reward_to {
            Some(_) => (
                reward_share,
                reward_share.complement().unwrap_or(Ratio::ZERO),
            ),
            None => (Ratio::ZERO, Ratio::ONE),
        };
        Self {
            party,
            amount,
            reason,
            reward_to,
            reward_share,
            burn_share,
        }
    }

    /// `(reward, burn)` amounts: reward gets the floor, burn the remainder.
    pub fn split(&self) -> (u64, u64) {
        let reward = match self.reward_to {
            Some(_) => self.reward_share.floor_mul(self.amount) as u64,
            None => 0,
        };
        (reward, self.amount - reward)
    }
}

/// One row of a ledger export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerRow {
    pub node: NodeId,
    pub balance: u64,
    pub operator_bond: u64,
    pub challenger_bond: u64,
    pub dispute_bond: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerSnapshot {
    pub rows: Vec<LedgerRow>,
    pub burned: u64,
    pub total_supply: u64,
}

/// Balances, escrow and burns in integer lamports. Supply is fixed at
/// construction and `sum(balances) + sum(escrow) + burned == total_supply`
/// after every operation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BondLedger {
    balances: BTreeMap<NodeId, u64>,
    escrow: BTreeMap<(NodeId, BondPurpose), u64>,
    burned: u64,
    total_supply: u64,
}

impl BondLedger {
    pub fn new(initial: impl IntoIterator<Item = (NodeId, u64)>) -> Result<Self, LedgerError> {
        let mut ledger = Self::default();
        for (node, amount) in initial {
            if ledger.balances.insert(node, amount).is_some() {
                return Err(LedgerError::DuplicateParty(node));
            }
            ledger.total_supply = ledger
                .total_supply
                .checked_add(amount)
                .expect("total supply fits in u64");
        }
        Ok(ledger)
    }

    pub fn balance(&self, node: NodeId) -> u64 {
        self.balances.get(&node).copied().unwrap_or(0)
    }

    pub fn escrowed(&self, node: NodeId, purpose: BondPurpose) -> u64 {
        self.escrow.get(&(node, purpose)).copied().unwrap_or(0)
    }

    pub fn burned(&self) -> u64 {
        self.burned
    }

    pub fn total_supply(&self) -> u64 {
        self.total_supply
    }

    /// Moves `amount` from the party's balance into escrow.
    pub fn post_bond(&mut self, party: NodeId, amount: u64, purpose: BondPurpose) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroBond);
        }
        let available = self.balance(party);
        if available < amount {
            return Err(LedgerError::InsufficientFunds {
                party,
                available,
                requested: amount,
            });
        }
        *self.balances.entry(party).or_default() -= amount;
        *self.escrow.entry((party, purpose)).or_default() += amount;
        Ok(())
    }

    /// Returns escrowed stake to the party's balance.
    pub fn release_bond(&mut self, party: NodeId, amount: u64, purpose: BondPurpose) -> Result<(), LedgerError> {
        self.take_escrow(party, purpose, amount)?;
        *self.balances.entry(party).or_default() += amount;
        Ok(())
    }

    pub fn transfer(&mut self, from: NodeId, to: NodeId, amount: u64) -> Result<(), LedgerError> {
        let available = self.balance(from);
        if available < amount {
            return Err(LedgerError::InsufficientFunds {
                party: from,
                available,
                requested: amount,
            });
        }
        *self.balances.entry(from).or_default() -= amount;
        *self.balances.entry(to).or_default() += amount;
        Ok(())
    }

    fn take_escrow(&mut self, party: NodeId, purpose: BondPurpose, amount: u64) -> Result<(), LedgerError> {
        let escrowed = self.escrowed(party, purpose);
        if escrowed < amount {
            return Err(LedgerError::InsufficientEscrow {
                party,
                purpose,
                escrowed,
                requested: amount,
            });
        }
        if amount > 0 {
            *self.escrow.entry((party, purpose)).or_default() -= amount;
        }
        Ok(())
    }

    /// Executes a slash: the amount leaves the party's escrow for the
    /// slash reason, the reward part is credited and the rest burned.
    pub fn apply_verdict(&mut self, slash: &SlashEvent) -> Result<(), LedgerError> {
        let split_ok = slash.reward_share.is_unit_interval()
            && slash.burn_share.is_unit_interval()
            && slash.reward_share.num() as u128 * slash.burn_share.den() as u128
                + slash.burn_share.num() as u128 * slash.reward_share.den() as u128
                == slash.reward_share.den() as u128 * slash.burn_share.den() as u128;
        if !split_ok {
            return Err(LedgerError::InvalidSplit {
                reward_share: slash.reward_share,
                burn_share: slash.burn_share,
            });
        }
        self.take_escrow(slash.party, slash.reason.purpose(), slash.amount)?;
        let (reward, burn) = slash.split();
        if let Some(to) = slash.reward_to {
            *self.balances.entry(to).or_default() += reward;
        }
        self.burned += burn;
        Ok(())
    }

    /// Recomputes the supply identity from scratch.
    pub fn check_conservation(&self) -> Result<(), LedgerError> {
        let balances: u128 = self.balances.values().map(|&v| v as u128).sum();
        let escrow: u128 = self.escrow.values().map(|&v| v as u128).sum();
        let burned = self.burned as u128;
        let supply = self.total_supply as u128;
        if balances + escrow + burned == supply {
            Ok(())
        } else {
            Err(LedgerError::Conservation {
                balances,
                escrow,
                burned,
                supply,
            })
        }
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        let mut nodes: Vec<NodeId> = self.balances.keys().copied().collect();
        nodes.extend(self.escrow.keys().map(|(n, _)| *n));
        nodes.sort();
        nodes.dedup();
        let rows = nodes
            .into_iter()
            .map(|node| LedgerRow {
                node,
                balance: self.balance(node),
                operator_bond: self.escrowed(node, BondPurpose::OperatorBond),
                challenger_bond: self.escrowed(node, BondPurpose::ChallengerBond),
                dispute_bond: self.escrowed(node, BondPurpose::DisputeBond),
            })
            .collect();
        LedgerSnapshot {
            rows,
            burned: self.burned,
            total_supply: self.total_supply,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: NodeId = NodeId(1);
    const B: NodeId = NodeId(2);

    fn half() -> Ratio {
        Ratio::new(1, 2).unwrap()
    }

    #[test]
    fn post_bond_moves_balance_to_escrow() {
        let mut l = BondLedger::new([(A, 1_000)]).unwrap();
        l.post_bond(A, 1_000, BondPurpose::OperatorBond).unwrap();
        assert_eq!(l.balance(A), 0);
        assert_eq!(l.escrowed(A, BondPurpose::OperatorBond), 1_000);
        l.check_conservation().unwrap();
    }

    #[test]
    fn post_bond_errors() {
        let mut l = BondLedger::new([(A, 1_000)]).unwrap();
        assert!(matches!(
            l.post_bond(A, 1_001, BondPurpose::OperatorBond),
            Err(LedgerError::InsufficientFunds { requested: 1_001, .. })
        ));
        assert_eq!(l.post_bond(A, 0, BondPurpose::OperatorBond), Err(LedgerError::ZeroBond));
        assert_eq!(l.balance(A), 1_000);
    }

    #[test]
    fn slash_split_even() {
        let mut l = BondLedger::new([(A, 1_000), (B, 0)]).unwrap();
        l.post_bond(A, 1_000, BondPurpose::OperatorBond).unwrap();
        let s = SlashEvent::new(A, 1_000, SlashReason::FraudProven, Some(B), half());
        l.apply_verdict(&s).unwrap();
        assert_eq!(l.balance(B), 500);
        assert_eq!(l.burned(), 500);
        l.check_conservation().unwrap();
    }

    #[test]
    fn slash_split_odd_floors_reward() {
        let mut l = BondLedger::new([(A, 999), (B, 0)]).unwrap();
        l.post_bond(A, 999, BondPurpose::OperatorBond).unwrap();
        let s = SlashEvent::new(A, 999, SlashReason::FraudProven, Some(B), half());
        assert_eq!(s.split(), (499, 500));
        l.apply_verdict(&s).unwrap();
        assert_eq!(l.balance(B), 499);
        assert_eq!(l.burned(), 500);
        l.check_conservation().unwrap();
    }

    #[test]
    fn full_reward_share_burns_nothing() {
        let mut l = BondLedger::new([(A, 10), (B, 0)]).unwrap();
        l.post_bond(A, 10, BondPurpose::OperatorBond).unwrap();
        l.apply_verdict(&SlashEvent::new(A, 10, SlashReason::FraudProven, Some(B), Ratio::ONE))
            .unwrap();
        assert_eq!((l.balance(B), l.burned()), (10, 0));
    }

    #[test]
    fn over_slash_rejected() {
        let mut l = BondLedger::new([(A, 10)]).unwrap();
        l.post_bond(A, 10, BondPurpose::OperatorBond).unwrap();
        let s = SlashEvent::new(A, 11, SlashReason::FraudProven, None, Ratio::ZERO);
        assert!(matches!(l.apply_verdict(&s), Err(LedgerError::InsufficientEscrow { .. })));
        // wrong purpose: the operator bond is not a dispute bond
        let s = SlashEvent::new(A, 1, SlashReason::FalseChallenge, None, Ratio::ZERO);
        assert!(l.apply_verdict(&s).is_err());
        l.check_conservation().unwrap();
    }

    #[test]
    fn malformed_split_rejected() {
        let mut l = BondLedger::new([(A, 10), (B, 0)]).unwrap();
        l.post_bond(A, 10, BondPurpose::OperatorBond).unwrap();
        let mut s = SlashEvent::new(A, 10, SlashReason::FraudProven, Some(B), half());
        s.burn_share = Ratio::ONE;
        assert!(matches!(l.apply_verdict(&s), Err(LedgerError::InvalidSplit { .. })));
    }

    #[test]
    fn release_and_transfer() {
        let mut l = BondLedger::new([(A, 100), (B, 5)]).unwrap();
        l.post_bond(A, 60, BondPurpose::DisputeBond).unwrap();
        l.release_bond(A, 60, BondPurpose::DisputeBond).unwrap();
        assert!(l.release_bond(A, 1, BondPurpose::DisputeBond).is_err());
        l.transfer(A, B, 100).unwrap();
        assert!(l.transfer(A, B, 1).is_err());
        assert_eq!(l.balance(B), 105);
        l.check_conservation().unwrap();
    }

    #[test]
    fn duplicate_initial_party() {
        assert_eq!(
            BondLedger::new([(A, 1), (A, 2)]),
            Err(LedgerError::DuplicateParty(A))
        );
    }
}
