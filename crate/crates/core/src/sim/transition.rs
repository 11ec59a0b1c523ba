//! Deterministic stand-in for ephemeral-session execution.
//!
//! A transaction is a byte patch on one account. Account data is laid out as
//! an 8-byte running checksum followed by a body; replaying a transaction
//! writes the patch into the body and folds it into the checksum. Verifiers
//! replay the transactions from the data-availability record over the
//! pre-state and compare the result with the committed diff.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ids::{AccountId, DaPointer};
use crate::protocol::{AccountDiff, AccountState};

pub const CHECKSUM_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BytePatch {
    pub account: AccountId,
    pub offset: u32,
    pub bytes: Vec<u8>,
}

/// Ordered transactions executed in a session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaRecord {
    pub transactions: Vec<BytePatch>,
}

#[derive(Debug, Clone, Default)]
pub struct DaStore {
    records: BTreeMap<DaPointer, DaRecord>,
    next: u64,
}

impl DaStore {
    pub fn put(&mut self, record: DaRecord) -> DaPointer {
        let ptr = self.reserve();
        self.records.insert(ptr, record);
        ptr
    }

    /// Allocates a pointer without publishing anything behind it.
    pub fn reserve(&mut self) -> DaPointer {
        let ptr = DaPointer(self.next);
        self.next += 1;
        ptr
    }

    pub fn get(&self, ptr: DaPointer) -> Option<&DaRecord> {
        self.records.get(&ptr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("transaction touches account {0} outside the pre-state")]
    UnknownAccount(AccountId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    Valid,
    Invalid,
    DataUnavailable,
}

impl Verification {
    pub fn is_challenge_worthy(self) -> bool {
        !matches!(self, Verification::Valid)
    }
}

fn fold_checksum(prev: &[u8], index: u32, patch: &BytePatch) -> [u8; CHECKSUM_LEN] {
    let mut h = Sha256::new();
    h.update(prev);
    h.update(index.to_be_bytes());
    h.update(patch.offset.to_be_bytes());
    h.update(&patch.bytes);
    let digest = h.finalize();
    let mut out = [0u8; CHECKSUM_LEN];
    out.copy_from_slice(&digest[..CHECKSUM_LEN]);
    out
}

/// Replays `txs` over `pre` and returns one diff per pre-state account, in
/// pre-state order.
pub fn replay(pre: &[AccountState], txs: &[BytePatch]) -> Result<Vec<AccountDiff>, ReplayError> {
    let mut data: Vec<Vec<u8>> = pre
        .iter()
        .map(|a| {
            let mut d = a.data.clone();
            if d.len() < CHECKSUM_LEN {
                d.resize(CHECKSUM_LEN, 0);
            }
            d
        })
        .collect();
    for (i, tx) in txs.iter().enumerate() {
        let slot = pre
            .iter()
            .position(|a| a.account == tx.account)
            .ok_or(ReplayError::UnknownAccount(tx.account))?;
        let d = &mut data[slot];
        let start = CHECKSUM_LEN + tx.offset as usize;
        let end = start + tx.bytes.len();
        if d.len() < end {
            d.resize(end, 0);
        }
        d[start..end].copy_from_slice(&tx.bytes);
        let sum = fold_checksum(&d[..CHECKSUM_LEN], i as u32, tx);
        d[..CHECKSUM_LEN].copy_from_slice(&sum);
    }
    Ok(pre
        .iter()
        .zip(data)
        .map(|(a, data)| AccountDiff {
            account: a.account,
            data,
            new_version: a.version + 1,
        })
        .collect())
}

/// Checks a committed bundle against a replay of its DA record.
pub fn verify_diff(pre: &[AccountState], diffs: &[AccountDiff], da: Option<&DaRecord>) -> Verification {
    let Some(record) = da else {
        return Verification::DataUnavailable;
    };
    match replay(pre, &record.transactions) {
        Ok(expected) if expected == diffs => Verification::Valid,
        _ => Verification::Invalid,
    }
}

/// Random patches spread over `accounts`.
pub fn random_transactions<R: Rng + ?Sized>(rng: &mut R, accounts: &[AccountId], count: usize) -> Vec<BytePatch> {
    (0..count)
        .map(|_| {
            let account = accounts[rng.random_range(0..accounts.len())];
            let len = rng.random_range(1..=8usize);
            BytePatch {
                account,
                offset: rng.random_range(0..24u32),
                bytes: (0..len).map(|_| rng.random()).collect(),
            }
        })
        .collect()
}

/// Flips one bit of one byte somewhere in the bundle.
pub fn corrupt<R: Rng + ?Sized>(rng: &mut R, diffs: &mut [AccountDiff]) {
    let d = &mut diffs[rng.random_range(0..diffs.len())];
    let i = rng.random_range(0..d.data.len());
    d.data[i] ^= 1 << rng.random_range(0..8u32);
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn pre(n: u64) -> Vec<AccountState> {
        (0..n)
            .map(|i| AccountState {
                account: AccountId::derived(0, i),
                data: vec![0; 16],
                version: i,
                delegated: true,
            })
            .collect()
    }

    #[test]
    fn replayed_diff_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pre = pre(3);
        let ids: Vec<_> = pre.iter().map(|a| a.account).collect();
        let txs = random_transactions(&mut rng, &ids, 6);
        let diffs = replay(&pre, &txs).unwrap();
        assert_eq!(diffs.len(), 3);
        assert_eq!(diffs[2].new_version, 3);
        let da = DaRecord { transactions: txs };
        assert_eq!(verify_diff(&pre, &diffs, Some(&da)), Verification::Valid);
    }

    #[test]
    fn flipped_byte_is_invalid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pre = pre(2);
        let ids: Vec<_> = pre.iter().map(|a| a.account).collect();
        let txs = random_transactions(&mut rng, &ids, 4);
        let mut diffs = replay(&pre, &txs).unwrap();
        diffs[1].data[3] ^= 0x01;
        let da = DaRecord { transactions: txs };
        assert_eq!(verify_diff(&pre, &diffs, Some(&da)), Verification::Invalid);
    }

    #[test]
    fn missing_da_is_unavailable() {
        let pre = pre(1);
        let diffs = replay(&pre, &[]).unwrap();
        assert_eq!(verify_diff(&pre, &diffs, None), Verification::DataUnavailable);
        assert!(Verification::DataUnavailable.is_challenge_worthy());
    }

    #[test]
    fn checksum_depends_on_order() {
        let pre = pre(1);
        let a = pre[0].account;
        let t1 = BytePatch { account: a, offset: 0, bytes: vec![1] };
        let t2 = BytePatch { account: a, offset: 1, bytes: vec![2] };
        let d12 = replay(&pre, &[t1.clone(), t2.clone()]).unwrap();
        let d21 = replay(&pre, &[t2, t1]).unwrap();
        // same body, different running checksum
        assert_eq!(d12[0].data[CHECKSUM_LEN..], d21[0].data[CHECKSUM_LEN..]);
        assert_ne!(d12, d21);
    }

    #[test]
    fn foreign_account_fails_replay() {
        let pre = pre(1);
        let tx = BytePatch { account: AccountId::derived(9, 9), offset: 0, bytes: vec![1] };
        assert!(replay(&pre, std::slice::from_ref(&tx)).is_err());
        let diffs = replay(&pre, &[]).unwrap();
        assert_eq!(
            verify_diff(&pre, &diffs, Some(&DaRecord { transactions: vec![tx] })),
            Verification::Invalid
        );
    }
}
