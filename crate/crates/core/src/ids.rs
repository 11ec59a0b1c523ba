//! Identifier newtypes shared across the protocol, ledger and simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque 32-byte account identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AccountId(pub [u8; 32]);

impl AccountId {
    /// Builds an id whose trailing eight bytes hold `n` (big-endian) and whose
    /// leading bytes hold `namespace`. Convenient for deterministic fixtures.
    pub fn derived(namespace: u32, n: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[..4].copy_from_slice(&namespace.to_be_bytes());
        bytes[24..].copy_from_slice(&n.to_be_bytes());
        Self(bytes)
    }
}

impl fmt::Debug for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AccountId({})", self)
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Short form: first and last four bytes.
        write!(
            f,
            "{}..{}",
            hex::encode(&self.0[..4]),
            hex::encode(&self.0[28..])
        )
    }
}

macro_rules! numeric_id {
    ($(#[$meta:meta])* $name:ident, $inner:ty, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

numeric_id!(
    /// A participant: operator, challenger, observer or the protocol treasury.
    NodeId,
    u32,
    "n"
);
numeric_id!(CommitmentId, u64, "c");
numeric_id!(ChallengeId, u64, "ch");
numeric_id!(DelegationId, u64, "d");
numeric_id!(ProbeId, u64, "p");
numeric_id!(
    /// Reference into the data-availability store.
    DaPointer,
    u64,
    "da"
);

impl NodeId {
    /// Reserved identity that funds probe rewards and issues decoy commitments.
    pub const TREASURY: NodeId = NodeId(u32::MAX);
}
