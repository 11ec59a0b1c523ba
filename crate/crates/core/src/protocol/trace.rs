//! Append-only transition log, serialised as JSON lines.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ids::{CommitmentId, NodeId};
use crate::protocol::CommitmentStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Delegated,
    Undelegated,
    Submitted,
    ProbeIssued,
    SignedOff,
    ChallengeRaised,
    DisputeResolved,
    Extended,
    Blocked,
    Finalized,
    Reverted,
    ProbeClosed,
    ProbeAssessed,
    Suppressed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seq: u64,
    pub at_ms: u64,
    pub kind: TraceKind,
    pub commitment: Option<CommitmentId>,
    pub step: Option<u32>,
    pub sign_offs: Option<u64>,
    pub required: Option<u64>,
    pub status: Option<CommitmentStatus>,
    pub node: Option<NodeId>,
}

/// Fields of a record before it is sequenced.
#[derive(Debug, Clone, Default)]
pub struct TraceEntry {
    pub commitment: Option<CommitmentId>,
    pub step: Option<u32>,
    pub sign_offs: Option<u64>,
    pub required: Option<u64>,
    pub status: Option<CommitmentStatus>,
    pub node: Option<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, at_ms: u64, kind: TraceKind, entry: TraceEntry) -> u64 {
        let seq = self.records.len() as u64;
        self.records.push(TraceRecord {
            seq,
            at_ms,
            kind,
            commitment: entry.commitment,
            step: entry.step,
            sign_offs: entry.sign_offs,
            required: entry.required,
            status: entry.status,
            node: entry.node,
        });
        seq
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 160);
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialise"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { records })
    }

    /// Hex SHA-256 of the JSON-lines encoding.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}
