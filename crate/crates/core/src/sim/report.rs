use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::economics::LedgerSnapshot;
use crate::ids::{CommitmentId, NodeId, ProbeId};
use crate::protocol::CommitmentStatus;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: u64,
    pub p50_ms: Option<u64>,
    pub p90_ms: Option<u64>,
    pub max_ms: Option<u64>,
}

impl LatencySummary {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[u64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let rank = |q: u64| -> Option<u64> {
            if sorted.is_empty() {
                return None;
            }
            let n = sorted.len() as u64;
            let idx = (q * n).div_ceil(100).max(1) - 1;
            Some(sorted[idx as usize])
        };
        Self {
            count: sorted.len() as u64,
            p50_ms: rank(50),
            p90_ms: rank(90),
            max_ms: sorted.last().copied(),
        }
    }
}

/// Aggregate outcome of one scenario run. Probes are counted separately from
/// operator commitments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub seed: u64,
    pub duration_ms: u64,
    pub submitted: u64,
    pub finalized: u64,
    pub reverted: u64,
    pub pending: u64,
    pub skipped_busy: u64,
    pub skipped_expired: u64,
    pub fraud_attempted: u64,
    pub fraud_finalized: u64,
    pub fraud_caught: u64,
    pub challenged_commitments: u64,
    pub challenges_raised: u64,
    pub challenges_upheld: u64,
    pub challenges_rejected: u64,
    pub actions_rejected: u64,
    pub suppressed_sign_offs: u64,
    pub suppressed_challenges: u64,
    pub probes_issued: u64,
    pub probes_assessed: u64,
    pub probe_slashes: u64,
    pub probe_slashed_amount: u64,
    pub latency: LatencySummary,
    pub step_histogram: BTreeMap<u32, u64>,
    pub ledger: LedgerSnapshot,
    pub trace_records: u64,
    pub trace_sha256: String,
}

impl SimReport {
    pub fn is_consistent(&self) -> bool {
        self.submitted == self.finalized + self.reverted + self.pending
            && self.fraud_finalized <= self.fraud_attempted
            && self.step_histogram.values().sum::<u64>() == self.finalized
            && self.latency.count == self.finalized
    }
}

/// Per-commitment outcome row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommitmentRecord {
    pub id: CommitmentId,
    pub operator: NodeId,
    pub submitted_at_ms: u64,
    pub status: CommitmentStatus,
    pub settled_at_ms: Option<u64>,
    pub latency_ms: Option<u64>,
    pub final_step: u32,
    pub sign_offs: u64,
    pub fraudulent: bool,
    pub da_withheld: bool,
    pub challenged: bool,
}

/// Who did what with one probe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeRecord {
    pub probe: ProbeId,
    pub commitment: CommitmentId,
    pub targets: Vec<NodeId>,
    pub signers: Vec<NodeId>,
    pub challengers: Vec<NodeId>,
    pub slashed: Vec<NodeId>,
}
