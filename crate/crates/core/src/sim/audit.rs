//! Offline checks over a recorded trace.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ids::{CommitmentId, NodeId};
use crate::protocol::{CommitmentStatus, TraceKind, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditViolation {
    pub seq: u64,
    pub detail: String,
}

#[derive(Default)]
struct Tracked {
    status: Option<CommitmentStatus>,
    probe: bool,
    signers: BTreeSet<NodeId>,
    open_challenges: u64,
    last_step: u32,
}

/// Replays `records` and reports every broken rule:
/// - sequence numbers are contiguous and time never goes backwards;
/// - status changes follow the commitment state graph and nothing happens to
///   a settled commitment;
/// - a finalization has at least `required` distinct sign-off records before
///   it and no unresolved challenge;
/// - window steps never decrease.
pub fn audit_trace(records: &[TraceRecord]) -> Vec<AuditViolation> {
    let mut out = Vec::new();
    let mut tracked: BTreeMap<CommitmentId, Tracked> = BTreeMap::new();
    let mut last_at = 0u64;
    for (i, r) in records.iter().enumerate() {
        let mut fail = |detail: String| out.push(AuditViolation { seq: r.seq, detail });
        if r.seq != i as u64 {
            fail(format!("expected sequence {i}, found {}", r.seq));
        }
        if r.at_ms < last_at {
            fail(format!("time went back from {last_at} to {}", r.at_ms));
        }
        last_at = r.at_ms;
        let Some(cid) = r.commitment else { continue };
        let opening = matches!(r.kind, TraceKind::Submitted | TraceKind::ProbeIssued);
        if opening && tracked.contains_key(&cid) {
            fail(format!("commitment {cid} opened twice"));
            continue;
        }
        let t = tracked.entry(cid).or_default();
        if opening {
            t.probe = r.kind == TraceKind::ProbeIssued;
        } else if t.status.is_none() {
            fail(format!("commitment {cid} has {:?} before being opened", r.kind));
        }
        let settled = t.status.is_some_and(|s| !s.is_open());
        if settled && r.kind != TraceKind::ProbeAssessed {
            fail(format!("commitment {cid} has {:?} after settling", r.kind));
        }
        if let (Some(prev), Some(next)) = (t.status, r.status) {
            if !settled && !prev.can_transition_to(next) {
                fail(format!("commitment {cid} moved {prev:?} -> {next:?}"));
            }
        }
        if let Some(step) = r.step {
            if step < t.last_step {
                fail(format!("commitment {cid} step fell from {} to {step}", t.last_step));
            }
            t.last_step = step;
        }
        match r.kind {
            TraceKind::SignedOff => {
                if let Some(node) = r.node {
                    t.signers.insert(node);
                }
            }
            TraceKind::ChallengeRaised if !t.probe => t.open_challenges += 1,
            TraceKind::DisputeResolved => t.open_challenges = t.open_challenges.saturating_sub(1),
            TraceKind::Finalized => {
                let required = r.required.unwrap_or(u64::MAX);
                let count = r.sign_offs.unwrap_or(0);
                if count < required {
                    fail(format!("commitment {cid} finalized with {count} of {required} sign-offs"));
                }
                if (t.signers.len() as u64) < required {
                    fail(format!(
                        "commitment {cid} finalized after only {} sign-off records, {required} required",
                        t.signers.len()
                    ));
                }
                if t.open_challenges > 0 {
                    fail(format!("commitment {cid} finalized with an unresolved challenge"));
                }
                if t.probe {
                    fail(format!("probe commitment {cid} finalized"));
                }
            }
            _ => {}
        }
        if r.status.is_some() {
            t.status = r.status;
        }
    }
    out
}

/// `(step, opened_at)` for each window a commitment went through, followed
/// by the settlement time if it settled.
pub fn window_history(records: &[TraceRecord], commitment: CommitmentId) -> (Vec<(u32, u64)>, Option<u64>) {
    let mut windows = Vec::new();
    let mut settled = None;
    for r in records.iter().filter(|r| r.commitment == Some(commitment)) {
        match r.kind {
            TraceKind::Submitted | TraceKind::ProbeIssued | TraceKind::Extended => {
                windows.push((r.step.unwrap_or(0), r.at_ms));
            }
            TraceKind::Finalized | TraceKind::Reverted | TraceKind::ProbeClosed => settled = Some(r.at_ms),
            TraceKind::DisputeResolved if r.status == Some(CommitmentStatus::Reverted) => settled = Some(r.at_ms),
            _ => {}
        }
    }
    (windows, settled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Trace, TraceEntry};

    fn entry(c: u64, status: CommitmentStatus, sign_offs: u64, required: u64, node: Option<u32>) -> TraceEntry {
        TraceEntry {
            commitment: Some(CommitmentId(c)),
            step: Some(0),
            sign_offs: Some(sign_offs),
            required: Some(required),
            status: Some(status),
            node: node.map(NodeId),
        }
    }

    #[test]
    fn clean_trace_passes() {
        use CommitmentStatus::*;
        let mut t = Trace::default();
        t.push(0, TraceKind::Submitted, entry(0, Pending, 0, 2, Some(9)));
        t.push(10, TraceKind::SignedOff, entry(0, Pending, 1, 2, Some(1)));
        t.push(20, TraceKind::SignedOff, entry(0, Pending, 2, 2, Some(2)));
        t.push(500, TraceKind::Finalized, entry(0, Finalized, 2, 2, None));
        assert!(audit_trace(t.records()).is_empty());
    }

    #[test]
    fn finalization_without_sign_offs_flagged() {
        use CommitmentStatus::*;
        let mut t = Trace::default();
        t.push(0, TraceKind::Submitted, entry(0, Pending, 0, 2, Some(9)));
        t.push(10, TraceKind::SignedOff, entry(0, Pending, 1, 2, Some(1)));
        t.push(500, TraceKind::Finalized, entry(0, Finalized, 2, 2, None));
        let v = audit_trace(t.records());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].seq, 2);
    }

    #[test]
    fn finalization_while_disputed_flagged() {
        use CommitmentStatus::*;
        let mut t = Trace::default();
        t.push(0, TraceKind::Submitted, entry(0, Pending, 0, 0, Some(9)));
        t.push(5, TraceKind::ChallengeRaised, entry(0, Disputed, 0, 0, Some(3)));
        t.push(500, TraceKind::Finalized, entry(0, Finalized, 0, 0, None));
        let v = audit_trace(t.records());
        assert!(v.iter().any(|v| v.detail.contains("unresolved")), "{v:?}");
        assert!(v.iter().any(|v| v.detail.contains("Disputed -> Finalized")), "{v:?}");
    }

    #[test]
    fn activity_after_settlement_flagged() {
        use CommitmentStatus::*;
        let mut t = Trace::default();
        t.push(0, TraceKind::Submitted, entry(0, Pending, 0, 0, Some(9)));
        t.push(500, TraceKind::Finalized, entry(0, Finalized, 0, 0, None));
        t.push(600, TraceKind::SignedOff, entry(0, Finalized, 1, 0, Some(1)));
        assert_eq!(audit_trace(t.records()).len(), 1);
    }

    #[test]
    fn history_lists_windows() {
        use CommitmentStatus::*;
        let mut t = Trace::default();
        t.push(0, TraceKind::Submitted, entry(0, Pending, 0, 2, Some(9)));
        let mut e = entry(0, Pending, 0, 1, None);
        e.step = Some(1);
        t.push(500, TraceKind::Extended, e.clone());
        t.push(2500, TraceKind::Finalized, TraceEntry { status: Some(Finalized), ..e });
        let (w, s) = window_history(t.records(), CommitmentId(0));
        assert_eq!(w, vec![(0, 0), (1, 500)]);
        assert_eq!(s, Some(2500));
    }
}
