mod common;

use common::*;
use dfp_core::protocol::{CommitmentStatus, TraceKind};
use dfp_core::sim::{run_scenario, window_history, NodePolicy, Role, SimError};

#[test]
fn honest_baseline_finalizes_at_t0() {
    let run = run_scenario(&honest_baseline(1)).unwrap();
    let r = &run.report;
    assert_eq!(r.submitted, 20);
    assert_eq!(r.finalized, 20);
    assert_eq!(r.latency.p50_ms, Some(500));
    assert_eq!(r.latency.max_ms, Some(500));
    assert_eq!(r.step_histogram.get(&0), Some(&20));
    assert!(r.is_consistent());
}

#[test]
fn same_seed_same_trace() {
    let a = run_scenario(&random_safety(9)).unwrap();
    let b = run_scenario(&random_safety(9)).unwrap();
    assert_eq!(a.trace.to_jsonl(), b.trace.to_jsonl());
    assert_eq!(a.report, b.report);
    let c = run_scenario(&random_safety(10)).unwrap();
    assert_ne!(a.report.trace_sha256, c.report.trace_sha256);
}

#[test]
fn fraud_is_caught_with_one_honest_challenger() {
    for seed in 0..20 {
        let run = run_scenario(&random_safety(seed)).unwrap();
        assert_eq!(run.report.fraud_finalized, 0, "seed {seed}");
    }
}

#[test]
fn fraud_finalizes_without_verifiers() {
    // nobody checks, c0 = 0: every forged bundle settles at the first deadline
    let mut c = base(
        3,
        vec![entry(
            1,
            Role::Operator,
            NodePolicy::FraudulentOperator {
                p_fraud_attempt: 1.0,
                p_withhold_da: 0.0,
                deterrence: 0.0,
            },
            0,
        )],
    );
    c.schedule.c0 = 0;
    let run = run_scenario(&c).unwrap();
    assert!(run.report.fraud_finalized > 0);
    assert_eq!(run.report.fraud_finalized, run.report.finalized);
}

#[test]
fn censored_sign_offs_delay_by_k_steps() {
    let run = run_scenario(&censored(4, 3)).unwrap();
    assert!(run.report.finalized > 0);
    for rec in &run.commitments {
        if rec.status == CommitmentStatus::Finalized {
            assert_eq!(rec.final_step, 3);
            assert_eq!(rec.latency_ms, Some(500 + 2_000 + 8_000 + 32_000));
        }
    }
    let (windows, settled) = window_history(run.trace.records(), run.commitments[0].id);
    assert_eq!(windows.iter().map(|w| w.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert_eq!(settled, Some(windows[3].1 + 32_000));
}

#[test]
fn probes_slash_lazy_signers_only() {
    let run = run_scenario(&probing(5)).unwrap();
    assert!(!run.probes.is_empty());
    for p in &run.probes {
        assert_eq!(p.slashed, p.signers);
        assert!(p.challengers.iter().all(|c| !p.signers.contains(c)));
    }
    assert!(run
        .trace
        .records()
        .iter()
        .any(|r| r.kind == TraceKind::ProbeAssessed));
}

#[test]
fn invalid_config_is_rejected() {
    let mut c = honest_baseline(1);
    c.population.retain(|e| e.role != Role::Operator);
    assert!(matches!(run_scenario(&c), Err(SimError::Config(_))));
}
