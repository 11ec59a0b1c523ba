//! Scenario builders shared by the integration suites.
#![allow(dead_code)]

use dfp_core::sim::{
    BondConfig, DetectionConfig, NodePolicy, PopulationEntry, Role, ScenarioConfig, SuppressTarget,
};
use dfp_core::{FinalitySchedule, Ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn entry(count: u32, role: Role, policy: NodePolicy, balance: u64) -> PopulationEntry {
    PopulationEntry {
        count,
        role,
        policy,
        balance,
    }
}

pub fn honest_operator(count: u32) -> PopulationEntry {
    entry(count, Role::Operator, NodePolicy::HonestOperator, 10_000)
}

pub fn honest_challengers(count: u32, p_online: f64) -> PopulationEntry {
    entry(count, Role::Challenger, NodePolicy::HonestChallenger { p_online }, 10_000)
}

pub fn base(seed: u64, population: Vec<PopulationEntry>) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        duration_ms: 20_000,
        submit_until_ms: None,
        commitment_cadence_ms: 1_000,
        dispute_latency_ms: 200,
        verification_latency_ms: 0,
        probe_rate: 0.0,
        probe_targets: None,
        bundle_size: 1,
        accounts_per_operator: 4,
        transactions_per_commitment: 4,
        delegation_lifetime_ms: None,
        schedule: FinalitySchedule::default(),
        bonds: BondConfig::default(),
        detection: DetectionConfig::default(),
        population,
    }
}

/// One honest operator and 100 always-online honest challengers under the
/// default schedule; submissions stop early enough for everything to settle.
pub fn honest_baseline(seed: u64) -> ScenarioConfig {
    let mut c = base(seed, vec![honest_operator(1), honest_challengers(100, 1.0)]);
    c.submit_until_ms = Some(c.duration_ms - c.schedule.t0_ms);
    c
}

/// Randomized all-honest scenario with a pool at least as large as c0.
pub fn random_honest(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = rng.random_range(1..=60u64);
    let t0 = rng.random_range(100..=1_000u64);
    let pool = c0 as u32 + rng.random_range(0..=40u32);
    let operators = rng.random_range(1..=3u32);
    let mut c = base(seed, vec![honest_operator(operators), honest_challengers(pool, 1.0)]);
    c.schedule = FinalitySchedule::new(t0, Ratio::integer(4), c0, Ratio::new(7, 10).unwrap(), 10).unwrap();
    c.commitment_cadence_ms = rng.random_range(t0 / 2..=3 * t0);
    c.bundle_size = rng.random_range(1..=3);
    c.accounts_per_operator = c.bundle_size + rng.random_range(0..=3);
    c.verification_latency_ms = rng.random_range(0..=t0 / 2);
    c.duration_ms = 30 * t0;
    c.submit_until_ms = Some(c.duration_ms - t0);
    c
}

/// Randomized scenario with a fraudulent operator, at least one always-online
/// honest challenger, assorted lazy and flaky challengers, and a censor that
/// only suppresses sign-offs.
pub fn random_safety(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = rng.random_range(0..=8u64);
    let t0 = rng.random_range(50..=500u64);
    let always_on = rng.random_range(1..=3u32);
    let flaky = rng.random_range(0..=5u32);
    let lazy = rng.random_range(0..=5u32);
    let pool = (always_on + flaky + lazy).max(c0 as u32);
    let mut population = vec![
        entry(
            rng.random_range(1..=2),
            Role::Operator,
            NodePolicy::FraudulentOperator {
                p_fraud_attempt: rng.random_range(0.1..=1.0),
                p_withhold_da: rng.random_range(0.0..=0.3),
                deterrence: 0.0,
            },
            10_000,
        ),
        honest_challengers(always_on, 1.0),
    ];
    if flaky > 0 {
        population.push(honest_challengers(flaky, rng.random_range(0.0..=1.0)));
    }
    if lazy > 0 {
        population.push(entry(
            lazy,
            Role::Challenger,
            NodePolicy::LazyChallenger {
                p_verify: rng.random_range(0.0..=1.0),
            },
            10_000,
        ));
    }
    let filler = pool - (always_on + flaky + lazy);
    if filler > 0 {
        population.push(honest_challengers(filler, rng.random_range(0.0..=1.0)));
    }
    if rng.random_bool(0.5) {
        population.push(entry(
            1,
            Role::Observer,
            NodePolicy::CensoringAdversary {
                p_suppress: rng.random_range(0.0..=1.0),
                budget: rng.random_range(0..=50),
                target: SuppressTarget::SignOffs,
                until_step: None,
            },
            0,
        ));
    }
    let mut c = base(seed, population);
    c.schedule = FinalitySchedule::new(t0, Ratio::integer(2), c0, Ratio::new(1, 2).unwrap(), 4).unwrap();
    c.commitment_cadence_ms = rng.random_range(t0 / 2..=2 * t0);
    c.dispute_latency_ms = rng.random_range(0..=2 * t0);
    c.verification_latency_ms = rng.random_range(0..t0);
    c.duration_ms = 40 * t0;
    c.bundle_size = rng.random_range(1..=2);
    c.accounts_per_operator = 3;
    c.bonds.operator_bond = 1_000;
    c.bonds.operator_slash = rng.random_range(0..=1_000);
    c
}

/// All-honest population with a censor that suppresses every sign-off while
/// the window step is below `k`.
pub fn censored(seed: u64, k: u32) -> ScenarioConfig {
    let mut c = base(
        seed,
        vec![
            honest_operator(1),
            honest_challengers(100, 1.0),
            entry(
                1,
                Role::Observer,
                NodePolicy::CensoringAdversary {
                    p_suppress: 1.0,
                    budget: u64::MAX,
                    target: SuppressTarget::SignOffs,
                    until_step: Some(k),
                },
                0,
            ),
        ],
    );
    c.commitment_cadence_ms = 5_000;
    c.duration_ms = 200_000;
    c.submit_until_ms = Some(100_000);
    c
}

/// Pool of honest verifiers and lazy signers with probing enabled.
pub fn probing(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let honest = rng.random_range(1..=10u32);
    let lazy = rng.random_range(1..=10u32);
    let mut c = base(
        seed,
        vec![
            honest_operator(1),
            honest_challengers(honest, 1.0),
            entry(lazy, Role::Challenger, NodePolicy::LazyChallenger { p_verify: 0.0 }, 10_000),
        ],
    );
    let c0 = rng.random_range(1..=honest + lazy) as u64;
    c.schedule = FinalitySchedule::new(500, Ratio::integer(4), c0, Ratio::new(7, 10).unwrap(), 10).unwrap();
    c.probe_rate = rng.random_range(0.2..=1.5);
    c.probe_targets = Some(rng.random_range(1..=(honest + lazy) as u64));
    c.bonds = BondConfig {
        challenger_stake: 5_000,
        probe_slash: 50,
        probe_reward: 5,
        treasury_balance: 100_000,
        ..BondConfig::default()
    };
    c
}
