//! Node behaviour models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::protocol::{AccountDiff, AccountState};
use crate::sim::transition::{DaRecord, Verification};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Operator,
    /// Member of the challenger pool; can be sampled to sign off.
    Challenger,
    /// Outside the pool; may still challenge.
    Observer,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressTarget {
    #[default]
    SignOffs,
    Challenges,
    All,
}

impl SuppressTarget {
    pub fn covers(self, action: Action) -> bool {
        matches!(
            (self, action),
            (SuppressTarget::All, _)
                | (SuppressTarget::SignOffs, Action::SignOff)
                | (SuppressTarget::Challenges, Action::Challenge)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodePolicy {
    HonestOperator,
    FraudulentOperator {
        /// Chance that a commitment is forged, before deterrence.
        p_fraud_attempt: f64,
        /// Chance that the DA record of a commitment is withheld.
        #[serde(default)]
        p_withhold_da: f64,
        /// Sensitivity of the fraud rate to stake at risk; 0 disables it.
        #[serde(default)]
        deterrence: f64,
    },
    HonestChallenger {
        p_online: f64,
    },
    LazyChallenger {
        /// Chance of actually verifying; otherwise signs blindly.
        p_verify: f64,
    },
    CensoringAdversary {
        p_suppress: f64,
        /// Number of events it can suppress in total.
        budget: u64,
        #[serde(default)]
        target: SuppressTarget,
        /// Only suppress while the window step is below this value.
        #[serde(default)]
        until_step: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    SignOff,
    Challenge,
    Abstain,
}

/// What a node sees when a commitment (or probe) reaches it.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub pre_state: &'a [AccountState],
    pub diffs: &'a [AccountDiff],
    pub da: Option<&'a DaRecord>,
}

/// Fraud probability after deterrence: `p / (1 + deterrence * stake_at_risk)`,
/// non-increasing in the stake the operator would lose.
pub fn fraud_probability(p_fraud_attempt: f64, deterrence: f64, stake_at_risk: u64) -> f64 {
    p_fraud_attempt / (1.0 + deterrence * stake_at_risk as f64)
}

impl NodePolicy {
    pub fn is_operator(&self) -> bool {
        matches!(self, NodePolicy::HonestOperator | NodePolicy::FraudulentOperator { .. })
    }

    pub fn is_verifier(&self) -> bool {
        matches!(self, NodePolicy::HonestChallenger { .. } | NodePolicy::LazyChallenger { .. })
    }

    pub fn is_censor(&self) -> bool {
        matches!(self, NodePolicy::CensoringAdversary { .. })
    }

    /// Per-commitment fraud probability for an operator with `stake_at_risk`
    /// lamports exposed to slashing.
    pub fn fraud_rate(&self, stake_at_risk: u64) -> f64 {
        match *self {
            NodePolicy::FraudulentOperator {
                p_fraud_attempt,
                deterrence,
                ..
            } => fraud_probability(p_fraud_attempt, deterrence, stake_at_risk),
            _ => 0.0,
        }
    }

    /// Returns the name of the first parameter outside its domain.
    pub fn invalid_parameter(&self) -> Option<&'static str> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        match *self {
            NodePolicy::HonestOperator => None,
            NodePolicy::FraudulentOperator {
                p_fraud_attempt,
                p_withhold_da,
                deterrence,
            } => {
                if !unit(p_fraud_attempt) {
                    Some("p_fraud_attempt")
                } else if !unit(p_withhold_da) {
                    Some("p_withhold_da")
                } else if !(deterrence.is_finite() && deterrence >= 0.0) {
                    Some("deterrence")
                } else {
                    None
                }
            }
            NodePolicy::HonestChallenger { p_online } => (!unit(p_online)).then_some("p_online"),
            NodePolicy::LazyChallenger { p_verify } => (!unit(p_verify)).then_some("p_verify"),
            NodePolicy::CensoringAdversary { p_suppress, .. } => (!unit(p_suppress)).then_some("p_suppress"),
        }
    }
}

fn verified_action(verdict: Verification) -> Action {
    if verdict.is_challenge_worthy() {
        Action::Challenge
    } else {
        Action::SignOff
    }
}

/// A node's reaction to an observation. Honest challengers verify when
/// online; lazy challengers verify with probability `p_verify` and otherwise
/// sign without looking. Other policies never act on commitments.
pub fn decide_action<R: Rng + ?Sized>(
    policy: &NodePolicy,
    observation: &Observation<'_>,
    oracle: &dyn Fn(&Observation<'_>) -> Verification,
    rng: &mut R,
) -> Action {
    match *policy {
        NodePolicy::HonestChallenger { p_online } => {
            if rng.random::<f64>() < p_online {
                verified_action(oracle(observation))
            } else {
                Action::Abstain
            }
        }
        NodePolicy::LazyChallenger { p_verify } => {
            if rng.random::<f64>() < p_verify {
                verified_action(oracle(observation))
            } else {
                Action::SignOff
            }
        }
        _ => Action::Abstain,
    }
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ids::AccountId;
    use crate::sim::transition::{replay, verify_diff, BytePatch};

    struct Fixture {
        pre: Vec<AccountState>,
        good: Vec<AccountDiff>,
        bad: Vec<AccountDiff>,
        da: DaRecord,
    }

    fn fixture() -> Fixture {
        let account = AccountId::derived(1, 1);
        let pre = vec![AccountState {
            account,
            data: vec![0; 16],
            version: 0,
            delegated: true,
        }];
        let da = DaRecord {
            transactions: vec![BytePatch {
                account,
                offset: 2,
                bytes: vec![7, 7],
            }],
        };
        let good = replay(&pre, &da.transactions).unwrap();
        let mut bad = good.clone();
        bad[0].data[9] ^= 0x80;
        Fixture { pre, good, bad, da }
    }

    fn oracle(o: &Observation<'_>) -> Verification {
        verify_diff(o.pre_state, o.diffs, o.da)
    }

    #[test]
    fn honest_challenges_invalid_diff() {
        let f = fixture();
        let obs = Observation { pre_state: &f.pre, diffs: &f.bad, da: Some(&f.da) };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = NodePolicy::HonestChallenger { p_online: 1.0 };
        assert_eq!(decide_action(&p, &obs, &oracle, &mut rng), Action::Challenge);
        let obs = Observation { diffs: &f.good, ..obs };
        assert_eq!(decide_action(&p, &obs, &oracle, &mut rng), Action::SignOff);
    }

    #[test]
    fn honest_challenges_missing_da() {
        let f = fixture();
        let obs = Observation { pre_state: &f.pre, diffs: &f.good, da: None };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = NodePolicy::HonestChallenger { p_online: 1.0 };
        assert_eq!(decide_action(&p, &obs, &oracle, &mut rng), Action::Challenge);
    }

    #[test]
    fn offline_honest_abstains() {
        let f = fixture();
        let obs = Observation { pre_state: &f.pre, diffs: &f.bad, da: Some(&f.da) };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = NodePolicy::HonestChallenger { p_online: 0.0 };
        assert_eq!(decide_action(&p, &obs, &oracle, &mut rng), Action::Abstain);
    }

    #[test]
    fn lazy_signs_bad_diff_without_verifying() {
        let f = fixture();
        let obs = Observation { pre_state: &f.pre, diffs: &f.bad, da: Some(&f.da) };
        let calls = Cell::new(0);
        let counting = |o: &Observation<'_>| {
            calls.set(calls.get() + 1);
            oracle(o)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = NodePolicy::LazyChallenger { p_verify: 0.0 };
        for _ in 0..100 {
            assert_eq!(decide_action(&p, &obs, &counting, &mut rng), Action::SignOff);
        }
        assert_eq!(calls.get(), 0);
    }

    #[test]
    fn lazy_sign_rate_matches_complement() {
        let f = fixture();
        let obs = Observation { pre_state: &f.pre, diffs: &f.bad, da: Some(&f.da) };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = NodePolicy::LazyChallenger { p_verify: 0.25 };
        let n = 20_000;
        let signs = (0..n)
            .filter(|_| decide_action(&p, &obs, &oracle, &mut rng) == Action::SignOff)
            .count() as f64;
        let rate = signs / n as f64;
        let se = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((rate - 0.75).abs() < 4.0 * se, "{rate}");
    }

    #[test]
    fn non_verifiers_abstain() {
        let f = fixture();
        let obs = Observation { pre_state: &f.pre, diffs: &f.bad, da: Some(&f.da) };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for p in [
            NodePolicy::HonestOperator,
            NodePolicy::CensoringAdversary {
                p_suppress: 1.0,
                budget: 1,
                target: SuppressTarget::All,
                until_step: None,
            },
        ] {
            assert_eq!(decide_action(&p, &obs, &oracle, &mut rng), Action::Abstain);
        }
    }

    #[test]
    fn parameter_validation() {
        assert_eq!(
            NodePolicy::HonestChallenger { p_online: 1.1 }.invalid_parameter(),
            Some("p_online")
        );
        assert_eq!(
            NodePolicy::FraudulentOperator {
                p_fraud_attempt: 0.5,
                p_withhold_da: 0.0,
                deterrence: -1.0
            }
            .invalid_parameter(),
            Some("deterrence")
        );
        assert_eq!(NodePolicy::LazyChallenger { p_verify: 0.0 }.invalid_parameter(), None);
    }

    proptest! {
        #[test]
        fn deterrence_is_monotone(
            p in 0.0f64..=1.0,
            d in 0.0f64..10.0,
            a in 0u64..1_000_000,
            b in 0u64..1_000_000,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let policy = NodePolicy::FraudulentOperator { p_fraud_attempt: p, p_withhold_da: 0.0, deterrence: d };
            prop_assert!(policy.fraud_rate(hi) <= policy.fraud_rate(lo));
            prop_assert!(policy.fraud_rate(lo) <= p);
        }
    }
}
