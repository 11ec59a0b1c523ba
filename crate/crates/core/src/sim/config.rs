use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::NodeId;
use crate::ratio::Ratio;
use crate::schedule::FinalitySchedule;
use crate::sim::policy::{NodePolicy, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Seeded simulation input. Mirrors the scenario TOML file one-to-one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_ms: u64,
    /// Operators stop submitting at this time; defaults to `duration_ms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submit_until_ms: Option<u64>,
    pub commitment_cadence_ms: u64,
    #[serde(default)]
    pub dispute_latency_ms: u64,
    /// Delay between a commitment reaching a verifier and its reaction.
    #[serde(default)]
    pub verification_latency_ms: u64,
    /// Expected probes per submitted commitment.
    #[serde(default)]
    pub probe_rate: f64,
    /// Targets per probe; defaults to the schedule's sample size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_targets: Option<u64>,
    #[serde(default = "default_bundle_size")]
    pub bundle_size: usize,
    #[serde(default = "default_accounts_per_operator")]
    pub accounts_per_operator: usize,
    #[serde(default = "default_transactions")]
    pub transactions_per_commitment: usize,
    /// Defaults to `duration_ms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delegation_lifetime_ms: Option<u64>,
    #[serde(default)]
    pub schedule: FinalitySchedule,
    #[serde(default)]
    pub bonds: BondConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    pub population: Vec<PopulationEntry>,
}

fn default_bundle_size() -> usize {
    1
}

fn default_accounts_per_operator() -> usize {
    4
}

fn default_transactions() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BondConfig {
    pub min_challenger_bond: u64,
    /// Bond posted with each challenge.
    pub challenge_bond: u64,
    /// Escrowed by each operator at start.
    pub operator_bond: u64,
    /// Taken from the operator bond on proven fraud.
    pub operator_slash: u64,
    /// Escrowed by each verifier at start; probe slashes draw on it.
    pub challenger_stake: u64,
    pub probe_slash: u64,
    pub probe_reward: u64,
    pub slash_reward_share: Ratio,
    pub treasury_balance: u64,
}

impl Default for BondConfig {
    fn default() -> Self {
        Self {
            min_challenger_bond: 1,
            challenge_bond: 10,
            operator_bond: 0,
            operator_slash: 0,
            challenger_stake: 0,
            probe_slash: 0,
            probe_reward: 0,
            slash_reward_share: Ratio::new(1, 2).expect("non-zero denominator"),
            treasury_balance: 0,
        }
    }
}

/// Knobs that let a scenario mirror the analytical security model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Chance that a fraud leaves evidence a verifier can find. Undetectable
    /// frauds publish forged transactions consistent with the forged diff.
    pub p_detect_given_fraud: f64,
    /// Chance that verifiers see a commitment before its first deadline.
    pub p_window: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            p_detect_given_fraud: 1.0,
            p_window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationEntry {
    #[serde(default = "default_count")]
    pub count: u32,
    pub role: Role,
    pub policy: NodePolicy,
    pub balance: u64,
}

fn default_count() -> u32 {
    1
}

/// One expanded population member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub role: Role,
    pub policy: NodePolicy,
    pub balance: u64,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario configs serialize")
    }

    pub fn submit_until(&self) -> u64 {
        self.submit_until_ms.unwrap_or(self.duration_ms)
    }

    pub fn delegation_lifetime(&self) -> u64 {
        self.delegation_lifetime_ms.unwrap_or(self.duration_ms)
    }

    /// Population members in id order; ids are assigned sequentially from 0.
    pub fn nodes(&self) -> Vec<NodeSpec> {
        let mut next = 0u32;
        let mut out = Vec::new();
        for entry in &self.population {
            for _ in 0..entry.count {
                out.push(NodeSpec {
                    id: NodeId(next),
                    role: entry.role,
                    policy: entry.policy.clone(),
                    balance: entry.balance,
                });
                next += 1;
            }
        }
        out
    }

    pub fn challenger_pool(&self) -> Vec<NodeId> {
        self.nodes()
            .into_iter()
            .filter(|n| n.role == Role::Challenger)
            .map(|n| n.id)
            .collect()
    }

    pub fn probe_target_count(&self) -> u64 {
        self.probe_targets.unwrap_or_else(|| self.schedule.sample_size())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if self.duration_ms == 0 {
            return Err(ConfigError::invalid("duration_ms", "must be positive"));
        }
        if self.commitment_cadence_ms == 0 {
            return Err(ConfigError::invalid("commitment_cadence_ms", "must be positive"));
        }
        if self.delegation_lifetime() == 0 {
            return Err(ConfigError::invalid("delegation_lifetime_ms", "must be positive"));
        }
        if !(self.probe_rate.is_finite() && self.probe_rate >= 0.0) {
            return Err(ConfigError::invalid("probe_rate", "must be a non-negative number"));
        }
        if self.accounts_per_operator == 0 {
            return Err(ConfigError::invalid("accounts_per_operator", "must be positive"));
        }
        if self.bundle_size == 0 || self.bundle_size > self.accounts_per_operator {
            return Err(ConfigError::invalid(
                "bundle_size",
                format!("must be between 1 and accounts_per_operator ({})", self.accounts_per_operator),
            ));
        }
        if self.transactions_per_commitment == 0 {
            return Err(ConfigError::invalid("transactions_per_commitment", "must be positive"));
        }
        self.schedule
            .validate()
            .map_err(|e| ConfigError::invalid("schedule", e.to_string()))?;
        if !self.bonds.slash_reward_share.is_unit_interval() {
            return Err(ConfigError::invalid("bonds.slash_reward_share", "must be within [0, 1]"));
        }
        if self.bonds.challenge_bond < self.bonds.min_challenger_bond.max(1) {
            return Err(ConfigError::invalid(
                "bonds.challenge_bond",
                "must be at least min_challenger_bond and positive",
            ));
        }
        if !unit(self.detection.p_detect_given_fraud) {
            return Err(ConfigError::invalid("detection.p_detect_given_fraud", "must be within [0, 1]"));
        }
        if !unit(self.detection.p_window) {
            return Err(ConfigError::invalid("detection.p_window", "must be within [0, 1]"));
        }
        if self.population.is_empty() {
            return Err(ConfigError::invalid("population", "must not be empty"));
        }
        for (i, entry) in self.population.iter().enumerate() {
            if let Some(param) = entry.policy.invalid_parameter() {
                return Err(ConfigError::invalid(
                    format!("population[{i}].policy.{param}"),
                    "must be within its domain",
                ));
            }
            if entry.policy.is_operator() != (entry.role == Role::Operator) {
                return Err(ConfigError::invalid(
                    format!("population[{i}].role"),
                    "operator policies need the operator role and vice versa",
                ));
            }
        }
        let nodes = self.nodes();
        if !nodes.iter().any(|n| n.role == Role::Operator) {
            return Err(ConfigError::invalid("population", "needs at least one operator"));
        }
        if nodes.len() as u64 >= u64::from(NodeId::TREASURY.0) {
            return Err(ConfigError::invalid("population", "too many nodes"));
        }
        let pool = self.challenger_pool().len() as u64;
        if pool < self.schedule.sample_size() {
            return Err(ConfigError::invalid(
                "population",
                format!(
                    "challenger pool has {pool} members but the schedule samples {}",
                    self.schedule.sample_size()
                ),
            ));
        }
        if self.probe_rate > 0.0 && (self.probe_target_count() == 0 || self.probe_target_count() > pool) {
            return Err(ConfigError::invalid(
                "probe_targets",
                format!("must be between 1 and the pool size ({pool})"),
            ));
        }
        for n in &nodes {
            let need = match n.role {
                Role::Operator => self.bonds.operator_bond,
                _ if n.policy.is_verifier() => self.bonds.challenger_stake,
                _ => 0,
            };
            if n.balance < need {
                return Err(ConfigError::invalid(
                    "population",
                    format!("node {} cannot cover its initial bond of {need}", n.id),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASELINE: &str = r#"
seed = 7
duration_ms = 10000
commitment_cadence_ms = 1000

[schedule]
t0_ms = 500
r_t = 4
c0 = 3
r_c = 0.7
max_step = 10

[[population]]
role = "operator"
policy = { kind = "honest_operator" }
balance = 1000

[[population]]
count = 5
role = "challenger"
policy = { kind = "honest_challenger", p_online = 1.0 }
balance = 1000
"#;

    #[test]
    fn parses_baseline() {
        let c = ScenarioConfig::from_toml_str(BASELINE).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.nodes().len(), 6);
        assert_eq!(c.challenger_pool(), (1..6).map(NodeId).collect::<Vec<_>>());
        assert_eq!(c.schedule.r_c, Ratio::new(7, 10).unwrap());
        assert_eq!(c.submit_until(), 10_000);
    }

    #[test]
    fn missing_seed_is_named() {
        let text = BASELINE.replace("seed = 7\n", "");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_field_is_named() {
        let text = BASELINE.replace("seed = 7", "seed = 7\nsede = 8");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
    }

    #[test]
    fn bad_probability_is_named() {
        let text = BASELINE.replace("p_online = 1.0", "p_online = 1.5");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("population[1].policy.p_online"), "{err}");
    }

    #[test]
    fn pool_must_cover_sample() {
        let text = BASELINE.replace("c0 = 3", "c0 = 6");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "population"));
    }

    #[test]
    fn needs_an_operator() {
        let text = BASELINE.replace(
            "role = \"operator\"\npolicy = { kind = \"honest_operator\" }",
            "role = \"observer\"\npolicy = { kind = \"honest_challenger\", p_online = 1.0 }",
        );
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("operator"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ScenarioConfig::from_toml_str(BASELINE).unwrap();
        let again = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, again);
    }
}
