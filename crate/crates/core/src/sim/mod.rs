//! Seeded discrete-event simulation of operators, challengers and
//! adversaries running against the protocol.

pub mod audit;
pub mod config;
pub mod engine;
pub mod policy;
pub mod report;
pub mod sampling;
pub mod transition;

pub use audit::{audit_trace, window_history, AuditViolation};
pub use config::{BondConfig, ConfigError, DetectionConfig, NodeSpec, PopulationEntry, ScenarioConfig};
pub use engine::{run_scenario, EventKind, ScenarioRun, SimError, WorldEvent};
pub use policy::{decide_action, fraud_probability, Action, NodePolicy, Observation, Role, SuppressTarget};
pub use report::{CommitmentRecord, LatencySummary, ProbeRecord, SimReport};
pub use sampling::{sample_challengers, SampleError};
pub use transition::{verify_diff, BytePatch, DaRecord, DaStore, Verification};
