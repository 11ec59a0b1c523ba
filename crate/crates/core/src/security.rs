//! Closed-form probability that a commitment gets challenged, its Monte Carlo
//! counterpart, and expected settlement time across extension steps.
//!
//! `P(E) = P(F) * P(D|F) * P(T) * (1 - (1 - P(C_i))^N)`, with nodes assumed
//! independent. The participation rate is carried for reporting but is not a
//! factor of `P(E)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::{FinalitySchedule, ScheduleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SecurityError {
    #[error("{field} = {value} is not a probability in [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("Monte Carlo needs at least one trial")]
    ZeroTrials,
    #[error("{given} step probabilities for a schedule with {steps} steps")]
    TooManySteps { given: usize, steps: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

fn check(field: &'static str, value: f64) -> Result<f64, SecurityError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(SecurityError::OutOfRange { field, value })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityParams {
    /// P(F): a commitment is fraudulent.
    pub p_fraud: f64,
    /// P(D|F): fraud is detectable given that it happened.
    pub p_detect_given_fraud: f64,
    /// P(T): detection fits inside the window.
    pub p_window: f64,
    /// N: nodes able to challenge.
    pub n_nodes: u64,
    /// P(C_i): a single node raises a challenge.
    pub p_node_challenge: f64,
    /// P(R): participation rate. Not part of P(E).
    #[serde(default = "one")]
    pub p_participation: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SecurityParams {
    /// 1% fraud, 90% detection, adequate window, 100 nodes at 10% each.
    fn default() -> Self {
        Self {
            p_fraud: 0.01,
            p_detect_given_fraud: 0.9,
            p_window: 1.0,
            n_nodes: 100,
            p_node_challenge: 0.1,
            p_participation: 1.0,
        }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<(), SecurityError> {
        check("p_fraud", self.p_fraud)?;
        check("p_detect_given_fraud", self.p_detect_given_fraud)?;
        check("p_window", self.p_window)?;
        check("p_node_challenge", self.p_node_challenge)?;
        check("p_participation", self.p_participation)?;
        Ok(())
    }
}

/// `1 - (1 - p)^n`.
pub fn p_at_least_one_challenge(p_node_challenge: f64, n_nodes: u64) -> Result<f64, SecurityError> {
    let p = check("p_node_challenge", p_node_challenge)?;
    if n_nodes == 0 || p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    // -expm1(n * ln(1 - p)) stays accurate when (1 - p)^n is near 1
    Ok(-(n_nodes as f64 * (-p).ln_1p()).exp_m1())
}

/// P(E).
pub fn p_challenge(params: &SecurityParams) -> Result<f64, SecurityError> {
    params.validate()?;
    Ok(params.p_fraud
        * params.p_detect_given_fraud
        * params.p_window
        * p_at_least_one_challenge(params.p_node_challenge, params.n_nodes)?)
}

/// 1 - P(E): the commitment settles on the fast path.
pub fn p_fast_finality(params: &SecurityParams) -> Result<f64, SecurityError> {
    Ok(1.0 - p_challenge(params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub trials: u64,
    pub events: u64,
    pub estimate: f64,
    /// `sqrt(p(1-p)/trials)` at the estimate.
    pub std_error: f64,
}

impl MonteCarloEstimate {
    /// `|estimate - target| <= k * std_error`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error
    }
}

fn trial<R: Rng>(rng: &mut R, params: &SecurityParams) -> bool {
    let mut draw = |p: f64| rng.random::<f64>() < p;
    if !draw(params.p_fraud) || !draw(params.p_detect_given_fraud) || !draw(params.p_window) {
        return false;
    }
    (0..params.n_nodes).any(|_| draw(params.p_node_challenge))
}

/// Simulates the gated challenge event `trials` times. Trial `i` draws from
/// its own ChaCha stream keyed by `(seed, i)`, so the result does not depend
/// on how trials are scheduled across threads.
pub fn monte_carlo_p_challenge(
    params: &SecurityParams,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, SecurityError> {
    params.validate()?;
    if trials == 0 {
        return Err(SecurityError::ZeroTrials);
    }
    let base = ChaCha8Rng::seed_from_u64(seed).get_seed();
    let events = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::from_seed(base);
            rng.set_stream(i);
            trial(&mut rng, params)
        })
        .count() as u64;
    let estimate = events as f64 / trials as f64;
    Ok(MonteCarloEstimate {
        trials,
        events,
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
    })
}

/// Distribution of settlement over extension steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettlementProfile {
    /// `sum_k mass_k * cumulative_ms_k`; excludes the unsettled mass.
    pub expected_ms: f64,
    /// Probability of settling exactly at step k.
    pub per_step_mass: Vec<f64>,
    /// Time from submission to the end of step k.
    pub cumulative_ms: Vec<u64>,
    /// Probability of still being unsettled after the last listed step.
    pub unsettled_mass: f64,
}

/// Combines window durations with the probability that step `k` meets its
/// threshold, given that all earlier steps did not.
pub fn expected_settlement_time(
    schedule: &FinalitySchedule,
    p_meet_threshold_per_step: &[f64],
) -> Result<SettlementProfile, SecurityError> {
    let steps = schedule.max_step as usize + 1;
    if p_meet_threshold_per_step.len() > steps {
        return Err(SecurityError::TooManySteps {
            given: p_meet_threshold_per_step.len(),
            steps,
        });
    }
    let mut survive = 1.0;
    let mut expected_ms = 0.0;
    let mut per_step_mass = Vec::with_capacity(p_meet_threshold_per_step.len());
    let mut cumulative_ms = Vec::with_capacity(p_meet_threshold_per_step.len());
    for (k, &p) in p_meet_threshold_per_step.iter().enumerate() {
        let p = check("p_meet_threshold", p)?;
        let cum = schedule.cumulative_duration(k as u32)?;
        let mass = survive * p;
        expected_ms += mass * cum as f64;
        per_step_mass.push(mass);
        cumulative_ms.push(cum);
        survive *= 1.0 - p;
    }
    Ok(SettlementProfile {
        expected_ms,
        per_step_mass,
        cumulative_ms,
        unsettled_mass: survive,
    })
}

/// One line of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p_fraud: f64,
    pub p_detect_given_fraud: f64,
    pub p_window: f64,
    pub n_nodes: u64,
    pub p_node_challenge: f64,
    pub p_participation: f64,
    pub p_challenge: f64,
    pub p_fast_finality: f64,
    pub mc_estimate: f64,
    pub mc_std_error: f64,
    pub mc_trials: u64,
    pub within_3se: bool,
}

pub fn sweep_row(params: &SecurityParams, trials: u64, seed: u64) -> Result<SweepRow, SecurityError> {
    let closed = p_challenge(params)?;
    let mc = monte_carlo_p_challenge(params, trials, seed)?;
    Ok(SweepRow {
        p_fraud: params.p_fraud,
        p_detect_given_fraud: params.p_detect_given_fraud,
        p_window: params.p_window,
        n_nodes: params.n_nodes,
        p_node_challenge: params.p_node_challenge,
        p_participation: params.p_participation,
        p_challenge: closed,
        p_fast_finality: 1.0 - closed,
        mc_estimate: mc.estimate,
        mc_std_error: mc.std_error,
        mc_trials: mc.trials,
        within_3se: mc.agrees_with(closed, 3.0),
    })
}
