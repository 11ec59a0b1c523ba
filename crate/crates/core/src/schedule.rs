//! Challenge-window growth and challenger-threshold decay.
//!
//! At extension step `n` the window lasts `t0 * r_t^n` milliseconds and
//! requires `floor(c0 * r_c^n)` sign-offs. Both are evaluated with exact
//! big-integer arithmetic before the final floor.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("step {step} is past the schedule's last step {max_step}")]
    Exhausted { step: u32, max_step: u32 },
    #[error("initial window t0 must be positive")]
    ZeroInitialWindow,
    #[error("window growth factor r_t must be > 1, got {0}")]
    InvalidGrowth(Ratio),
    #[error("threshold decay factor r_c must satisfy 0 < r_c <= 1, got {0}")]
    InvalidDecay(Ratio),
    #[error("window duration at step {step} overflows 64-bit milliseconds")]
    Overflow { step: u32 },
    #[error("window duration does not grow between steps {} and {step}; raise t0 or r_t", step - 1)]
    NotIncreasing { step: u32 },
}

/// Finality configuration carried by a delegation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalitySchedule {
    /// Initial window length.
    pub t0_ms: u64,
    /// Window growth factor per extension.
    pub r_t: Ratio,
    /// Sign-offs required at step zero.
    pub c0: u64,
    /// Threshold decay factor per extension.
    pub r_c: Ratio,
    /// Last step; the window re-arms at this step's parameters afterwards.
    pub max_step: u32,
}

impl Default for FinalitySchedule {
    /// 500 ms initial window growing 4x per step, 100 sign-offs decaying by
    /// 30% per step, ten extension steps.
    fn default() -> Self {
        Self {
            t0_ms: 500,
            r_t: Ratio::integer(4),
            c0: 100,
            r_c: Ratio::new(7, 10).expect("non-zero denominator"),
            max_step: 10,
        }
    }
}

/// One row of the rendered schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub step: u32,
    pub window_ms: u64,
    pub window_human: String,
    pub cumulative_ms: u64,
    pub cumulative_human: String,
    pub required_raw: f64,
    pub required: u64,
}

fn floor_scaled(base: u64, factor: Ratio, step: u32) -> BigUint {
    let num = BigUint::from(factor.num()).pow(step);
    let den = BigUint::from(factor.den()).pow(step);
    BigUint::from(base) * num / den
}

impl FinalitySchedule {
    pub fn new(t0_ms: u64, r_t: Ratio, c0: u64, r_c: Ratio, max_step: u32) -> Result<Self, ScheduleError> {
        let schedule = Self {
            t0_ms,
            r_t,
            c0,
            r_c,
            max_step,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Checks the parameter invariants and that every window up to
    /// `max_step` is representable and strictly longer than the previous one.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.t0_ms == 0 {
            return Err(ScheduleError::ZeroInitialWindow);
        }
        if self.r_t <= Ratio::ONE {
            return Err(ScheduleError::InvalidGrowth(self.r_t));
        }
        if self.r_c == Ratio::ZERO || self.r_c > Ratio::ONE {
            return Err(ScheduleError::InvalidDecay(self.r_c));
        }
        let mut previous = 0u64;
        let mut cumulative = 0u64;
        for step in 0..=self.max_step {
            let t = self.exact_window(step)?;
            if step > 0 && t <= previous {
                return Err(ScheduleError::NotIncreasing { step });
            }
            cumulative = cumulative
                .checked_add(t)
                .ok_or(ScheduleError::Overflow { step })?;
            previous = t;
        }
        Ok(())
    }

    fn check_step(&self, step: u32) -> Result<(), ScheduleError> {
        if step > self.max_step {
            Err(ScheduleError::Exhausted {
                step,
                max_step: self.max_step,
            })
        } else {
            Ok(())
        }
    }

    fn exact_window(&self, step: u32) -> Result<u64, ScheduleError> {
        u64::try_from(floor_scaled(self.t0_ms, self.r_t, step))
            .map_err(|_| ScheduleError::Overflow { step })
    }

    /// Window length at `step`, in milliseconds.
    pub fn window_duration(&self, step: u32) -> Result<u64, ScheduleError> {
        self.check_step(step)?;
        self.exact_window(step)
    }

    /// Sign-offs required at `step`: `floor(c0 * r_c^step)`.
    pub fn required_challengers(&self, step: u32) -> Result<u64, ScheduleError> {
        self.check_step(step)?;
        // c0 * r_c^n <= c0 because r_c <= 1
        Ok(u64::try_from(floor_scaled(self.c0, self.r_c, step)).expect("bounded by c0"))
    }

    /// Unfloored `c0 * r_c^step`, for reporting only.
    pub fn required_challengers_raw(&self, step: u32) -> Result<f64, ScheduleError> {
        self.check_step(step)?;
        Ok(self.c0 as f64 * self.r_c.to_f64().powi(step as i32))
    }

    /// Total time from window open through the end of `step`, assuming every
    /// earlier step extended at its deadline.
    pub fn cumulative_duration(&self, step: u32) -> Result<u64, ScheduleError> {
        self.check_step(step)?;
        (0..=step).try_fold(0u64, |acc, n| {
            acc.checked_add(self.exact_window(n)?)
                .ok_or(ScheduleError::Overflow { step: n })
        })
    }

    /// Sample size drawn when a window opens: large enough for the step-zero
    /// threshold.
    pub fn sample_size(&self) -> u64 {
        self.c0.max(self.required_challengers(0).unwrap_or(self.c0))
    }

    pub fn table(&self) -> Result<Vec<ScheduleRow>, ScheduleError> {
        self.validate()?;
        (0..=self.max_step)
            .map(|step| {
                let window_ms = self.window_duration(step)?;
                let cumulative_ms = self.cumulative_duration(step)?;
                Ok(ScheduleRow {
                    step,
                    window_ms,
                    window_human: human_duration(window_ms),
                    cumulative_ms,
                    cumulative_human: human_duration(cumulative_ms),
                    required_raw: self.required_challengers_raw(step)?,
                    required: self.required_challengers(step)?,
                })
            })
            .collect()
    }
}

/// Renders milliseconds in the largest unit that keeps the value >= 1.
pub fn human_duration(ms: u64) -> String {
    const SECOND: f64 = 1_000.0;
    const MINUTE: f64 = 60.0 * SECOND;
    const HOUR: f64 = 60.0 * MINUTE;
    const DAY: f64 = 24.0 * HOUR;
    let v = ms as f64;
    if v < SECOND {
        format!("{ms} ms")
    } else if v < MINUTE {
        format!("{:.2} s", v / SECOND)
    } else if v < HOUR {
        format!("{:.2} min", v / MINUTE)
    } else if v < DAY {
        format!("{:.2} h", v / HOUR)
    } else {
        format!("{:.2} d", v / DAY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> FinalitySchedule {
        FinalitySchedule::default()
    }

    #[test]
    fn window_durations() {
        let s = reference();
        assert_eq!(s.window_duration(0).unwrap(), 500);
        assert_eq!(s.window_duration(1).unwrap(), 2_000);
        // 500 * 4^10
        assert_eq!(s.window_duration(10).unwrap(), 524_288_000);
        assert_eq!(
            s.window_duration(11),
            Err(ScheduleError::Exhausted {
                step: 11,
                max_step: 10
            })
        );
    }

    #[test]
    fn thresholds_floor() {
        let s = reference();
        assert_eq!(s.required_challengers(0).unwrap(), 100);
        assert_eq!(s.required_challengers(1).unwrap(), 70);
        // 100 * 0.7^10 = 2.82475249
        assert_eq!(s.required_challengers(10).unwrap(), 2);
        assert!((s.required_challengers_raw(10).unwrap() - 2.824_752_49).abs() < 1e-9);
        assert!(s.required_challengers(11).is_err());
    }

    #[test]
    fn threshold_can_reach_zero() {
        let s = FinalitySchedule::new(500, Ratio::integer(2), 3, Ratio::new(1, 2).unwrap(), 4).unwrap();
        let seq: Vec<_> = (0..=4).map(|n| s.required_challengers(n).unwrap()).collect();
        assert_eq!(seq, vec![3, 1, 0, 0, 0]);
    }

    #[test]
    fn rational_growth_is_exact() {
        let s = FinalitySchedule::new(1_000, "1.5".parse().unwrap(), 10, Ratio::ONE, 3).unwrap();
        let seq: Vec<_> = (0..=3).map(|n| s.window_duration(n).unwrap()).collect();
        assert_eq!(seq, vec![1_000, 1_500, 2_250, 3_375]);
    }

    #[test]
    fn validation() {
        assert_eq!(
            FinalitySchedule::new(0, Ratio::integer(4), 1, Ratio::ONE, 1),
            Err(ScheduleError::ZeroInitialWindow)
        );
        assert!(matches!(
            FinalitySchedule::new(500, Ratio::ONE, 1, Ratio::ONE, 1),
            Err(ScheduleError::InvalidGrowth(_))
        ));
        assert!(matches!(
            FinalitySchedule::new(500, Ratio::integer(4), 1, Ratio::ZERO, 1),
            Err(ScheduleError::InvalidDecay(_))
        ));
        assert!(matches!(
            FinalitySchedule::new(500, Ratio::integer(4), 1, Ratio::integer(2), 1),
            Err(ScheduleError::InvalidDecay(_))
        ));
        assert!(matches!(
            FinalitySchedule::new(1, "1.1".parse().unwrap(), 1, Ratio::ONE, 2),
            Err(ScheduleError::NotIncreasing { step: 1 })
        ));
        assert!(matches!(
            FinalitySchedule::new(500, Ratio::integer(4), 1, Ratio::ONE, 40),
            Err(ScheduleError::Overflow { .. })
        ));
    }

    #[test]
    fn cumulative_and_table() {
        let s = reference();
        assert_eq!(s.cumulative_duration(1).unwrap(), 2_500);
        let table = s.table().unwrap();
        assert_eq!(table.len(), 11);
        assert_eq!(table[10].window_human, "6.07 d");
        assert_eq!(table[0].window_human, "500 ms");
        assert_eq!(table[1].window_human, "2.00 s");
    }

    #[test]
    fn human_units() {
        assert_eq!(human_duration(999), "999 ms");
        assert_eq!(human_duration(90_000), "1.50 min");
        assert_eq!(human_duration(7_200_000), "2.00 h");
    }
}
