use std::io::Write;

use clap::Args;
use dfp_core::{FinalitySchedule, Ratio};

use crate::Failure;

#[derive(Args)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 500)]
    t0_ms: u64,
    /// Growth factor, decimal or `n/d`; must exceed 1.
    #[arg(long, default_value = "4")]
    r_t: String,
    #[arg(long, default_value_t = 100)]
    c0: u64,
    /// Decay factor, decimal or `n/d`.
    #[arg(long, default_value = "0.7")]
    r_c: String,
    #[arg(long, default_value_t = 10)]
    max_step: u32,
    /// Emit CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

fn ratio(name: &str, raw: &str) -> Result<Ratio, Failure> {
    raw.parse()
        .map_err(|e| Failure::input(format!("--{name}: {e}")))
}

pub fn cmd_schedule(args: &ScheduleArgs) -> Result<(), Failure> {
    let schedule = FinalitySchedule::new(
        args.t0_ms,
        ratio("r-t", &args.r_t)?,
        args.c0,
        ratio("r-c", &args.r_c)?,
        args.max_step,
    )
    .map_err(Failure::input)?;
    let rows = schedule.table().map_err(Failure::input)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if args.csv {
        let mut w = csv::Writer::from_writer(out);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
        return Ok(());
    }
    writeln!(
        out,
        "{:>4}  {:>14}  {:>10}  {:>14}  {:>10}  {:>12}  {:>8}",
        "step", "window_ms", "window", "cumulative_ms", "cumulative", "required_raw", "required"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:>4}  {:>14}  {:>10}  {:>14}  {:>10}  {:>12.4}  {:>8}",
            r.step, r.window_ms, r.window_human, r.cumulative_ms, r.cumulative_human, r.required_raw, r.required
        )?;
    }
    Ok(())
}
