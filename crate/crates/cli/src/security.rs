use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use dfp_core::security::{sweep_row, SecurityParams, SweepRow};
use toml::Value;

use crate::overrides::{parse_axis, set_path, sweep_points};
use crate::Failure;

#[derive(Args)]
pub struct SecurityArgs {
    /// TOML file with SecurityParams fields; flags override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    p_fraud: Option<f64>,
    #[arg(long)]
    p_detect: Option<f64>,
    #[arg(long)]
    p_window: Option<f64>,
    #[arg(long)]
    n_nodes: Option<u64>,
    #[arg(long)]
    p_node: Option<f64>,
    #[arg(long)]
    p_participation: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// `field=v1,v2,...`; repeatable. Implies CSV output.
    #[arg(long, value_name = "FIELD=V1,V2")]
    sweep: Vec<String>,
    #[arg(long)]
    csv: bool,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn base_params(args: &SecurityArgs) -> Result<Value, Failure> {
    let mut doc = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            toml::from_str::<Value>(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        }
        None => Value::try_from(SecurityParams::default()).expect("params serialize"),
    };
    let flags: [(&str, Option<Value>); 6] = [
        ("p_fraud", args.p_fraud.map(Value::Float)),
        ("p_detect_given_fraud", args.p_detect.map(Value::Float)),
        ("p_window", args.p_window.map(Value::Float)),
        ("n_nodes", args.n_nodes.map(|n| Value::Integer(n as i64))),
        ("p_node_challenge", args.p_node.map(Value::Float)),
        ("p_participation", args.p_participation.map(Value::Float)),
    ];
    for (field, value) in flags {
        if let Some(v) = value {
            set_path(&mut doc, field, v).map_err(Failure::input)?;
        }
    }
    Ok(doc)
}

pub fn cmd_security(args: &SecurityArgs) -> Result<(), Failure> {
    let doc = base_params(args)?;
    let axes = args
        .sweep
        .iter()
        .map(|s| parse_axis(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::input)?;
    let mut rows = Vec::new();
    for point in sweep_points(&axes) {
        let mut doc = doc.clone();
        for a in &point {
            set_path(&mut doc, &a.path, a.value.clone()).map_err(Failure::input)?;
        }
        let params: SecurityParams = doc.try_into().map_err(|e| Failure::input(format!("params: {e}")))?;
        let row = sweep_row(&params, args.trials, args.seed).map_err(Failure::input)?;
        if !row.within_3se {
            eprintln!(
                "warning: Monte Carlo {} disagrees with closed form {} beyond 3 standard errors",
                row.mc_estimate, row.p_challenge
            );
        }
        rows.push(row);
    }

    if args.csv || !args.sweep.is_empty() || args.out.is_some() {
        let sink: Box<dyn Write> = match &args.out {
            Some(path) => Box::new(std::fs::File::create(path)?),
            None => Box::new(std::io::stdout().lock()),
        };
        let mut w = csv::Writer::from_writer(sink);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
        return Ok(());
    }
    print_summary(&rows[0], args)?;
    Ok(())
}

fn print_summary(row: &SweepRow, args: &SecurityArgs) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "P(E)          {:.10}", row.p_challenge)?;
    writeln!(
        out,
        "1 - P(E)      {:.10}  ({:.2}%)",
        row.p_fast_finality,
        row.p_fast_finality * 100.0
    )?;
    writeln!(
        out,
        "Monte Carlo   {:.10}  (se {:.10}, {} trials, seed {})",
        row.mc_estimate, row.mc_std_error, row.mc_trials, args.seed
    )?;
    let verdict = if row.within_3se {
        "within 3 standard errors"
    } else {
        "DISAGREES beyond 3 standard errors"
    };
    writeln!(out, "agreement     {verdict}")?;
    Ok(())
}
