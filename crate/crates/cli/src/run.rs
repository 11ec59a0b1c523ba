use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use dfp_core::sim::{run_scenario, ScenarioConfig, ScenarioRun, SimError};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use toml::Value;

use crate::overrides::{parse_assignment, parse_axis, render, set_path, sweep_points, Assignment};
use crate::Failure;

#[derive(Args)]
pub struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory. Defaults to $DFP_OUT_DIR, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Replicates per sweep point; replicate i runs with seed + i.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// `path=value` override, e.g. `schedule.c0=50`; repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
    /// `path=v1,v2,...`; repeatable, points are the cartesian product.
    #[arg(long, value_name = "PATH=V1,V2")]
    sweep: Vec<String>,
}

struct Point {
    name: String,
    coords: Vec<Assignment>,
    config: ScenarioConfig,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    point: &'a str,
    coordinates: String,
    seed: u64,
    submitted: u64,
    finalized: u64,
    reverted: u64,
    pending: u64,
    fraud_attempted: u64,
    fraud_finalized: u64,
    fraud_caught: u64,
    challenges_raised: u64,
    probe_slashes: u64,
    latency_p50_ms: Option<u64>,
    latency_p90_ms: Option<u64>,
    latency_max_ms: Option<u64>,
    burned: u64,
    trace_sha256: &'a str,
}

fn out_dir(args: &RunArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("DFP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn slug(coords: &[Assignment], seed: Option<u64>) -> String {
    let mut parts: Vec<String> = coords
        .iter()
        .map(|a| format!("{}={}", a.path, render(&a.value)))
        .collect();
    if let Some(s) = seed {
        parts.push(format!("seed={s}"));
    }
    let raw = parts.join("_");
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '-' })
        .collect()
}

fn build_points(args: &RunArgs, doc: &Value) -> Result<Vec<Point>, Failure> {
    let axes = args
        .sweep
        .iter()
        .map(|s| parse_axis(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::input)?;
    if args.trials == 0 {
        return Err(Failure::input("--trials must be at least 1"));
    }
    let mut points = Vec::new();
    for (i, coords) in sweep_points(&axes).into_iter().enumerate() {
        let mut doc = doc.clone();
        for a in &coords {
            set_path(&mut doc, &a.path, a.value.clone()).map_err(Failure::input)?;
        }
        let config: ScenarioConfig = doc
            .try_into()
            .map_err(|e| Failure::input(format!("{}: {e}", args.config.display())))?;
        config
            .validate()
            .map_err(|e| Failure::input(format!("{}: {e}", args.config.display())))?;
        for r in 0..args.trials {
            let mut config = config.clone();
            config.seed = config.seed.wrapping_add(r);
            let replicate = (args.trials > 1).then_some(config.seed);
            let mut name = format!("{i:03}");
            let s = slug(&coords, replicate);
            if !s.is_empty() {
                name = format!("{name}_{s}");
            }
            points.push(Point {
                name,
                coords: coords.clone(),
                config,
            });
        }
    }
    Ok(points)
}

pub fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::input(format!("{}: {e}", args.config.display())))?;
    let mut doc: Value = toml::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", args.config.display())))?;
    let mut overrides = Vec::new();
    if let Some(seed) = args.seed {
        overrides.push(Assignment {
            path: "seed".into(),
            value: Value::Integer(seed as i64),
        });
    }
    for s in &args.set {
        overrides.push(parse_assignment(s).map_err(Failure::input)?);
    }
    for a in &overrides {
        set_path(&mut doc, &a.path, a.value.clone()).map_err(Failure::input)?;
    }

    let points = build_points(args, &doc)?;
    let results: Vec<Result<ScenarioRun, SimError>> =
        points.par_iter().map(|p| run_scenario(&p.config)).collect();

    let out = out_dir(args);
    fs::create_dir_all(&out)?;
    let mut summary = csv::Writer::from_path(out.join("summary.csv"))?;
    let mut first_error = None;
    for (point, result) in points.iter().zip(results) {
        let run = match result {
            Ok(run) => run,
            Err(e) => {
                eprintln!("{}: {e}", point.name);
                first_error.get_or_insert(classify(&point.name, e));
                continue;
            }
        };
        let dir = out.join(&point.name);
        write_point(&dir, args, &overrides, point, &run)?;
        let r = &run.report;
        summary.serialize(SummaryRow {
            point: &point.name,
            coordinates: slug(&point.coords, None),
            seed: r.seed,
            submitted: r.submitted,
            finalized: r.finalized,
            reverted: r.reverted,
            pending: r.pending,
            fraud_attempted: r.fraud_attempted,
            fraud_finalized: r.fraud_finalized,
            fraud_caught: r.fraud_caught,
            challenges_raised: r.challenges_raised,
            probe_slashes: r.probe_slashes,
            latency_p50_ms: r.latency.p50_ms,
            latency_p90_ms: r.latency.p90_ms,
            latency_max_ms: r.latency.max_ms,
            burned: r.ledger.burned,
            trace_sha256: &r.trace_sha256,
        })?;
        println!(
            "{}: submitted {} finalized {} reverted {} pending {} p50 {} ms -> {}",
            point.name,
            r.submitted,
            r.finalized,
            r.reverted,
            r.pending,
            r.latency.p50_ms.map_or("-".to_string(), |v| v.to_string()),
            dir.display()
        );
    }
    summary.flush()?;
    match first_error {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn classify(point: &str, e: SimError) -> Failure {
    match e {
        SimError::Config(e) => Failure::input(format!("{point}: {e}")),
        e => Failure::invariant(format!("{point}: {e}")),
    }
}

fn write_point(
    dir: &Path,
    args: &RunArgs,
    overrides: &[Assignment],
    point: &Point,
    run: &ScenarioRun,
) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let coords: serde_json::Map<String, serde_json::Value> = point
        .coords
        .iter()
        .map(|a| (a.path.clone(), json!(render(&a.value))))
        .collect();
    let report = json!({
        "header": {
            "config": args.config.display().to_string(),
            "overrides": overrides
                .iter()
                .map(|a| format!("{}={}", a.path, render(&a.value)))
                .collect::<Vec<_>>(),
            "point": coords,
            "seed": point.config.seed,
        },
        "report": run.report,
    });
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    fs::write(dir.join("trace.jsonl"), run.trace.to_jsonl())?;

    let mut w = csv::Writer::from_path(dir.join("commitments.csv"))?;
    for c in &run.commitments {
        w.serialize(c)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("ledger.csv"))?;
    for row in &run.report.ledger.rows {
        w.serialize(row)?;
    }
    w.flush()?;

    if !run.probes.is_empty() {
        let mut lines = String::new();
        for p in &run.probes {
            lines.push_str(&serde_json::to_string(p)?);
            lines.push('\n');
        }
        fs::write(dir.join("probes.jsonl"), lines)?;
    }
    Ok(())
}
