//! Headless commands behind the `microworld` binary.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 verification
//! failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use microworld::engine::log::{parse_log, LogHeader};
use microworld::engine::{
    load_scenario, replay, shipped, write_log, write_metrics_csv, EngineInstance, LogEntry, ModelState,
    ScenarioConfig, ScenarioError, StateHash,
};
use microworld_session::{Server, ServerOptions};
use rayon::prelude::*;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 3,
            _ => 2,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "microworld", version, about = "Fire and Ants micro-worlds: run, sweep, replay and serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario to quiescence or max_ticks and write its metrics.
    Run(RunArgs),
    /// Run a scenario over a range of one parameter and several seeds.
    Sweep(SweepArgs),
    /// Re-execute a command log and check the hash it claims.
    Replay(ReplayArgs),
    /// Host a participatory session over WebSocket.
    Serve(ServeArgs),
    /// List the shipped scenarios.
    Scenarios,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file, or the name of a shipped scenario.
    pub scenario: String,
    /// Dotted-path override such as `params.density=0.6`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Metrics CSV destination.
    #[arg(long, default_value = "metrics.csv")]
    pub out: PathBuf,
    /// Also write a replayable command log ending in the final hash.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub scenario: String,
    /// Dotted path of the swept parameter.
    #[arg(long)]
    pub param: String,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    /// Runs per value, using seeds `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Scenario the log was recorded against.
    pub config: String,
    pub log: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 8787)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Defaults to the scenario's tick_rate_hz.
    #[arg(long)]
    pub tick_rate: Option<u32>,
    #[arg(long, default_value_t = 40)]
    pub max_clients: usize,
    /// Facilitator passphrase; random when omitted.
    #[arg(long)]
    pub key: Option<String>,
    /// Command log written while the session runs.
    #[arg(long, default_value = "session.jsonl")]
    pub log: PathBuf,
    /// Start ticking immediately instead of waiting for the facilitator.
    #[arg(long)]
    pub autostart: bool,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Reads a scenario from a file, falling back to the shipped catalog.
pub fn resolve_scenario(arg: &str) -> Result<ScenarioConfig, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Ok(load_scenario(&text)?);
    }
    shipped(arg).map_err(|_| {
        CliError::Usage(format!(
            "no scenario file or shipped scenario named `{arg}` (shipped: {})",
            microworld::engine::scenario::SHIPPED
                .iter()
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
                .join(", ")
        ))
    })
}

fn configured(arg: &str, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let mut config = resolve_scenario(arg)?;
    config.apply_overrides(overrides)?;
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

pub fn summary_line(engine: &EngineInstance) -> String {
    let hash = engine.state_hash();
    let ticks = engine.model_tick();
    match engine.state() {
        ModelState::Fire(s) => format!(
            "percent_burned={:.4} burned_patches={} ticks={ticks} hash={hash}",
            s.percent_burned(),
            s.burned_count()
        ),
        ModelState::Ants(s) => format!(
            "delivered={}/{} ticks={ticks} hash={hash}",
            s.delivered(),
            s.initial_food()
        ),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<String, CliError> {
    let config = configured(&args.scenario, &args.overrides)?;
    let name = config.name.clone().unwrap_or_else(|| args.scenario.clone());
    let mut engine = EngineInstance::new(config).map_err(|e| CliError::Usage(e.to_string()))?;
    let hash = engine.run_to_end();
    let out = create(&args.out)?;
    write_metrics_csv(engine.export_metrics(), out).map_err(|e| CliError::Usage(format!("{}: {e}", args.out.display())))?;
    if let Some(path) = &args.log {
        let end = LogEntry::End {
            at: engine.clock(),
            hash,
        };
        write_log(create(path)?, &LogHeader::new(name), &[end]).map_err(|e| CliError::io(path, e))?;
    }
    Ok(summary_line(&engine))
}

/// Parameter values `from, from+step, ..., <= to`.
pub fn sweep_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(CliError::Usage(format!("--step must be positive, got {step}")));
    }
    if !(from <= to) || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Usage(format!("--from {from} must not exceed --to {to}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as u64;
    Ok((0..=n)
        .map(|k| {
            let v = from + k as f64 * step;
            (v * 1e12).round() / 1e12
        })
        .collect())
}

fn number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9e15 {
        Value::from(v as i64)
    } else {
        Value::from(v)
    }
}

pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub ticks: u64,
    pub metrics: Vec<(String, f64)>,
    pub hash: StateHash,
}

pub fn sweep_rows(args: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let base = configured(&args.scenario, &args.overrides)?;
    let values = sweep_values(args.from, args.to, args.step)?;
    let mut jobs = Vec::new();
    for &value in &values {
        let mut config = base.clone();
        config.set_path(&args.param, number(value))?;
        for i in 0..args.seeds {
            let mut c = config.clone();
            c.seed = base.seed.wrapping_add(i);
            jobs.push((value, c));
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(value, config)| {
            let seed = config.seed;
            let mut engine = EngineInstance::new(config).expect("validated by set_path");
            let hash = engine.run_to_end();
            SweepRow {
                value,
                seed,
                ticks: engine.model_tick(),
                metrics: engine
                    .current_metrics()
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect(),
                hash,
            }
        })
        .collect())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let rows = sweep_rows(args)?;
    let csv_err = |e: csv::Error| CliError::Usage(format!("{}: {e}", args.out.display()));
    let mut w = csv::Writer::from_writer(create(&args.out)?);
    let mut header = vec!["value".to_string(), "seed".to_string(), "ticks".to_string()];
    if let Some(first) = rows.first() {
        header.extend(first.metrics.iter().map(|(k, _)| k.clone()));
    }
    header.push("hash".into());
    w.write_record(&header).map_err(csv_err)?;
    for r in &rows {
        let mut rec = vec![r.value.to_string(), r.seed.to_string(), r.ticks.to_string()];
        rec.extend(r.metrics.iter().map(|(_, v)| v.to_string()));
        rec.push(r.hash.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(&args.out, e))?;
    Ok(format!("rows={} out={}", rows.len(), args.out.display()))
}

/// Replays a log. The returned line carries the hash; a missing or
/// mismatched claim is a verification error that still reports it.
pub fn cmd_replay(args: &ReplayArgs) -> Result<String, CliError> {
    let config = resolve_scenario(&args.config)?;
    let text = std::fs::read_to_string(&args.log).map_err(|e| CliError::io(&args.log, e))?;
    let log = parse_log(&text).map_err(|e| CliError::Usage(format!("{}: {e}", args.log.display())))?;
    let out = replay(&config, &log).map_err(|e| CliError::Usage(format!("{}: {e}", args.log.display())))?;
    let line = format!("hash={} clock={}", out.hash, out.clock);
    match out.claimed {
        Some(c) if c == out.hash => Ok(format!("{line} verified")),
        Some(c) => Err(CliError::Verify(format!("{line} mismatch: log claims {c}"))),
        None => Err(CliError::Verify(format!("{line} unverified: log claims no hash"))),
    }
}

pub fn cmd_serve(args: &ServeArgs) -> Result<String, CliError> {
    let config = configured(&args.scenario, &args.overrides)?;
    let rate = args.tick_rate.unwrap_or(config.tick_rate_hz);
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad --host/--port: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Usage(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Usage(format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Usage(e.to_string()))?;
        let server = Server::new(ServerOptions {
            max_clients: args.max_clients,
            autostart: args.autostart,
            ..ServerOptions::default()
        });
        let info = server
            .create_session(config, rate, args.key.clone(), Some(args.log.clone()))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        println!("listening on ws://{local} session={} key={}", info.id, info.key);
        let _ = std::io::stdout().flush();
        let accept = tokio::spawn(server.clone().serve(listener));
        tokio::signal::ctrl_c()
            .await
            .map_err(|e| CliError::Usage(format!("signal handler: {e}")))?;
        accept.abort();
        let summaries = server.shutdown().await;
        Ok(summaries
            .iter()
            .map(|s| format!("session={} clock={} hash={} log={}", s.id, s.clock, s.hash, args.log.display()))
            .collect::<Vec<_>>()
            .join("\n"))
    })
}

pub fn cmd_scenarios() -> String {
    microworld::engine::scenario::SHIPPED
        .iter()
        .map(|(name, _)| {
            let c = shipped(name).expect("shipped scenarios load");
            format!("{name}\t{:?}\t{}x{}", c.kind(), c.width, c.height).to_lowercase()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn main_with(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Scenarios => Ok(cmd_scenarios()),
    };
    match result {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::Verify(_) = e {
                println!("{e}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
