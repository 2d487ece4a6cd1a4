//! Command-line front end. Exit codes: 0 ok, 2 usage or invalid input,
//! 3 I/O failure.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::Value;

use crate::config::SessionConfig;
use crate::error::{Error, Result};
use crate::simulation::{run_session_with, SessionOutcome};
use crate::trajectory::{load_log, replay, trial_records, write_records, write_report, ReportLine};
use crate::transfer::{load_snapshot, GainTable};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "autogain", version, about = "Self-calibrating pointer gain: simulate, replay, analyze, export")]
pub struct Cli {
    /// Print progress to stderr; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a closed-loop session with the synthetic user.
    Simulate(SimulateArgs),
    /// Run a recorded trajectory log through the adaptation pipeline.
    Replay(ReplayArgs),
    /// Print the submovement report of a log as JSONL.
    Analyze(AnalyzeArgs),
    /// Summarise a gain table CSV.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Session config (JSON). Defaults to the trackpad preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Write gains/trial_<n>.csv every N trials; 0 disables.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// JSON array of {"name", "config"} overrides, run in parallel into <out>/<name>.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Only report this trial.
    #[arg(long)]
    pub trial: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub gains: PathBuf,
}

/// Parses `std::env::args` and runs the command.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_usage() {
        EXIT_USAGE
    } else {
        EXIT_IO
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, cli.verbose),
        Command::Replay(a) => replay_cmd(a, cli.verbose),
        Command::Analyze(a) => analyze(a),
        Command::Export(a) => export(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<SessionConfig> {
    match path {
        Some(p) => SessionConfig::load(p),
        None => Ok(SessionConfig::trackpad()),
    }
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn simulate(a: &SimulateArgs, verbose: u8) -> Result<()> {
    let mut base = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        base.seed = s;
    }
    if let Some(n) = a.trials {
        base.session.trials = n;
    }
    if let Some(n) = a.snapshot_every {
        base.session.snapshot_every = n;
    }
    base.validate()?;

    let Some(sweep) = &a.sweep else {
        return run_and_write(&base, &a.out, verbose);
    };
    let runs = load_sweep(sweep, &base)?;
    let results: Vec<Result<()>> = std::thread::scope(|s| {
        let handles: Vec<_> = runs
            .iter()
            .map(|(name, cfg)| {
                let dir = a.out.join(name);
                s.spawn(move || run_and_write(cfg, &dir, verbose))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("session thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepEntry {
    name: String,
    #[serde(default)]
    config: Value,
}

/// Reads a sweep file and merges each entry's overrides into `base`.
pub fn load_sweep(path: &Path, base: &SessionConfig) -> Result<Vec<(String, SessionConfig)>> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        path: origin.clone(),
        line: 0,
        reason: e.to_string(),
    })?;
    let entries: Vec<SweepEntry> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: origin.clone(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    let base_value = serde_json::to_value(base).expect("config serialises");
    let mut seen = std::collections::HashSet::new();
    entries
        .into_iter()
        .map(|e| {
            let bad_name = e.name.is_empty()
                || e.name.contains(['/', '\\'])
                || e.name == "."
                || e.name == "..";
            if bad_name || !seen.insert(e.name.clone()) {
                return Err(Error::invalid("sweep.name", format!("bad or duplicate name {:?}", e.name)));
            }
            let mut v = base_value.clone();
            merge(&mut v, e.config);
            let cfg = SessionConfig::from_json_value(v, &format!("{origin} [{}]", e.name))?;
            Ok((e.name, cfg))
        })
        .collect()
}

/// Deep-merges `patch` into `target`; objects merge key by key, anything
/// else replaces.
pub fn merge(target: &mut Value, patch: Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                merge(t.entry(k).or_insert(Value::Null), v);
            }
        }
        (t, p) => *t = p,
    }
}

/// Runs one session and writes its artifacts into `out`.
pub fn run_and_write(cfg: &SessionConfig, out: &Path, verbose: u8) -> Result<()> {
    let gains_dir = out.join("gains");
    create_dir(out)?;
    let every = cfg.session.snapshot_every;
    if every > 0 {
        create_dir(&gains_dir)?;
    }
    write_file(&out.join("config.json"), |w| writeln!(w, "{}", cfg.to_json_pretty()))?;

    let trials_path = out.join("trials.jsonl");
    let file = fs::File::create(&trials_path).map_err(|e| Error::io(&trials_path, e))?;
    let mut trials_w = BufWriter::new(file);
    let mut report = Vec::new();

    let outcome: SessionOutcome = run_session_with(cfg, |trial, table| {
        write_records(&mut trials_w, &trial_records(trial)).map_err(|e| Error::io(&trials_path, e))?;
        if let Some(a) = &trial.analysis {
            report.extend(a.records.iter().enumerate().map(|(i, r)| ReportLine::new(trial.index, i, r)));
        }
        let n = trial.index + 1;
        if every > 0 && n % every == 0 {
            write_file(&gains_dir.join(format!("trial_{n}.csv")), |w| table.write_csv(w))?;
        }
        if verbose > 1 {
            eprintln!("trial {n}: hit={} events={}", trial.hit, trial.events.len());
        }
        Ok(())
    })?;
    trials_w.flush().map_err(|e| Error::io(&trials_path, e))?;

    write_file(&out.join("metrics.csv"), |w| outcome.metrics.write_csv(w))?;
    write_file(&out.join("gains.csv"), |w| outcome.final_table.write_csv(w))?;
    write_file(&out.join("submovements.jsonl"), |w| write_report(w, &report))?;
    if verbose > 0 {
        eprintln!(
            "{}: {} trials, {} aborted, {} blocks",
            out.display(),
            outcome.trials.len(),
            outcome.metrics.aborted,
            outcome.metrics.blocks.len()
        );
    }
    Ok(())
}

fn replay_cmd(a: &ReplayArgs, verbose: u8) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let records = load_log(&a.log)?;
    let r = replay(&records, &cfg)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("gains.csv"), |w| r.table.write_csv(w))?;
    write_file(&a.out.join("submovements.jsonl"), |w| write_report(w, &r.report))?;
    if verbose > 0 {
        eprintln!(
            "replayed {} selected trials, {} submovements",
            r.selected_trials,
            r.report.len()
        );
    }
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let records = load_log(&a.log)?;
    let r = replay(&records, &cfg)?;
    let lines: Vec<ReportLine> = r
        .report
        .into_iter()
        .filter(|l| a.trial.is_none_or(|t| l.trial == t))
        .collect();
    let stdout = std::io::stdout();
    write_report(stdout.lock(), &lines).map_err(|e| Error::io("<stdout>", e))
}

/// Text summary of a gain table.
pub fn summarize(g: &GainTable) -> String {
    let mut s = String::from("bin  from_mps  to_mps    gain\n");
    for (j, gain) in g.gains().iter().enumerate() {
        s.push_str(&format!(
            "{j:>3}  {:>8.4}  {:>6.4}  {gain:>6.3}\n",
            g.bin_start(j),
            g.bin_start(j + 1)
        ));
    }
    let (mut lo, mut hi, mut peak) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for (j, &v) in g.gains().iter().enumerate() {
        lo = lo.min(v);
        if v > hi {
            hi = v;
            peak = j;
        }
    }
    s.push_str(&format!("min {lo}\nmax {hi}\npeak gain at {:.4} m/s\n", g.bin_center(peak)));
    s
}

fn export(a: &ExportArgs) -> Result<()> {
    let rows = load_snapshot(&a.gains)?;
    let g = crate::transfer::table_from_snapshot(&rows, None)?;
    print!("{}", summarize(&g));
    Ok(())
}
