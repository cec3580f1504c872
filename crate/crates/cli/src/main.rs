//! `ncc`: run experiments, sweep parameters and inspect the Nursery data.
//!
//! Exit status is 0 on success, 1 when the input (configuration, grid,
//! flags or data file) is invalid and 2 when a run fails.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncc_core::dataio::config::{load_config, validate_config, ExperimentConfig};
use ncc_core::dataio::nursery;
use ncc_core::harness::{self, sweep};
use ncc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "ncc", version, about = "Costly-feature contextual bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured policies and write results.
    Run(RunArgs),
    /// Grid-search one policy's parameters.
    Sweep(SweepArgs),
    /// Parse nursery.data and report or convert it.
    ParseNursery(ParseArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    /// Policy labels or kinds, comma separated.
    #[arg(long, value_delimiter = ',')]
    policy: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Only verify the row counts of the complete file.
    #[arg(long)]
    check: bool,
    /// Where to write the reduced CSV; standard output if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

const DEFAULT_OUTPUT: &str = "results";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::ParseNursery(a) => parse_nursery(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if is_input_error(&e) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn is_input_error(e: &Error) -> bool {
    e.is_validation() || matches!(e, Error::Parse { .. } | Error::UnknownCategory { .. })
}

fn validated(cfg: ExperimentConfig) -> Result<ExperimentConfig> {
    let issues = validate_config(&cfg);
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(issues))
    }
}

fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.run.output.clone()).unwrap_or_else(|| DEFAULT_OUTPUT.into())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.run.seed = s;
    }
    if let Some(h) = a.horizon {
        cfg.run.horizon = Some(h);
    }
    if let Some(r) = a.runs {
        cfg.run.runs = r;
    }
    if !a.policy.is_empty() {
        cfg.select_policies(&a.policy)?;
    }
    let out = output_dir(a.output, &cfg);
    cfg.run.output = Some(out.clone());
    let cfg = validated(cfg)?;

    eprintln!(
        "running {} policies x {} runs, horizon {}",
        cfg.policies.len(),
        cfg.run.runs,
        cfg.horizon()
    );
    let result = harness::run_experiment(&cfg)?;
    harness::write_run_outputs(&result, &cfg, &out)?;

    let stdout = io::stdout();
    let mut w = stdout.lock();
    let _ = writeln!(w, "{:<24} {:>12} {:>12} {:>12} {:>12}", "policy", "reward", "cost", "gain", "regret");
    for label in &result.policies {
        if let Some(t) = result.mean_totals(label) {
            let _ = writeln!(
                w,
                "{label:<24} {:>12.3} {:>12.3} {:>12.3} {:>12.3}",
                t.reward, t.cost, t.gain, t.expected_regret
            );
        }
    }
    let _ = writeln!(w, "results written to {}", out.display());
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let cfg = validated(load_config(&a.config)?)?;
    let grid_text = fs::read_to_string(&a.grid).map_err(|e| Error::Io {
        path: a.grid.clone(),
        source: e,
    })?;
    let grid = sweep::parse_grid(&grid_text)?;
    let out = output_dir(a.output, &cfg);
    let s = sweep::sweep(&cfg, &grid)?;
    sweep::write_sweep_outputs(&s, &cfg, &grid_text, &out)?;
    for r in &s.rows {
        println!(
            "{:<40} gain {:>10.3}  regret {:>10.3}{}",
            r.label,
            r.mean_total_gain,
            r.mean_final_cumulative_regret,
            if r.best { "  <- best" } else { "" }
        );
    }
    println!("results written to {}", out.display());
    Ok(())
}

fn parse_nursery(a: ParseArgs) -> Result<()> {
    let file = open(&a.input)?;
    let data = nursery::parse_nursery_counted(BufReader::new(file))?;
    let mut per_class = [0usize; nursery::CLASSES.len()];
    for r in &data.records {
        per_class[r.label] += 1;
    }
    let report = |w: &mut dyn Write| {
        let _ = writeln!(w, "rows read: {}", data.total_rows);
        let _ = writeln!(w, "rows kept: {}", data.records.len());
        for (name, n) in nursery::CLASSES.iter().zip(per_class) {
            let _ = writeln!(w, "  {name}: {n}");
        }
        for (name, n) in &data.dropped {
            let _ = writeln!(w, "dropped {name}: {n}");
        }
    };
    if a.check {
        report(&mut io::stdout());
        let mut problems = Vec::new();
        if data.total_rows != nursery::TOTAL_ROWS {
            problems.push(format!("expected {} rows, read {}", nursery::TOTAL_ROWS, data.total_rows));
        }
        if data.records.len() != nursery::RETAINED_ROWS {
            problems.push(format!("expected {} kept rows, found {}", nursery::RETAINED_ROWS, data.records.len()));
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        println!("ok");
        return Ok(());
    }
    report(&mut io::stderr());
    match a.output {
        Some(path) => {
            let f = fs::File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            nursery::write_reduced_csv(&data.records, io::BufWriter::new(f))
        }
        None => nursery::write_reduced_csv(&data.records, io::stdout().lock()),
    }
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
