use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use opplab_core::experiments::{run_with_workers, Config, ExperimentId};

/// Run one named experiment and write its CSVs and JSON report.
#[derive(Parser, Debug)]
#[command(name = "opplab", version)]
struct Args {
    /// Experiment id, E1 to E8.
    experiment: ExperimentId,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the `seed` key of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(args: &Args) -> anyhow::Result<bool> {
    let mut cfg = Config::from_file(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.set("seed", seed);
    }
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_with_workers(args.experiment, &cfg, &args.out, workers)?;
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{verdict}  {}  value={} target={} tol={} ({})", c.name, c.value, c.target, c.tolerance, c.kind);
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    println!(
        "{} {}: {} in {:.2}s, outputs in {}",
        report.experiment,
        report.title,
        if report.pass { "PASS" } else { "FAIL" },
        report.wall_time_s,
        args.out.display()
    );
    Ok(report.pass)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
