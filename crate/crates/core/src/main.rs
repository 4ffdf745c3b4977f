use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tether_explore::harness::{montecarlo, run_batch, run_trial, summarize, Batch, ScenarioFile, SimOptions};

#[derive(Parser)]
#[command(version, about = "Multi-target exploration under connectivity maintenance")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one trial.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        /// Also record reference-filter outputs.
        #[arg(long)]
        filter: bool,
    },
    /// Run a Monte Carlo batch.
    Mc {
        #[arg(long)]
        batch: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Five-number summaries of a metrics CSV.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

const FAULT: u8 = 2;
const TIMEOUT: u8 = 3;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> tether_explore::Result<u8> {
    match cli.cmd {
        Cmd::Run {
            scenario,
            seed,
            trace_dir,
            filter,
        } => {
            let sc = ScenarioFile::load(&scenario)?.instantiate(seed)?;
            let opts = SimOptions {
                traces: trace_dir.is_some(),
                filter,
            };
            let out = run_trial(&sc, opts);
            println!("{}", serde_json::to_string_pretty(&out.metrics).expect("metrics serialize"));
            if let (Some(dir), Some(tr)) = (trace_dir, &out.traces) {
                tr.write(dir)?;
            }
            Ok(match &out.fault {
                Some(e) => {
                    eprintln!("fault: {e}");
                    if e.is_safety_fault() {
                        FAULT
                    } else {
                        1
                    }
                }
                None if !out.metrics.completed => {
                    eprintln!("timeout after {:.1} s", out.metrics.completion_time);
                    TIMEOUT
                }
                None => 0,
            })
        }
        Cmd::Mc { batch, out, jobs } => {
            let b = Batch::load(&batch)?;
            let rows = run_batch(&b, jobs)?;
            montecarlo::write_csv(&out, &rows)?;
            let faults = rows.iter().filter(|r| !r.fault.is_empty() && r.fault != "timeout").count();
            let timeouts = rows.iter().filter(|r| r.fault == "timeout").count();
            eprintln!("{} trials, {faults} faults, {timeouts} timeouts", rows.len());
            Ok(if faults > 0 {
                FAULT
            } else if timeouts > 0 {
                TIMEOUT
            } else {
                0
            })
        }
        Cmd::Summarize { input } => {
            let rows = montecarlo::read_csv(&input)?;
            let mut out = std::io::stdout().lock();
            for g in summarize(&rows)? {
                // a closed pipe (e.g. `| head`) is not an error
                if write!(out, "{g}").is_err() {
                    break;
                }
            }
            Ok(0)
        }
    }
}
