use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use acs_bench::check::check_records;
use acs_bench::records::{
    estimates_path, estimates_text, parse_estimates, records_from_csv, records_to_csv, timing_csv, timing_path,
};
use acs_bench::{parse_config, run_grid, summarize, RunRecord};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "acs", about = "Run and check adaptive sparse recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of every cell in a config and write the records as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Per-cell statistics and scaling fits.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Summary CSV; fits go next to it with a `.fits.csv` suffix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute every success flag from the regenerated signal and stored estimate.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn read_records(path: &PathBuf) -> Result<Vec<RunRecord>, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    records_from_csv(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run { config, seed, out, jobs } => {
            let text = fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let cells = parse_config(&text).map_err(|e| format!("{}: {e}", config.display()))?;
            #[cfg(feature = "parallel")]
            if jobs > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()
                    .map_err(|e| e.to_string())?;
            }
            #[cfg(not(feature = "parallel"))]
            let _ = jobs;
            let outcomes = run_grid(&cells, seed);
            let records: Vec<RunRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
            let csv = records_to_csv(&records).map_err(|e| e.to_string())?;
            fs::write(&out, csv).map_err(|e| format!("{}: {e}", out.display()))?;
            fs::write(timing_path(&out), timing_csv(&records)).map_err(|e| e.to_string())?;
            let est = estimates_text(
                outcomes
                    .iter()
                    .filter_map(|o| o.estimate.as_ref().map(|e| (o.record.run_id.as_str(), e))),
            );
            fs::write(estimates_path(&out), est).map_err(|e| e.to_string())?;
            let failed = records.iter().filter(|r| r.status.starts_with("error")).count();
            eprintln!("{} runs written to {} ({failed} errored)", records.len(), out.display());
            Ok(true)
        }
        Command::Summarize { input, out } => {
            let records = read_records(&input)?;
            let summary = summarize(&records).map_err(|e| e.to_string())?;
            fs::write(&out, summary.cells_csv()).map_err(|e| format!("{}: {e}", out.display()))?;
            let mut fits = out.clone().into_os_string();
            fits.push(".fits.csv");
            fs::write(PathBuf::from(fits), summary.fits_csv()).map_err(|e| e.to_string())?;
            print!("{}", summary.text_table());
            Ok(true)
        }
        Command::Check { input } => {
            let records = read_records(&input)?;
            let est_path = estimates_path(&input);
            let text = fs::read_to_string(&est_path).map_err(|e| format!("{}: {e}", est_path.display()))?;
            let estimates = parse_estimates(&text).map_err(|e| e.to_string())?;
            let report = check_records(&records, &estimates);
            for (id, recorded, recomputed) in &report.mismatches {
                println!("mismatch {id}: recorded {recorded}, recomputed {recomputed}");
            }
            println!(
                "checked {} runs, skipped {}, {} mismatches",
                report.checked,
                report.skipped,
                report.mismatches.len()
            );
            Ok(report.mismatches.is_empty())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
