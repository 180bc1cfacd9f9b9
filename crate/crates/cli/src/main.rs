//! `lab`: run scenarios, list checks, export plot data.

use std::path::PathBuf;
use std::process::ExitCode;

use campanato::harness::{export_plot_data, resolve_output_dir, run_scenario, CheckId, CheckReport, PlotKind, Scenario, Status};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "lab", version, about = "Scenario runner for localized Campanato checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check in a scenario config and write JSON reports.
    Run {
        config: PathBuf,
        /// Output directory (overrides LAB_OUTPUT_DIR and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List known check ids.
    ListChecks,
    /// Turn a check report into CSV.
    Export {
        report: PathBuf,
        /// ratio_table, kernel_slice or norm_profile.
        #[arg(long)]
        kind: String,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

const USAGE: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListChecks => {
            for c in CheckId::ALL {
                let tier = if c.is_hard() { "hard" } else { "soft" };
                println!("{:<18} {tier}  {}", c.name(), c.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed } => run(config, out, seed),
        Command::Export { report, kind, output } => export(report, &kind, output),
    }
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let mut scenario = match Scenario::load(&config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return ExitCode::from(USAGE);
        }
    };
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let dir = resolve_output_dir(&scenario, out.as_deref());
    let (summary, reports) = match run_scenario(&scenario, &dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE);
        }
    };
    for r in &reports {
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Reported => "REPORT",
        };
        println!("{status:<6} {}", r.check.name());
        if let Some(w) = &r.witness {
            println!("       witness: {w}");
        }
    }
    println!("reports written to {}", dir.display());
    ExitCode::from(summary.exit_code() as u8)
}

fn export(report: PathBuf, kind: &str, output: Option<PathBuf>) -> ExitCode {
    let Some(kind) = PlotKind::parse(kind) else {
        eprintln!("error: unknown kind {kind:?} (ratio_table, kernel_slice, norm_profile)");
        return ExitCode::from(USAGE);
    };
    let parsed: Result<CheckReport, String> = std::fs::read_to_string(&report)
        .map_err(|e| e.to_string())
        .and_then(|s| serde_json::from_str(&s).map_err(|e| e.to_string()));
    let csv = match parsed.and_then(|r| export_plot_data(&r, kind).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", report.display());
            return ExitCode::from(USAGE);
        }
    };
    match output {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, csv) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(USAGE);
            }
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}
