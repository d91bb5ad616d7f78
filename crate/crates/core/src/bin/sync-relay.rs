use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sync_relay::{load_scenario, run_scenario, summarize, write_csv, write_events_csv, RunError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "sync-relay", about = "Automatic synchronizing and protection relay simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the per-step CSV.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the event log here.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Print headline metrics to stdout.
        #[arg(long)]
        summary: bool,
    },
    /// Parse and check a scenario file without running it.
    Validate { scenario: PathBuf },
    Version,
}

const EXIT_INVALID: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_TRIPPED: u8 = 3;

fn load(path: &PathBuf) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    load_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &PathBuf, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

fn run(scenario: &PathBuf, out: &PathBuf, events: Option<&PathBuf>, summary: bool) -> Result<u8, (u8, String)> {
    let cfg = load(scenario).map_err(|e| (EXIT_INVALID, e))?;
    let (log, code, err) = match run_scenario(&cfg) {
        Ok(log) => (log, 0, None),
        Err(RunError::Invalid(e)) => return Err((EXIT_INVALID, e.to_string())),
        Err(RunError::Diverged { log, error }) => (log, EXIT_DIVERGED, Some(error.to_string())),
    };
    let io = |e| (EXIT_INVALID, e);
    write(out, &write_csv(&log, cfg.precision)).map_err(io)?;
    if let Some(p) = events {
        write(p, &write_events_csv(&log, cfg.precision)).map_err(io)?;
    }
    let s = summarize(&log);
    if summary {
        println!("synced: {}", s.synced);
        println!("t_close: {}", opt(s.t_close));
        println!("close_dphi: {}", opt(s.close_dphi));
        println!("close_slip: {}", opt(s.close_slip));
        println!("close_dv: {}", opt(s.close_dv));
        println!("settle_time: {}", opt(s.settle_time));
        println!("final_rpm: {}", opt(s.final_rpm));
        println!("final_v_ll: {}", opt(s.final_v_ll));
        println!("final_field: {}", opt(s.final_field));
        let trips: Vec<String> =
            s.trips.iter().map(|t| format!("{}@{:.3}", t.element.name(), t.t_trip)).collect();
        println!("trips: {}", if trips.is_empty() { "-".to_string() } else { trips.join(" ") });
    }
    if let Some(e) = err {
        return Err((code, e));
    }
    Ok(if s.trips.is_empty() { 0 } else { EXIT_TRIPPED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Version => {
            println!("sync-relay {}", sync_relay::VERSION);
            Ok(0)
        }
        Command::Validate { scenario } => load(&scenario).map(|_| 0).map_err(|e| (EXIT_INVALID, e)),
        Command::Run { scenario, out, events, summary } => run(&scenario, &out, events.as_ref(), summary),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
