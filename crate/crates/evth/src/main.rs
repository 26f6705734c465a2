use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use evth::{run, RunConfig};

/// Evolve a vacuum slice from a run configuration.
///
/// Exit status: 0 run completed, 2 a breakdown monitor fired, 3 numerical
/// failure, 4 configuration or input error. Set EVTH_THREADS to fix the
/// worker thread count.
#[derive(Parser)]
#[command(name = "evth", version)]
struct Cli {
    /// Run configuration (TOML).
    config: PathBuf,
    /// Continue the run saved in this checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
}

fn threads() -> Result<(), String> {
    let Ok(v) = std::env::var("EVTH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("EVTH_THREADS={v} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    // Usage errors exit 4 like any other configuration error; 2 means breakdown.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    if let Err(e) = threads() {
        eprintln!("evth: {e}");
        return ExitCode::from(4);
    }
    let result = RunConfig::load(&cli.config)
        .and_then(|cfg| run(&cfg, cli.resume.as_deref(), &mut std::io::stdout().lock()));
    match result {
        Ok(r) => {
            if let Some(f) = &r.failure {
                eprintln!("evth: {}: {f}", r.summary.termination);
            }
            ExitCode::from(r.exit_code as u8)
        }
        Err(e) => {
            eprintln!("evth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
