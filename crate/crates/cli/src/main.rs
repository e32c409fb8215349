use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dynrf_cli::{resolve_workers, run_scenario, write_invalid_config_manifest, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(name = "dynrf", version, about = "Photon statistics of pulsed resonance fluorescence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config file.
    Run {
        config: PathBuf,
        /// Worker threads; defaults to the config value or all cores.
        #[arg(long, env = "DYNRF_WORKERS")]
        workers: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, workers, out, seed, quiet } = cli.command;
    let level = if quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            write_invalid_config_manifest(&config, &out, &e.to_string(), workers.unwrap_or(1));
            return ExitCode::from(2);
        }
    };
    if workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    let opts = RunOptions { out_dir: out, workers: resolve_workers(workers, &cfg), seed };
    let report = run_scenario(&cfg, &opts);
    if let Some(m) = &report.message {
        eprintln!("error: {m}");
    }
    if report.unconverged {
        log::warn!("some tasks did not converge; see {}", report.manifest.display());
    }
    for p in &report.outputs {
        log::info!("wrote {}", p.display());
    }
    ExitCode::from(report.exit_code() as u8)
}
