//! Scenario runner: reads a TOML configuration, sweeps the parameter points
//! in parallel and writes CSV tables plus a JSON manifest.
//!
//! Exit codes: 0 success (possibly with warnings in the manifest), 2 invalid
//! configuration, 3 solver failure, 1 I/O errors.

pub mod config;
pub mod manifest;
pub mod scenarios;
pub mod sweep;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::{ScenarioConfig, ScenarioKind};
pub use manifest::{RunManifest, Status};
pub use scenarios::{ScenarioError, ScenarioOutput, TaskRecord};
pub use sweep::sweep_parallel;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
    /// Replaces the configured seed.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub status: Status,
    pub message: Option<String>,
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub unconverged: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::ValidationError => 2,
            Status::SolverFailure => 3,
            Status::IoError => 1,
        }
    }
}

/// Worker count: explicit value, then the config, then all available cores.
pub fn resolve_workers(explicit: Option<usize>, cfg: &ScenarioConfig) -> usize {
    explicit
        .or(cfg.numerics.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).display().to_string()
}

/// Runs one scenario and writes `<out>/<scenario>/<table>.csv` and
/// `<out>/manifest.json`. The manifest is written on failure as well.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> RunReport {
    let started = manifest::timestamp();
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    log::info!("running {} with {} workers", cfg.scenario, opts.workers);
    let result = scenarios::run(&cfg, opts.workers);
    let scenario_dir = opts.out_dir.join(cfg.scenario.name());
    let mut outputs = Vec::new();
    let mut status = Status::Ok;
    let mut error = None;
    let mut failed_task = None;
    let mut tasks = Vec::new();
    let mut notes = Default::default();
    match result {
        Ok(out) => {
            for t in &out.tables {
                match t.write(&scenario_dir) {
                    Ok(p) => outputs.push(p),
                    Err(e) => {
                        status = Status::IoError;
                        error = Some(format!("cannot write {}: {e}", t.name));
                        break;
                    }
                }
            }
            tasks = out.tasks;
            notes = out.notes;
        }
        Err(e) => {
            error = Some(e.to_string());
            match e {
                ScenarioError::Validation(_) => status = Status::ValidationError,
                ScenarioError::Solver { index, label, .. } => {
                    status = Status::SolverFailure;
                    failed_task = Some(manifest::FailedTask { index, label });
                }
            }
        }
    }
    let unconverged = tasks.iter().any(|t| !t.converged);
    let manifest = RunManifest {
        tool: "dynrf",
        version: env!("CARGO_PKG_VERSION"),
        scenario: cfg.scenario.name().to_string(),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        seed: cfg.seed,
        workers: opts.workers,
        started,
        finished: manifest::timestamp(),
        status,
        error: error.clone(),
        failed_task,
        tolerances: Some(manifest::Tolerances { rtol: cfg.numerics.rtol, atol: cfg.numerics.atol }),
        unconverged,
        notes,
        tasks,
        outputs: outputs.iter().map(|p| relative(p, &opts.out_dir)).collect(),
    };
    let manifest_path = opts.out_dir.join("manifest.json");
    if let Err(e) = manifest.write(&manifest_path) {
        log::error!("cannot write manifest: {e}");
        if status == Status::Ok {
            status = Status::IoError;
            error = Some(format!("cannot write manifest: {e}"));
        }
    }
    RunReport { status, message: error, outputs, manifest: manifest_path, unconverged }
}

/// Manifest for a run whose configuration could not be read or parsed.
pub fn write_invalid_config_manifest(config_path: &Path, out_dir: &Path, message: &str, workers: usize) -> PathBuf {
    let now = manifest::timestamp();
    let manifest = RunManifest {
        tool: "dynrf",
        version: env!("CARGO_PKG_VERSION"),
        scenario: String::new(),
        config: serde_json::json!({ "path": config_path.display().to_string() }),
        seed: 0,
        workers,
        started: now.clone(),
        finished: now,
        status: Status::ValidationError,
        error: Some(message.to_string()),
        failed_task: None,
        tolerances: None,
        unconverged: false,
        notes: Default::default(),
        tasks: Vec::new(),
        outputs: Vec::new(),
    };
    let path = out_dir.join("manifest.json");
    if let Err(e) = manifest.write(&path) {
        log::error!("cannot write manifest: {e}");
    }
    path
}
