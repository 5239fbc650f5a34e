//! Command-line front end: config ingestion, experiment dispatch, output
//! files and run manifests.
//!
//! Exit codes:
//!
//! * `0`: success, every solve converged;
//! * `1`: the config could not be read or failed validation, or the output
//!   directory is unwritable. Nothing is written;
//! * `2`: a numerical failure or a solve that hit its sweep limit. Outputs
//!   that exist are still written, with convergence flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use uhlmann_dmrg_harness::report::sha256_hex;
use uhlmann_dmrg_harness::{parse_config, run_experiment, ExperimentConfig, ExperimentKind, HarnessError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "uhlmann-dmrg", version, about = "Run uhlmann-dmrg experiments from TOML configs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment named in the config.
    Run(RunArgs),
    /// Parse and validate a config without running it.
    Validate {
        config: PathBuf,
    },
    /// Run a config that must be a crossing_scan.
    CrossingScan(RunArgs),
    /// Run a config that must be a pec_comparison.
    PecComparison(RunArgs),
    /// Run a config that must be a dmrg_benchmark.
    DmrgBenchmark(RunArgs),
    /// Run a config that must be a gauge_diagnostics.
    GaugeDiagnostics(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel parts of an experiment.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    /// `None` for the manifest itself.
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_path: String,
    pub config_sha256: String,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<ManifestEntry>,
    pub exit_status: i32,
    pub converged: bool,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("manifest serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Read and validate a config file; the error is the text to print.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text).map_err(|report| format!("{}: {report}", path.display()))
}

/// Create `dir` and check a file can be written into it.
fn ensure_writable(dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)
}

pub fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.as_str()))
}

fn write_manifest(dir: &Path, manifest: &mut RunManifest) -> Result<(), String> {
    manifest.outputs.push(ManifestEntry { path: MANIFEST_NAME.to_string(), sha256: None });
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, manifest.to_json()).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Run `args.config`, requiring its kind to be `expected` when given.
pub fn run(args: &RunArgs, expected: Option<ExperimentKind>) -> i32 {
    let cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_INVALID;
        }
    };
    if let Some(kind) = expected {
        if cfg.experiment != kind {
            eprintln!(
                "{}: experiment is `{}`, but this subcommand runs `{}`",
                args.config.display(),
                cfg.experiment.as_str(),
                kind.as_str()
            );
            return EXIT_INVALID;
        }
    }
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(usize::from(n)).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return EXIT_INVALID;
        }
    }
    let dir = output_dir(&cfg, args.out.as_deref());
    if let Err(e) = ensure_writable(&dir) {
        eprintln!("output directory {} is not writable: {e}", dir.display());
        return EXIT_INVALID;
    }

    let mut manifest = RunManifest {
        experiment: cfg.experiment.as_str().to_string(),
        config_path: args.config.display().to_string(),
        config_sha256: sha256_hex(cfg.canonical_json().as_bytes()),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_at: now(),
        finished_at: String::new(),
        outputs: Vec::new(),
        exit_status: EXIT_OK,
        converged: false,
        error: None,
    };
    let status = match run_experiment(&cfg) {
        Ok(report) => match report.render() {
            Ok(files) => {
                for (name, contents) in &files {
                    let path = dir.join(name);
                    if let Err(e) = fs::write(&path, contents) {
                        eprintln!("cannot write {}: {e}", path.display());
                        return EXIT_INVALID;
                    }
                    manifest.outputs.push(ManifestEntry { path: name.clone(), sha256: Some(sha256_hex(contents.as_bytes())) });
                }
                manifest.converged = report.converged;
                if report.converged {
                    EXIT_OK
                } else {
                    eprintln!("warning: at least one solve did not converge; see the converged columns");
                    EXIT_NUMERICAL
                }
            }
            Err(e) => {
                manifest.error = Some(e.to_string());
                EXIT_NUMERICAL
            }
        },
        Err(HarnessError::Config(report)) => {
            eprintln!("{report}");
            return EXIT_INVALID;
        }
        Err(e) => {
            eprintln!("error: {e}");
            manifest.error = Some(e.to_string());
            EXIT_NUMERICAL
        }
    };
    manifest.exit_status = status;
    manifest.finished_at = now();
    if let Err(msg) = write_manifest(&dir, &mut manifest) {
        eprintln!("{msg}");
        return EXIT_INVALID;
    }
    status
}

pub fn validate(path: &Path) -> i32 {
    match load_config(path) {
        Ok(cfg) => {
            println!("{}: valid {} config", path.display(), cfg.experiment.as_str());
            EXIT_OK
        }
        Err(msg) => {
            eprintln!("{msg}");
            EXIT_INVALID
        }
    }
}

pub fn execute(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run(args) => run(args, None),
        Command::Validate { config } => validate(config),
        Command::CrossingScan(args) => run(args, Some(ExperimentKind::CrossingScan)),
        Command::PecComparison(args) => run(args, Some(ExperimentKind::PecComparison)),
        Command::DmrgBenchmark(args) => run(args, Some(ExperimentKind::DmrgBenchmark)),
        Command::GaugeDiagnostics(args) => run(args, Some(ExperimentKind::GaugeDiagnostics)),
    }
}
