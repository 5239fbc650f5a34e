//! Experiment orchestration for `uhlmann-dmrg`: config ingestion, the four
//! experiment kinds, and deterministic CSV/JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod config;
pub mod crossing;
pub mod diagnostics;
pub mod error;
pub mod families;
pub mod pec;
pub mod report;

pub use benchmark::run_dmrg_benchmark;
pub use config::{parse_config, ExperimentConfig, ExperimentKind, PolicyConfig};
pub use crossing::run_crossing_scan;
pub use diagnostics::run_gauge_diagnostics;
pub use error::{HarnessError, Result, ValidationIssue, ValidationReport};
pub use pec::run_pec_comparison;
pub use report::{ScanReport, Table};

/// Run whichever experiment `cfg` names.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ScanReport> {
    match cfg.experiment {
        ExperimentKind::CrossingScan => run_crossing_scan(cfg),
        ExperimentKind::PecComparison => run_pec_comparison(cfg),
        ExperimentKind::DmrgBenchmark => run_dmrg_benchmark(cfg),
        ExperimentKind::GaugeDiagnostics => run_gauge_diagnostics(cfg),
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/harness.md")]
mod book_harness {}
