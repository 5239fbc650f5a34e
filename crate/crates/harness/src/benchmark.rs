//! Ground-state energies from DMRG against exact diagonalization.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;
use uhlmann_dmrg::dmrg::{ground_state, SweepConfig};
use uhlmann_dmrg::models::{
    build_spin_chain_mpo, dense_spin_chain_hamiltonian, exact_diagonalization, initial_state, SpinChainSpec,
};
use uhlmann_dmrg::truncation::TruncationPolicy;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::report::{num, Provenance, ScanReport, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCase {
    pub sites: usize,
    pub field: f64,
    pub dmrg_energy: f64,
    pub exact_energy: f64,
    pub sweeps: usize,
    pub converged: bool,
}

impl BenchmarkCase {
    pub fn abs_error(&self) -> f64 {
        (self.dmrg_energy - self.exact_energy).abs()
    }
}

pub fn run_case(cfg: &ExperimentConfig, sites: usize, field: f64) -> Result<BenchmarkCase> {
    let b = &cfg.benchmark;
    let spec = SpinChainSpec { kind: b.kind, sites, coupling: b.coupling, field };
    let sweep = SweepConfig {
        max_bond: b.max_bond,
        num_sweeps: cfg.dmrg.num_sweeps,
        energy_tol: cfg.dmrg.energy_tol,
        policy: TruncationPolicy::standard().with_cutoff(1e-14),
        dense_limit: cfg.dmrg.dense_limit,
        lanczos_tol: cfg.dmrg.lanczos_tol,
        ..SweepConfig::default()
    };
    let result = ground_state(&build_spin_chain_mpo(&spec)?, &initial_state(&spec)?, &sweep)?;
    let (exact, _) = exact_diagonalization(&dense_spin_chain_hamiltonian(&spec)?, 1)?;
    Ok(BenchmarkCase {
        sites,
        field,
        dmrg_energy: result.energy,
        exact_energy: exact[0],
        sweeps: result.sweep_energies.len(),
        converged: result.converged,
    })
}

pub fn run_dmrg_benchmark(cfg: &ExperimentConfig) -> Result<ScanReport> {
    if cfg.experiment != ExperimentKind::DmrgBenchmark {
        return Err(HarnessError::Experiment("run_dmrg_benchmark needs a dmrg_benchmark config".into()));
    }
    cfg.validate().map_err(HarnessError::Config)?;
    let b = &cfg.benchmark;
    let cells: Vec<(usize, f64)> = b.sites.iter().flat_map(|&n| b.fields.iter().map(move |&h| (n, h))).collect();
    let cases: Vec<BenchmarkCase> = cells.par_iter().map(|&(n, h)| run_case(cfg, n, h)).collect::<Result<_>>()?;

    let mut table = Table::new(["sites", "field", "dmrg_energy", "exact_energy", "abs_error", "sweeps", "converged"]);
    for c in &cases {
        table.push(vec![
            c.sites.to_string(),
            num(c.field),
            num(c.dmrg_energy),
            num(c.exact_energy),
            num(c.abs_error()),
            c.sweeps.to_string(),
            u8::from(c.converged).to_string(),
        ]);
    }
    let max_error = cases.iter().map(BenchmarkCase::abs_error).fold(0.0, f64::max);
    let converged = cases.iter().all(|c| c.converged);
    let summary = json!({
        "kind": b.kind,
        "coupling": b.coupling,
        "max_bond": b.max_bond,
        "cases": cases.len(),
        "max_abs_error": max_error,
    });
    let mut tables = BTreeMap::new();
    tables.insert("dmrg_benchmark".to_string(), table);
    Ok(ScanReport {
        experiment: ExperimentKind::DmrgBenchmark,
        tables,
        summary,
        provenance: Provenance::of(cfg),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_chains_match_exact_energies() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::DmrgBenchmark);
        cfg.benchmark.sites = vec![4, 6];
        cfg.benchmark.fields = vec![0.7];
        let report = run_dmrg_benchmark(&cfg).unwrap();
        let t = report.table("dmrg_benchmark").unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.values("abs_error").unwrap().iter().all(|&e| e < 1e-9));
        assert!(report.converged);
    }
}
