//! Potential-energy-curve comparison of truncation policies on a spin
//! chain, against exact diagonalization.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;
use uhlmann_dmrg::dmrg::{continuation_scan, ContinuationScan, PenaltyWeights, SweepConfig};
use uhlmann_dmrg::linalg::CVector;
use uhlmann_dmrg::models::{
    build_spin_chain_mpo, dense_spin_chain_hamiltonian, exact_diagonalization, initial_state, linspace,
    SpinChainSpec,
};
use uhlmann_dmrg::truncation::PolicyKind;

use crate::config::{ExperimentConfig, ExperimentKind, PolicyConfig, SearchObjective};
use crate::error::{HarnessError, Result};
use crate::report::{improvement_percent, num, Provenance, ScanReport, Table};

/// Exact ground energy and vector at each grid point.
#[derive(Debug, Clone)]
pub struct ExactCurve {
    pub grid: Vec<f64>,
    pub energies: Vec<f64>,
    pub vectors: Vec<CVector>,
}

impl ExactCurve {
    pub fn compute(cfg: &ExperimentConfig, grid: &[f64]) -> Result<Self> {
        let pairs: Vec<(f64, CVector)> = grid
            .par_iter()
            .map(|&f| {
                let h = dense_spin_chain_hamiltonian(&spec_at(cfg, f))?;
                let (e, v) = exact_diagonalization(&h, 1)?;
                Ok((e[0], v.into_iter().next().expect("one eigenpair")))
            })
            .collect::<Result<_>>()?;
        let (energies, vectors) = pairs.into_iter().unzip();
        Ok(Self { grid: grid.to_vec(), energies, vectors })
    }

    fn vector_at(&self, f: f64) -> uhlmann_dmrg::Result<CVector> {
        self.grid
            .iter()
            .position(|&g| g == f)
            .map(|k| self.vectors[k].clone())
            .ok_or_else(|| uhlmann_dmrg::Error::Grid(format!("no exact vector at {f}")))
    }
}

fn spec_at(cfg: &ExperimentConfig, field: f64) -> SpinChainSpec {
    let sc = &cfg.spin_chain;
    SpinChainSpec { kind: sc.kind, sites: sc.sites, coupling: sc.coupling, field }
}

/// Sweep settings for one policy; the kept-state cap never exceeds `max_bond`.
pub fn sweep_config(cfg: &ExperimentConfig, policy: &PolicyConfig) -> SweepConfig {
    let d = &cfg.dmrg;
    let mut p = policy.to_policy();
    p.max_kept = p.max_kept.min(d.max_bond);
    SweepConfig {
        max_bond: d.max_bond,
        num_sweeps: d.num_sweeps,
        energy_tol: d.energy_tol,
        policy: p,
        penalty: PenaltyWeights { lambda1: d.penalty_lambda1, lambda2: d.penalty_lambda2 },
        dense_limit: d.dense_limit,
        lanczos_tol: d.lanczos_tol,
        ..SweepConfig::default()
    }
}

/// Grid values with zero moved to the front, duplicates dropped.
fn zero_first(grid: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    for &x in grid {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Candidate coefficient settings for `base`, the all-zero one first.
///
/// Only the coefficients the policy kind actually reads are varied.
pub fn coefficient_candidates(cfg: &ExperimentConfig, base: &PolicyConfig) -> Vec<PolicyConfig> {
    let g = &cfg.coefficient_grids;
    let (first, second): (Vec<f64>, Vec<f64>) = match base.kind {
        PolicyKind::Standard => return vec![base.clone()],
        PolicyKind::Uhlmann => (zero_first(&g.gamma1), vec![0.0]),
        PolicyKind::Categorified => (zero_first(&g.gamma1), zero_first(&g.gamma2)),
        PolicyKind::CoherenceEigenvalue => (zero_first(&g.lambda1), vec![0.0]),
        PolicyKind::CoherenceEigenvalue2 => (zero_first(&g.lambda1), zero_first(&g.lambda2)),
    };
    let mut out = Vec::new();
    for &a in &first {
        for &b in &second {
            let mut p = base.clone();
            if base.kind.probability_scale() {
                (p.lambda1, p.lambda2) = (a, b);
            } else {
                (p.gamma1, p.gamma2) = (a, b);
            }
            out.push(p);
        }
    }
    out
}

/// One policy scan and its window metrics.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub policy: PolicyConfig,
    pub scan: ContinuationScan,
    /// `max |E - E_exact|` over the window points.
    pub window_error: f64,
    pub max_error: f64,
    pub min_window_fidelity: f64,
}

impl MethodRun {
    fn better_than(&self, other: &MethodRun, objective: SearchObjective) -> bool {
        match objective {
            SearchObjective::EnergyError => self.window_error < other.window_error,
            SearchObjective::Fidelity => self.min_window_fidelity > other.min_window_fidelity,
        }
    }

    pub fn errors(&self, exact: &ExactCurve) -> Vec<f64> {
        self.scan.points.iter().zip(&exact.energies).map(|(p, e)| (p.energy - e).abs()).collect()
    }
}

/// Grid indices within `half_width` of any window center.
pub fn window_indices(cfg: &ExperimentConfig, grid: &[f64]) -> Result<Vec<usize>> {
    let centers = cfg.window_centers();
    let idx: Vec<usize> = (0..grid.len())
        .filter(|&k| centers.iter().any(|c| (grid[k] - c).abs() <= cfg.window.half_width))
        .collect();
    if idx.is_empty() {
        return Err(HarnessError::Experiment(format!(
            "no grid point lies within {} of the window centers {centers:?}",
            cfg.window.half_width
        )));
    }
    Ok(idx)
}

pub fn run_method(
    cfg: &ExperimentConfig,
    policy: &PolicyConfig,
    exact: &ExactCurve,
    window: &[usize],
) -> Result<MethodRun> {
    let sweep = sweep_config(cfg, policy);
    let init = initial_state(&spec_at(cfg, exact.grid[0]))?;
    let oracle = |f: f64| exact.vector_at(f);
    let scan = continuation_scan(
        |f| build_spin_chain_mpo(&spec_at(cfg, f)),
        &exact.grid,
        &init,
        &sweep,
        Some(&oracle),
    )?;
    let errors: Vec<f64> = scan.points.iter().zip(&exact.energies).map(|(p, e)| (p.energy - e).abs()).collect();
    let fid = scan.fidelity_to_oracle.clone().unwrap_or_default();
    Ok(MethodRun {
        policy: policy.clone(),
        window_error: window.iter().map(|&k| errors[k]).fold(0.0, f64::max),
        max_error: errors.iter().copied().fold(0.0, f64::max),
        min_window_fidelity: window.iter().map(|&k| fid[k]).fold(f64::INFINITY, f64::min),
        scan,
    })
}

/// Every candidate run for each configured policy, then the chosen one.
///
/// A candidate replaces the incumbent only when strictly better, and the
/// all-zero candidate is evaluated first, so a searched policy never ends
/// up worse than its zero-coefficient (standard-equivalent) setting.
pub fn grid_search_coefficients(
    cfg: &ExperimentConfig,
    exact: &ExactCurve,
    window: &[usize],
) -> Result<Vec<(Vec<MethodRun>, usize)>> {
    let candidates: Vec<Vec<PolicyConfig>> = cfg
        .policies
        .iter()
        .map(|p| if cfg.search.enabled { coefficient_candidates(cfg, p) } else { vec![p.clone()] })
        .collect();
    let cells: Vec<(usize, &PolicyConfig)> =
        candidates.iter().enumerate().flat_map(|(i, c)| c.iter().map(move |p| (i, p))).collect();
    let runs: Vec<(usize, MethodRun)> = cells
        .par_iter()
        .map(|&(i, p)| Ok((i, run_method(cfg, p, exact, window)?)))
        .collect::<Result<_>>()?;
    let mut grouped: Vec<Vec<MethodRun>> = vec![Vec::new(); cfg.policies.len()];
    for (i, run) in runs {
        grouped[i].push(run);
    }
    Ok(grouped
        .into_iter()
        .map(|runs| {
            let mut best = 0;
            for (j, r) in runs.iter().enumerate().skip(1) {
                if r.better_than(&runs[best], cfg.search.objective) {
                    best = j;
                }
            }
            (runs, best)
        })
        .collect())
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

pub fn run_pec_comparison(cfg: &ExperimentConfig) -> Result<ScanReport> {
    if cfg.experiment != ExperimentKind::PecComparison {
        return Err(HarnessError::Experiment("run_pec_comparison needs a pec_comparison config".into()));
    }
    cfg.validate().map_err(HarnessError::Config)?;
    let sc = &cfg.spin_chain;
    let grid = linspace(sc.field_min, sc.field_max, sc.points)?;
    let window = window_indices(cfg, &grid)?;
    let exact = ExactCurve::compute(cfg, &grid)?;
    let searched = grid_search_coefficients(cfg, &exact, &window)?;
    let labels: Vec<String> = cfg.policies.iter().map(PolicyConfig::label).collect();
    let chosen: Vec<&MethodRun> = searched.iter().map(|(runs, best)| &runs[*best]).collect();

    let mut columns = vec!["lambda".to_string(), "exact_energy".to_string(), "in_window".to_string()];
    for label in &labels {
        for suffix in [
            "energy",
            "error",
            "fidelity",
            "coherence_penalty",
            "curvature_penalty",
            "objective",
            "max_discarded_weight",
            "converged",
        ] {
            columns.push(format!("{label}_{suffix}"));
        }
    }
    let mut points = Table::new(columns);
    for k in 0..grid.len() {
        let mut row = vec![num(grid[k]), num(exact.energies[k]), flag(window.contains(&k))];
        for run in &chosen {
            let p = &run.scan.points[k];
            let discarded = run.scan.results[k]
                .truncation_log
                .iter()
                .map(|e| e.spectrum.discarded_weight)
                .fold(0.0, f64::max);
            row.extend([
                num(p.energy),
                num((p.energy - exact.energies[k]).abs()),
                num(p.fidelity.unwrap_or(f64::NAN)),
                num(p.coherence_penalty),
                num(p.curvature_penalty),
                num(p.objective),
                num(discarded),
                flag(p.converged),
            ]);
        }
        points.push(row);
    }

    let coefficient_columns = ["gamma1", "gamma2", "lambda1", "lambda2"];
    let coefficients = |p: &PolicyConfig| [p.gamma1, p.gamma2, p.lambda1, p.lambda2].map(num);
    let reference = chosen[0].window_error;
    let mut methods = Table::new(
        ["method", "kind"]
            .into_iter()
            .chain(coefficient_columns)
            .chain(["window_error", "max_error", "min_window_fidelity", "improvement_percent", "converged"]),
    );
    for (label, run) in labels.iter().zip(&chosen) {
        let mut row = vec![label.clone(), run.policy.kind.as_str().to_string()];
        row.extend(coefficients(&run.policy));
        row.extend([
            num(run.window_error),
            num(run.max_error),
            num(run.min_window_fidelity),
            num(improvement_percent(reference, run.window_error)),
            flag(run.scan.all_converged()),
        ]);
        methods.push(row);
    }

    let mut search = Table::new(
        ["method"]
            .into_iter()
            .chain(coefficient_columns)
            .chain(["window_error", "min_window_fidelity", "selected"]),
    );
    for (label, (runs, best)) in labels.iter().zip(&searched) {
        for (j, run) in runs.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend(coefficients(&run.policy));
            row.extend([num(run.window_error), num(run.min_window_fidelity), flag(j == *best)]);
            search.push(row);
        }
    }

    let converged = chosen.iter().all(|r| r.scan.all_converged());
    let summary = json!({
        "model": {
            "kind": sc.kind,
            "sites": sc.sites,
            "coupling": sc.coupling,
            "field_min": sc.field_min,
            "field_max": sc.field_max,
            "points": sc.points,
        },
        "max_bond": cfg.dmrg.max_bond,
        "window": { "centers": cfg.window_centers(), "half_width": cfg.window.half_width, "points": window.len() },
        "search": { "enabled": cfg.search.enabled, "objective": cfg.search.objective },
        "methods": labels.iter().zip(&chosen).map(|(label, run)| json!({
            "name": label,
            "kind": run.policy.kind.as_str(),
            "gamma1": run.policy.gamma1,
            "gamma2": run.policy.gamma2,
            "lambda1": run.policy.lambda1,
            "lambda2": run.policy.lambda2,
            "window_error": run.window_error,
            "max_error": run.max_error,
            "min_window_fidelity": run.min_window_fidelity,
            "improvement_percent": improvement_percent(reference, run.window_error),
            "converged": run.scan.all_converged(),
        })).collect::<Vec<_>>(),
    });
    let mut tables = BTreeMap::new();
    tables.insert("pec_points".to_string(), points);
    tables.insert("pec_methods".to_string(), methods);
    tables.insert("pec_grid_search".to_string(), search);
    Ok(ScanReport {
        experiment: ExperimentKind::PecComparison,
        tables,
        summary,
        provenance: Provenance::of(cfg),
        converged,
    })
}
