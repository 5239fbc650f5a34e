//! Gauge-layer diagnostics on seeded random families.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use uhlmann_dmrg::gauge::{
    action_functional, categorical_potential_1, categorical_potential_2, covariant_derivative, curvature_field,
    default_coherence_cube, default_coherence_matrix, gauge_charge_residual, gauge_potential_track,
    gauge_transform, pure_gauge_potential, purify, ActionMode, ActionParams, CommutatorConvention,
    DensityMatrix, GaugePotential, PotentialLevel,
};
use uhlmann_dmrg::linalg::{self, c, CMatrix, I};
use uhlmann_dmrg::spectral::{derivative_overlaps, DiffScheme, HermitianMatrix, SpectralTrack};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::families::{random_hermitian, DensityFamily, UnitaryFamily};
use crate::report::{num, Provenance, ScanReport, Table};

/// Diagnostics for one random family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDiagnostics {
    pub potential_residual: f64,
    pub cat1_residual: f64,
    pub cat2_residual: f64,
    pub covariant_action: f64,
    pub scalar_action: f64,
    pub covariance_residual: f64,
    pub charge_residual: f64,
}

fn uniform(t0: f64, h: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t0 + h * k as f64).collect()
}

fn densities(fam: &DensityFamily, grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    Ok(grid.iter().map(|&t| fam.density(t)).collect::<uhlmann_dmrg::Result<_>>()?)
}

pub fn family_diagnostics(
    cfg: &ExperimentConfig,
    fam: &DensityFamily,
    v: &UnitaryFamily,
) -> Result<FamilyDiagnostics> {
    let dg = &cfg.diagnostics;
    let grid = uniform(0.0, dg.spacing, dg.grid_points);
    let mid = dg.grid_points / 2;
    let rhos = densities(fam, &grid)?;
    let amps = rhos.iter().map(purify).collect::<uhlmann_dmrg::Result<Vec<_>>>()?;
    let a = gauge_potential_track(&amps, &grid)?;
    let mats = rhos
        .iter()
        .map(|r| HermitianMatrix::new(r.matrix().clone()))
        .collect::<uhlmann_dmrg::Result<Vec<_>>>()?;
    let track = SpectralTrack::build(&grid, &mats)?;
    let cm = default_coherence_matrix(&track, mid)?;
    let a1 = categorical_potential_1(&a.values[mid], &cm, &rhos[mid])?;
    let h_op = default_coherence_cube(&track, mid)?.operator(&track.points()[mid].eigenvectors)?;
    let a2 = categorical_potential_2(&a1, &h_op, &cm)?;
    // Residuals of the unsymmetrized sums.
    let c_op = cm.operator();
    let raw1 = a.values[mid].matrix() - linalg::commutator(c_op.matrix(), rhos[mid].matrix()) * I;
    let raw2 = a1.matrix() - linalg::commutator(h_op.matrix(), c_op.matrix()) * I;
    let covariant = ActionParams::default();
    let scalar = ActionParams { mode: ActionMode::ScalarLike, ..covariant };
    let charge = gauge_charge_residual(&rhos, &a, mid, 1e-5, &covariant)?;

    let h = dg.covariance_spacing;
    let local = uniform(grid[mid] - h, h, 3);
    let lrhos = densities(fam, &local)?;
    let lamps = lrhos.iter().map(purify).collect::<uhlmann_dmrg::Result<Vec<_>>>()?;
    let la = gauge_potential_track(&lamps, &local)?;
    let d = covariant_derivative(&lrhos, &la, 1)?;
    let moved = (0..3)
        .map(|k| gauge_transform(&lrhos[k], &la.values[k], &v.value(local[k])?, &v.derivative(local[k])?))
        .collect::<uhlmann_dmrg::Result<Vec<_>>>()?;
    let rhos2: Vec<DensityMatrix> = moved.iter().map(|m| m.rho.clone()).collect();
    let a_moved = GaugePotential::new(local.clone(), moved.into_iter().map(|m| m.potential).collect(), PotentialLevel::Base)?;
    let d2 = covariant_derivative(&rhos2, &a_moved, 1)?;
    let vk = v.value(local[1])?;

    Ok(FamilyDiagnostics {
        potential_residual: a.hermitian_residual(),
        cat1_residual: linalg::hermitian_residual(&raw1).max(linalg::hermitian_residual(a1.matrix())),
        cat2_residual: linalg::hermitian_residual(&raw2).max(linalg::hermitian_residual(a2.matrix())),
        covariant_action: action_functional(&rhos, &a, &covariant)?,
        scalar_action: action_functional(&rhos, &a, &scalar)?,
        covariance_residual: linalg::max_abs(&(d2 - &vk * d * vk.adjoint())),
        charge_residual: charge.amax(),
    })
}

/// `max |D + D^dagger|` of the central derivative overlaps at spacing `h`.
pub fn antisymmetry_defect(gs: &[CMatrix; 3], h: f64) -> Result<f64> {
    let t0 = 0.3;
    let grid = [t0 - h, t0, t0 + h];
    let mats: Vec<HermitianMatrix> = grid
        .iter()
        .map(|&t| HermitianMatrix::from_hermitian_part(&(&gs[0] + &gs[1] * c(t, 0.0) + &gs[2] * c(t * t, 0.0))))
        .collect();
    let track = SpectralTrack::build(&grid, &mats)?;
    let d = derivative_overlaps(&track, 1, DiffScheme::Central)?;
    Ok(linalg::max_abs(&(&d + d.adjoint())))
}

/// Largest `|F|` of a pure gauge sampled on an `n x n` grid over `[0, 0.4]^2`.
pub fn pure_gauge_curvature(gs: &[CMatrix; 3], n: usize) -> Result<f64> {
    let axis: Vec<f64> = (0..n).map(|k| 0.4 * k as f64 / (n - 1) as f64).collect();
    let mut samples = Vec::with_capacity(n * n);
    for &x in &axis {
        for &y in &axis {
            samples.push(
                linalg::expm_i(&gs[0], x)? * linalg::expm_i(&gs[1], y)? * linalg::expm_i(&gs[2], x * y)?,
            );
        }
    }
    let a = pure_gauge_potential(axis.clone(), axis, &samples)?;
    Ok(curvature_field(&a, CommutatorConvention::Hermitian)?.max_norm())
}

fn ratio(prev: Option<f64>, cur: f64) -> String {
    match prev {
        Some(p) if cur != 0.0 => num(p / cur),
        _ => String::new(),
    }
}

pub fn run_gauge_diagnostics(cfg: &ExperimentConfig) -> Result<ScanReport> {
    if cfg.experiment != ExperimentKind::GaugeDiagnostics {
        return Err(HarnessError::Experiment("run_gauge_diagnostics needs a gauge_diagnostics config".into()));
    }
    cfg.validate().map_err(HarnessError::Config)?;
    let dg = &cfg.diagnostics;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut families = Table::new([
        "family",
        "potential_residual",
        "cat1_residual",
        "cat2_residual",
        "covariant_action",
        "scalar_action",
        "covariance_residual",
        "charge_residual",
    ]);
    let mut all = Vec::with_capacity(dg.families);
    for i in 0..dg.families {
        let fam = DensityFamily::random(dg.dim, &mut rng);
        let v = UnitaryFamily::random(dg.dim, &mut rng);
        let f = family_diagnostics(cfg, &fam, &v)?;
        families.push(vec![
            i.to_string(),
            num(f.potential_residual),
            num(f.cat1_residual),
            num(f.cat2_residual),
            num(f.covariant_action),
            num(f.scalar_action),
            num(f.covariance_residual),
            num(f.charge_residual),
        ]);
        all.push(f);
    }
    let grid = uniform(0.0, dg.spacing, dg.grid_points);
    let constant = vec![DensityFamily::random(dg.dim, &mut rng).density(0.0)?; grid.len()];
    let constant_action =
        action_functional(&constant, &GaugePotential::zero(grid.clone(), dg.dim), &ActionParams::default())?;

    let real = |m: CMatrix| m.map(|z| c(z.re, 0.0));
    let sym = [0, 1, 2].map(|_| real(random_hermitian(dg.dim, &mut rng)));
    let gens = [0, 1, 2].map(|_| random_hermitian(2, &mut rng));
    let mut refinement = Table::new([
        "level",
        "spacing",
        "antisymmetry_defect",
        "antisymmetry_ratio",
        "curvature_points",
        "pure_gauge_curvature",
        "curvature_ratio",
    ]);
    let (mut prev_a, mut prev_f) = (None, None);
    let mut ratios = (Vec::new(), Vec::new());
    for level in 0..dg.refinement_levels {
        let h = dg.base_spacing / 2f64.powi(level as i32);
        let n = 4 * 2usize.pow(level as u32) + 1;
        let defect = antisymmetry_defect(&sym, h)?;
        let curv = pure_gauge_curvature(&gens, n)?;
        if let (Some(pa), Some(pf)) = (prev_a, prev_f) {
            ratios.0.push(pa / defect);
            ratios.1.push(pf / curv);
        }
        refinement.push(vec![
            level.to_string(),
            num(h),
            num(defect),
            ratio(prev_a, defect),
            n.to_string(),
            num(curv),
            ratio(prev_f, curv),
        ]);
        (prev_a, prev_f) = (Some(defect), Some(curv));
    }

    let max = |f: fn(&FamilyDiagnostics) -> f64| all.iter().map(f).fold(0.0, f64::max);
    let min_action = all.iter().map(|f| f.covariant_action).fold(f64::INFINITY, f64::min);
    let summary = json!({
        "families": dg.families,
        "dim": dg.dim,
        "max_potential_residual": max(|f| f.potential_residual),
        "max_cat1_residual": max(|f| f.cat1_residual),
        "max_cat2_residual": max(|f| f.cat2_residual),
        "max_covariance_residual": max(|f| f.covariance_residual),
        "min_covariant_action": min_action,
        "constant_family_action": constant_action,
        "antisymmetry_ratios": ratios.0,
        "curvature_ratios": ratios.1,
    });
    let mut tables = BTreeMap::new();
    tables.insert("gauge_families".to_string(), families);
    tables.insert("gauge_refinement".to_string(), refinement);
    Ok(ScanReport {
        experiment: ExperimentKind::GaugeDiagnostics,
        tables,
        summary,
        provenance: Provenance::of(cfg),
        converged: true,
    })
}
