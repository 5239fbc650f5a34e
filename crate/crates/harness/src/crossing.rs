//! Avoided-crossing scan of the two-level model.
//!
//! The adiabatic eigenbasis is tracked along the `lambda` grid. A linear
//! traversal `lambda(t)` is integrated with the TDSE, and the adiabatic
//! populations of the evolving state serve as the weights `p` whose
//! charges feed each policy.

use std::collections::BTreeMap;

use serde_json::json;
use uhlmann_dmrg::linalg::{CMatrix, CVector};
use uhlmann_dmrg::models::{
    diabatic_energies, gaussian_transition_probability, landau_zener_reference, linspace, tdse_propagate,
    two_level_hamiltonian, TimeGrid, TwoLevelModel,
};
use uhlmann_dmrg::spectral::{derivative_overlaps, DiffScheme, HermitianMatrix, SpectralTrack};
use uhlmann_dmrg::truncation::{
    charge_first_order, charge_second_order, compute_weights, select_states, selection_scores,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::report::{num, Provenance, ScanReport, Table};

/// Scan grid, with `+-1/sqrt(2)` spliced in when requested.
pub fn crossing_grid(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let tl = &cfg.two_level;
    let mut grid = linspace(tl.lambda_min, tl.lambda_max, tl.points)?;
    if tl.include_crossings {
        let r = 0.5f64.sqrt();
        for c in [-r, r] {
            if c <= tl.lambda_min || c >= tl.lambda_max {
                continue;
            }
            match grid.iter().position(|&x| (x - c).abs() < 1e-12) {
                Some(k) => grid[k] = c,
                None => grid.push(c),
            }
        }
        grid.sort_by(f64::total_cmp);
    }
    Ok(grid)
}

/// `<a(k)|d^2 c(k)>` from the three-point stencil on the actual spacing.
fn second_overlaps(track: &SpectralTrack, k: usize) -> CMatrix {
    let g = track.grid();
    let v = |i: usize| &track.points()[i].eigenvectors;
    let (h1, h2) = (g[k] - g[k - 1], g[k + 1] - g[k]);
    let second = v(k + 1).scale(2.0 / (h2 * (h1 + h2))) - v(k).scale(2.0 / (h1 * h2))
        + v(k - 1).scale(2.0 / (h1 * (h1 + h2)));
    v(k).adjoint() * second
}

fn first_overlaps(track: &SpectralTrack, k: usize) -> Result<CMatrix> {
    let scheme = if k == 0 {
        DiffScheme::Forward
    } else if k + 1 == track.len() {
        DiffScheme::Backward
    } else {
        DiffScheme::Central
    };
    Ok(derivative_overlaps(track, k, scheme)?)
}

fn permute(m: &CMatrix, order: &[usize]) -> CMatrix {
    CMatrix::from_fn(order.len(), order.len(), |i, j| m[(order[i], order[j])])
}

/// Adiabatic populations of the TDSE state at every grid point, and the
/// largest norm drift along the way.
fn traverse(model: &TwoLevelModel, cfg: &ExperimentConfig, psi0: CVector) -> Result<(Vec<CVector>, f64)> {
    let tl = &cfg.two_level;
    let grid = &model.lambda_grid;
    let span = tl.lambda_max - tl.lambda_min;
    let time_of = |l: f64| tl.sweep_duration * (l - tl.lambda_min) / span;
    let lambda_of = |t: f64| tl.lambda_min + span * t / tl.sweep_duration;
    let mut states = vec![psi0];
    let mut drift: f64 = 0.0;
    for k in 1..grid.len() {
        let (t0, t1) = (time_of(grid[k - 1]), time_of(grid[k]));
        let steps = ((t1 - t0) / tl.max_dt).ceil().max(1.0) as usize;
        let tg = TimeGrid::new(t0, t1, steps)?;
        let start = states.last().expect("initial state").clone();
        let traj = tdse_propagate(|t| two_level_hamiltonian(model, lambda_of(t)), &start, &tg)?;
        for s in &traj {
            drift = drift.max((s.norm() - 1.0).abs());
        }
        let mut end = traj.last().expect("non-empty trajectory").clone();
        end.unscale_mut(end.norm());
        states.push(end);
    }
    Ok((states, drift))
}

pub fn run_crossing_scan(cfg: &ExperimentConfig) -> Result<ScanReport> {
    if cfg.experiment != ExperimentKind::CrossingScan {
        return Err(HarnessError::Experiment("run_crossing_scan needs a crossing_scan config".into()));
    }
    cfg.validate().map_err(HarnessError::Config)?;
    let grid = crossing_grid(cfg)?;
    let model = TwoLevelModel::new(cfg.two_level.coupling, grid.clone())?;
    let mats: Vec<HermitianMatrix> = grid.iter().map(|&l| two_level_hamiltonian(&model, l)).collect();
    let track = SpectralTrack::build(&grid, &mats)?;
    let psi0 = track.points()[0].eigenvectors.column(0).into_owned();
    let (states, drift) = traverse(&model, cfg, psi0)?;

    let policies: Vec<_> = cfg.policies.iter().map(|p| (p.label(), p.to_policy())).collect();
    let mut columns: Vec<String> = [
        "lambda",
        "eps1",
        "eps2",
        "energy_lower",
        "energy_upper",
        "gap",
        "p_gaussian",
        "p_tdse",
        "pop_lower",
        "pop_upper",
        "q1_lower",
        "q1_upper",
        "q2_lower",
        "q2_upper",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for (label, _) in &policies {
        for suffix in ["score_lower", "score_upper", "kept_lower", "kept_upper"] {
            columns.push(format!("{label}_{suffix}"));
        }
    }
    let mut table = Table::new(columns);
    let mut differs = vec![0usize; policies.len()];
    let n = grid.len();
    for k in 0..n {
        let point = &track.points()[k];
        let (e1, e2) = diabatic_energies(grid[k]);
        let amps = point.eigenvectors.adjoint() * &states[k];
        let pop: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = pop.iter().sum();
        let p: Vec<f64> = pop.iter().map(|x| x / total).collect();
        let d = first_overlaps(&track, k)?;
        let d2 = if k > 0 && k + 1 < n { second_overlaps(&track, k) } else { CMatrix::zeros(2, 2) };
        let q1 = charge_first_order(&p, &d)?;
        let q2 = charge_second_order(&d2, true)?;
        let mut row = vec![
            num(grid[k]),
            num(e1),
            num(e2),
            num(point.eigenvalues[0]),
            num(point.eigenvalues[1]),
            num(point.eigenvalues[1] - point.eigenvalues[0]),
            num(gaussian_transition_probability(&model, grid[k])?),
            num(p[1]),
            num(p[0]),
            num(p[1]),
            num(q1[0]),
            num(q1[1]),
            num(q2[0]),
            num(q2[1]),
        ];
        let mut order: Vec<usize> = (0..2).collect();
        order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
        let sigma: Vec<f64> = order.iter().map(|&i| p[i].sqrt()).collect();
        let (ds, d2s) = (permute(&d, &order), permute(&d2, &order));
        let mut reference_kept = None;
        for (pi, (_, policy)) in policies.iter().enumerate() {
            let mut w = compute_weights(&sigma, Some(&ds), Some(&d2s), policy)?;
            let scores = selection_scores(&w, policy);
            let sel = select_states(&mut w, policy)?;
            let mut score = [0.0; 2];
            let mut kept = [0u8; 2];
            for (slot, &orig) in order.iter().enumerate() {
                score[orig] = scores[slot];
                kept[orig] = u8::from(sel.kept.contains(&slot));
            }
            match reference_kept {
                None => reference_kept = Some(kept),
                Some(r) if r != kept => differs[pi] += 1,
                _ => {}
            }
            row.extend([num(score[0]), num(score[1]), kept[0].to_string(), kept[1].to_string()]);
        }
        table.push(row);
    }

    let pg = table.values("p_gaussian").expect("column exists");
    let (arg, pmax) = pg
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best });
    let r = 0.5f64.sqrt();
    let tl = &cfg.two_level;
    let rate = (tl.lambda_max - tl.lambda_min) / tl.sweep_duration;
    let v_eff = 2.0 * 2f64.sqrt() * rate;
    let final_pop = table.values("p_tdse").expect("column exists");
    let summary = json!({
        "grid_points": n,
        "coupling": tl.coupling,
        "p_gaussian_max": pmax,
        "p_gaussian_argmax": grid[arg],
        "p_gaussian_at_crossings": [
            gaussian_transition_probability(&model, -r)?,
            gaussian_transition_probability(&model, r)?,
        ],
        "tdse": {
            "final_excited_population": final_pop[n - 1],
            "max_norm_drift": drift,
            "landau_zener_single_crossing": landau_zener_reference(v_eff, tl.coupling)?,
            "effective_sweep_rate": v_eff,
        },
        "relabelled_at": track.relabelled_at(),
        "policies": policies.iter().zip(&differs).map(|((label, policy), &count)| json!({
            "name": label,
            "kind": policy.kind.as_str(),
            "gamma1": policy.gamma1,
            "gamma2": policy.gamma2,
            "lambda1": policy.lambda1,
            "lambda2": policy.lambda2,
            "points_with_different_kept_set": count,
        })).collect::<Vec<_>>(),
    });
    let mut tables = BTreeMap::new();
    tables.insert("crossing_scan".to_string(), table);
    Ok(ScanReport {
        experiment: ExperimentKind::CrossingScan,
        tables,
        summary,
        provenance: Provenance::of(cfg),
        converged: drift <= 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PolicyConfig;
    use uhlmann_dmrg::truncation::PolicyKind;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::CrossingScan);
        cfg.two_level.points = 41;
        cfg.two_level.max_dt = 0.05;
        cfg
    }

    #[test]
    fn grid_contains_crossings_and_p_peaks_there() {
        let report = run_crossing_scan(&small()).unwrap();
        let t = report.table("crossing_scan").unwrap();
        assert_eq!(t.rows.len(), 43);
        let lambda = t.values("lambda").unwrap();
        let p = t.values("p_gaussian").unwrap();
        let r = 0.5f64.sqrt();
        for (l, p) in lambda.iter().zip(&p) {
            if l.abs() == r {
                assert_eq!(*p, 1.0);
            } else {
                assert!(*p < 1.0);
            }
        }
        assert!(report.converged);
    }

    #[test]
    fn zero_coefficient_policy_columns_match_standard() {
        let mut cfg = small();
        cfg.policies = PolicyKind::ALL.into_iter().map(PolicyConfig::of_kind).collect();
        let report = run_crossing_scan(&cfg).unwrap();
        let t = report.table("crossing_scan").unwrap();
        for kind in PolicyKind::ALL {
            for col in ["score_lower", "score_upper", "kept_lower", "kept_upper"] {
                let a = t.values(&format!("standard_{col}")).unwrap();
                let b = t.values(&format!("{}_{col}", kind.as_str())).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = run_crossing_scan(&small()).unwrap().render().unwrap();
        let b = run_crossing_scan(&small()).unwrap().render().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        assert!(run_crossing_scan(&ExperimentConfig::new(ExperimentKind::DmrgBenchmark)).is_err());
    }
}
