use serde::{Deserialize, Serialize};

use super::{covariant_from_parts, grid_derivative, CurvatureField, DensityMatrix, GaugePotential};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I};
use crate::spectral::HermitianMatrix;

/// Which form of the action integrand to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    /// `Re Tr[rho (i d - A)^2 rho]`, with `A` acting by left multiplication.
    ScalarLike,
    /// `Tr[rho (D rho)^dagger (D rho)]`.
    #[default]
    Covariant,
}

/// Couplings for the action and curvature terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    pub g1: f64,
    pub g2: f64,
    pub mode: ActionMode,
}

impl Default for ActionParams {
    fn default() -> Self {
        Self {
            g1: 1.0,
            g2: 1.0,
            mode: ActionMode::Covariant,
        }
    }
}

impl ActionParams {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("g1", self.g1), ("g2", self.g2)] {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and positive, got {g}"
                )));
            }
        }
        Ok(())
    }
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|k| {
            let left = if k > 0 { grid[k] - grid[k - 1] } else { 0.0 };
            let right = if k + 1 < n { grid[k + 1] - grid[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn check_uniform(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::Grid(format!(
            "action needs at least 3 grid points, got {}",
            grid.len()
        )));
    }
    let h = grid[1] - grid[0];
    let tol = 1e-9 * h.abs().max(grid.iter().fold(0.0f64, |m, x| m.max(x.abs())) * 1e-3);
    if !(h > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
        return Err(Error::Grid("action needs a uniform increasing grid".into()));
    }
    Ok(())
}

/// Trapezoid-rule action over the whole grid.
///
/// Derivatives are central in the interior and second-order one-sided at
/// the two ends.
pub fn action_functional(
    rhos: &[DensityMatrix],
    a: &GaugePotential,
    params: &ActionParams,
) -> Result<f64> {
    params.validate()?;
    if rhos.len() != a.grid.len() {
        return Err(Error::Shape(format!(
            "{} densities against a potential on {} points",
            rhos.len(),
            a.grid.len()
        )));
    }
    check_uniform(&a.grid)?;
    let grid = &a.grid;
    let ms: Vec<CMatrix> = rhos.iter().map(|r| r.matrix().clone()).collect();
    let weights = trapezoid_weights(grid);
    let integrand: Vec<f64> = match params.mode {
        ActionMode::Covariant => (0..grid.len())
            .map(|k| {
                let drho = grid_derivative(&ms, grid, k)?;
                let d = covariant_from_parts(&drho, a.values[k].matrix(), &ms[k]);
                Ok(linalg::trace(&(&ms[k] * d.adjoint() * &d)).re)
            })
            .collect::<Result<_>>()?,
        ActionMode::ScalarLike => {
            let xs: Vec<CMatrix> = (0..grid.len())
                .map(|k| {
                    let drho = grid_derivative(&ms, grid, k)?;
                    Ok(drho * I - a.values[k].matrix() * &ms[k])
                })
                .collect::<Result<_>>()?;
            (0..grid.len())
                .map(|k| {
                    let dx = grid_derivative(&xs, grid, k)?;
                    let y = dx * I - a.values[k].matrix() * &xs[k];
                    Ok(linalg::trace(&(&ms[k] * y)).re)
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(weights.iter().zip(&integrand).map(|(w, f)| w * f).sum())
}

/// Sum of the covariant action and the curvature actions of `F` and `B`.
pub fn categorified_action(
    rhos: &[DensityMatrix],
    a: &GaugePotential,
    f: &CurvatureField,
    b: &CurvatureField,
    params: &ActionParams,
) -> Result<f64> {
    let covariant = ActionParams {
        mode: ActionMode::Covariant,
        ..*params
    };
    Ok(action_functional(rhos, a, &covariant)?
        + super::curvature_action(f, params)?
        + super::curvature_action(b, params)?)
}

/// Hermitian basis element `E_ab`: `|a><a|` on the diagonal,
/// `|a><b| + |b><a|` above it, `i|a><b| - i|b><a|` below it.
pub fn hermitian_basis_element(n: usize, a: usize, b: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    match a.cmp(&b) {
        std::cmp::Ordering::Equal => e[(a, a)] = c(1.0, 0.0),
        std::cmp::Ordering::Less => {
            e[(a, b)] = c(1.0, 0.0);
            e[(b, a)] = c(1.0, 0.0);
        }
        std::cmp::Ordering::Greater => {
            e[(a, b)] = I;
            e[(b, a)] = -I;
        }
    }
    e
}

/// Central finite-difference `dS/dA_k` along every hermitian basis direction.
pub fn gauge_charge_residual(
    rhos: &[DensityMatrix],
    a: &GaugePotential,
    k: usize,
    eps: f64,
    params: &ActionParams,
) -> Result<nalgebra::DMatrix<f64>> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in [1e-7, 1e-3], got {eps}"
        )));
    }
    if params.mode != ActionMode::Covariant {
        return Err(Error::InvalidArgument(
            "charge residuals use the covariant action".into(),
        ));
    }
    if k >= a.grid.len() {
        return Err(Error::Boundary {
            index: k,
            len: a.grid.len(),
            needed: "in range",
        });
    }
    let n = a.values[k].dim();
    let mut out = nalgebra::DMatrix::zeros(n, n);
    let mut shifted = a.clone();
    for row in 0..n {
        for col in 0..n {
            let e = hermitian_basis_element(n, row, col).scale(eps);
            shifted.values[k] = HermitianMatrix::from_hermitian_part(&(a.values[k].matrix() + &e));
            let plus = action_functional(rhos, &shifted, params)?;
            shifted.values[k] = HermitianMatrix::from_hermitian_part(&(a.values[k].matrix() - &e));
            let minus = action_functional(rhos, &shifted, params)?;
            out[(row, col)] = (plus - minus) / (2.0 * eps);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::PotentialLevel;
    use crate::linalg::{diag_real, expm_i, pauli_x, pauli_z};

    fn family(grid: &[f64], rho0: &CMatrix, gen: &CMatrix) -> Vec<DensityMatrix> {
        grid.iter()
            .map(|&t| {
                let v = expm_i(gen, t).unwrap();
                DensityMatrix::new(&v * rho0 * v.adjoint()).unwrap()
            })
            .collect()
    }

    fn uniform(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * h).collect()
    }

    #[test]
    fn constant_density_without_potential_has_zero_action() {
        let grid = uniform(11, 0.1);
        let rhos = vec![DensityMatrix::new(diag_real(&[0.6, 0.4])).unwrap(); 11];
        let a = GaugePotential::zero(grid, 2);
        for mode in [ActionMode::Covariant, ActionMode::ScalarLike] {
            let p = ActionParams { mode, ..Default::default() };
            assert_eq!(action_functional(&rhos, &a, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn parallel_transport_gives_vanishing_covariant_action() {
        // rho = V rho0 V^dagger with V = exp(-iGt); then A = i dV V^dagger = G.
        let g = pauli_x().scale(0.7) + pauli_z().scale(0.2);
        let grid = uniform(201, 0.005);
        let rhos = family(&grid, &diag_real(&[0.8, 0.2]), &g);
        let values = vec![HermitianMatrix::new(g.clone()).unwrap(); grid.len()];
        let a = GaugePotential::new(grid, values, PotentialLevel::Base).unwrap();
        let s = action_functional(&rhos, &a, &ActionParams::default()).unwrap();
        assert!(s.abs() < 1e-8, "{s}");
    }

    #[test]
    fn short_or_nonuniform_grids_are_rejected() {
        let rhos = vec![DensityMatrix::new(diag_real(&[0.6, 0.4])).unwrap(); 3];
        let a = GaugePotential::zero(vec![0.0, 0.1], 2);
        assert!(action_functional(&rhos[..2], &a, &ActionParams::default()).is_err());
        let a = GaugePotential::zero(vec![0.0, 0.1, 0.5], 2);
        assert!(matches!(
            action_functional(&rhos, &a, &ActionParams::default()),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn scalar_like_mode_matches_hand_integrand() {
        // rho constant, A = a*I: (i d - A)^2 rho = a^2 rho, so S = a^2 Tr(rho^2) T.
        let grid = uniform(5, 0.25);
        let rho = diag_real(&[0.7, 0.3]);
        let rhos = vec![DensityMatrix::new(rho.clone()).unwrap(); 5];
        let values = vec![HermitianMatrix::new(linalg::identity(2).scale(0.5)).unwrap(); 5];
        let a = GaugePotential::new(grid, values, PotentialLevel::Base).unwrap();
        let p = ActionParams { mode: ActionMode::ScalarLike, ..Default::default() };
        let s = action_functional(&rhos, &a, &p).unwrap();
        assert!((s - 0.25 * (0.49 + 0.09) * 1.0).abs() < 1e-14);
    }

    #[test]
    fn charge_residual_is_zero_at_constant_density() {
        let grid = uniform(7, 0.1);
        let rhos = vec![DensityMatrix::new(diag_real(&[0.6, 0.4])).unwrap(); 7];
        let a = GaugePotential::zero(grid, 2);
        let g = gauge_charge_residual(&rhos, &a, 3, 1e-5, &ActionParams::default()).unwrap();
        assert!(g.amax() <= 1e-10);
    }

    #[test]
    fn charge_residual_rejects_bad_eps() {
        let grid = uniform(3, 0.1);
        let rhos = vec![DensityMatrix::new(diag_real(&[0.6, 0.4])).unwrap(); 3];
        let a = GaugePotential::zero(grid, 2);
        for eps in [1e-8, 1e-2] {
            assert!(gauge_charge_residual(&rhos, &a, 1, eps, &ActionParams::default()).is_err());
        }
    }

    #[test]
    fn basis_elements_are_hermitian_and_independent() {
        let n = 3;
        let mut flat = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let e = hermitian_basis_element(n, a, b);
                assert_eq!(linalg::hermitian_residual(&e), 0.0);
                flat.push(e);
            }
        }
        // Gram matrix under Re Tr(E F) is diagonal.
        for (i, x) in flat.iter().enumerate() {
            for (j, y) in flat.iter().enumerate() {
                let ip = linalg::trace(&(x * y)).re;
                if i != j {
                    assert_eq!(ip, 0.0);
                } else {
                    assert!(ip > 0.0);
                }
            }
        }
    }
}
