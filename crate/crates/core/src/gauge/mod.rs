//! Uhlmann gauge algebra on sampled families of density matrices.
//!
//! Families are sampled on an ordered grid; every `d/dt` is a finite
//! difference on that grid (central in the interior, three-point one-sided
//! at the ends where a whole-grid quantity needs it).
//!
//! Conventions used throughout:
//!
//! * purification is the principal root `U = sqrt(rho)`;
//! * `A_t = (1/2i) [dU U^dagger - U dU^dagger]`, hermitian by construction;
//! * `D_t rho = i d rho - [A_t, rho]`, which is *anti*-hermitian for
//!   hermitian `A` and `rho`;
//! * categorical potentials add `(1/i)[C, rho]` and `(1/i)[H, C]`.

mod action;
mod curvature;

pub use action::{
    action_functional, categorified_action, gauge_charge_residual, hermitian_basis_element,
    ActionMode, ActionParams,
};
pub use curvature::{
    curvature, curvature_action, curvature_field, higher_field, higher_field_strength,
    pure_gauge_potential,
    CommutatorConvention, CurvatureField, PotentialGrid2d,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I};
use crate::spectral::{
    derivative_overlaps, second_derivative_overlaps, DiffScheme, HermitianMatrix, SpectralTrack,
};

/// Tolerance on potential hermiticity.
pub const POTENTIAL_TOL: f64 = 1e-10;

/// A validated density matrix: hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(m)
            .map_err(|e| Error::InvalidDensity(format!("not hermitian: {e}")))?;
        let tr = linalg::trace(h.matrix());
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let (p, _) = linalg::eigh(h.matrix())?;
        if let Some(&lowest) = p.first() {
            if lowest < -1e-12 {
                return Err(Error::InvalidDensity(format!(
                    "negative eigenvalue {lowest:e}"
                )));
            }
        }
        Ok(Self(h.into_matrix()))
    }

    /// `|psi><psi|` for a unit vector.
    pub fn pure(psi: &linalg::CVector) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// Purification amplitude `U` with `rho = U U^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitude(CMatrix);

impl Amplitude {
    pub fn new(u: CMatrix) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::Shape("amplitude must be square".into()));
        }
        let norm2 = u.norm_squared();
        if (norm2 - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!(
                "amplitude has Tr(U U^dagger) = {norm2}"
            )));
        }
        Ok(Self(u))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    /// `U U^dagger`.
    pub fn density(&self) -> CMatrix {
        &self.0 * self.0.adjoint()
    }
}

/// Principal square-root purification `U = sqrt(rho)`.
pub fn purify(rho: &DensityMatrix) -> Result<Amplitude> {
    let u = linalg::sqrt_psd(rho.matrix(), 1e-12)?;
    Amplitude::new(u)
}

/// Which rung of the potential hierarchy a [`GaugePotential`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialLevel {
    Base,
    Cat1,
    Cat2,
}

/// Hermitian potential sampled on a one-dimensional grid.
#[derive(Debug, Clone)]
pub struct GaugePotential {
    pub grid: Vec<f64>,
    pub values: Vec<HermitianMatrix>,
    pub level: PotentialLevel,
}

impl GaugePotential {
    pub fn new(grid: Vec<f64>, values: Vec<HermitianMatrix>, level: PotentialLevel) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} grid values for {} potentials",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            level,
        })
    }

    /// The zero potential of dimension `dim` on `grid`.
    pub fn zero(grid: Vec<f64>, dim: usize) -> Self {
        let values = vec![HermitianMatrix::from_hermitian_part(&CMatrix::zeros(dim, dim)); grid.len()];
        Self {
            grid,
            values,
            level: PotentialLevel::Base,
        }
    }

    /// Worst hermiticity residual over the grid.
    pub fn hermitian_residual(&self) -> f64 {
        self.values
            .iter()
            .map(|v| linalg::hermitian_residual(v.matrix()))
            .fold(0.0, f64::max)
    }
}

/// Derivative of a sampled matrix function at grid index `k`.
///
/// Interior points use `(f[k+1] - f[k-1]) / (t[k+1] - t[k-1])`; the two ends
/// use the three-point one-sided Lagrange stencil.
pub(crate) fn grid_derivative(values: &[CMatrix], grid: &[f64], k: usize) -> Result<CMatrix> {
    let n = grid.len();
    if n < 3 || values.len() != n {
        return Err(Error::Grid(format!(
            "derivative needs at least 3 matching samples, got {} values on {} points",
            values.len(),
            n
        )));
    }
    if k > 0 && k + 1 < n {
        let h = grid[k + 1] - grid[k - 1];
        return Ok((&values[k + 1] - &values[k - 1]).unscale(h));
    }
    let idx = if k == 0 { [0, 1, 2] } else { [n - 3, n - 2, n - 1] };
    let x = grid[k];
    let xs = idx.map(|i| grid[i]);
    let mut out = CMatrix::zeros(values[k].nrows(), values[k].ncols());
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        if idx[a] == k {
            continue;
        }
        let w = ((x - xs[b]) + (x - xs[c])) / ((xs[a] - xs[b]) * (xs[a] - xs[c]));
        out += (&values[idx[a]] - &values[k]).scale(w);
    }
    Ok(out)
}

pub(crate) fn central_derivative(values: &[CMatrix], grid: &[f64], k: usize) -> Result<CMatrix> {
    if k == 0 || k + 1 >= grid.len() || values.len() != grid.len() {
        return Err(Error::Boundary {
            index: k,
            len: grid.len(),
            needed: "two-sided",
        });
    }
    grid_derivative(values, grid, k)
}

/// `(1/2i) [dU U^dagger - U dU^dagger]` from an amplitude and its derivative.
pub fn potential_from_derivative(u: &CMatrix, du: &CMatrix) -> HermitianMatrix {
    let x = du * u.adjoint();
    let a = (&x - x.adjoint()) * (-I * 0.5);
    HermitianMatrix::from_hermitian_part(&a)
}

/// Uhlmann potential at interior grid index `k` (central difference of `U`).
pub fn gauge_potential(amps: &[Amplitude], grid: &[f64], k: usize) -> Result<HermitianMatrix> {
    let us: Vec<CMatrix> = amps.iter().map(|a| a.0.clone()).collect();
    let du = central_derivative(&us, grid, k)?;
    Ok(potential_from_derivative(&us[k], &du))
}

/// Uhlmann potential at every grid point, one-sided at the ends.
pub fn gauge_potential_track(amps: &[Amplitude], grid: &[f64]) -> Result<GaugePotential> {
    let us: Vec<CMatrix> = amps.iter().map(|a| a.0.clone()).collect();
    let values = (0..grid.len())
        .map(|k| Ok(potential_from_derivative(&us[k], &grid_derivative(&us, grid, k)?)))
        .collect::<Result<Vec<_>>>()?;
    GaugePotential::new(grid.to_vec(), values, PotentialLevel::Base)
}

/// `D_t rho = i d rho - [A, rho]` from precomputed pieces.
pub fn covariant_from_parts(drho: &CMatrix, a: &CMatrix, rho: &CMatrix) -> CMatrix {
    drho * I - linalg::commutator(a, rho)
}

fn check_aligned(rhos: &[DensityMatrix], a: &GaugePotential) -> Result<()> {
    if rhos.len() != a.grid.len() {
        return Err(Error::Shape(format!(
            "{} densities against a potential on {} points",
            rhos.len(),
            a.grid.len()
        )));
    }
    if let (Some(r), Some(v)) = (rhos.first(), a.values.first()) {
        if r.dim() != v.dim() {
            return Err(Error::Shape(format!(
                "density dimension {} against potential dimension {}",
                r.dim(),
                v.dim()
            )));
        }
    }
    Ok(())
}

/// Covariant derivative at interior grid index `k`. The result is
/// anti-hermitian.
pub fn covariant_derivative(rhos: &[DensityMatrix], a: &GaugePotential, k: usize) -> Result<CMatrix> {
    check_aligned(rhos, a)?;
    let ms: Vec<CMatrix> = rhos.iter().map(|r| r.0.clone()).collect();
    let drho = central_derivative(&ms, &a.grid, k)?;
    Ok(covariant_from_parts(&drho, a.values[k].matrix(), &ms[k]))
}

/// Result of a local gauge transformation.
#[derive(Debug, Clone)]
pub struct GaugeTransformed {
    pub rho: DensityMatrix,
    pub potential: HermitianMatrix,
    /// `max |A' - A'^dagger|` before symmetrization.
    pub symmetrization_residual: f64,
}

/// `rho -> V rho V^dagger`, `A -> V A V^dagger + i dV V^dagger`.
pub fn gauge_transform(
    rho: &DensityMatrix,
    a: &HermitianMatrix,
    v: &CMatrix,
    dv: &CMatrix,
) -> Result<GaugeTransformed> {
    let n = rho.dim();
    if a.dim() != n || v.shape() != (n, n) || dv.shape() != (n, n) {
        return Err(Error::Shape("gauge transform operands differ in dimension".into()));
    }
    let residual = linalg::unitarity_residual(v);
    if residual > 1e-10 {
        return Err(Error::NotUnitary { residual });
    }
    let vd = v.adjoint();
    let rho_t = linalg::hermitian_part(&(v * rho.matrix() * &vd));
    let raw = v * a.matrix() * &vd + dv * &vd * I;
    Ok(GaugeTransformed {
        rho: DensityMatrix(rho_t),
        symmetrization_residual: linalg::hermitian_residual(&raw),
        potential: HermitianMatrix::from_hermitian_part(&raw),
    })
}

/// Coherence amplitudes `C_ab` in an eigenbasis `{|a>}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMatrix {
    coefficients: CMatrix,
    basis: CMatrix,
}

impl CoherenceMatrix {
    /// Coefficients are symmetrized to their hermitian part; `basis` columns
    /// are the states `|a>`.
    pub fn new(coefficients: &CMatrix, basis: CMatrix) -> Result<Self> {
        if coefficients.nrows() != coefficients.ncols() || coefficients.nrows() != basis.ncols() {
            return Err(Error::Shape("coherence coefficients do not match basis".into()));
        }
        Ok(Self {
            coefficients: linalg::hermitian_part(coefficients),
            basis,
        })
    }

    /// Coefficients given directly in the computational basis.
    pub fn in_standard_basis(coefficients: &CMatrix) -> Result<Self> {
        Self::new(coefficients, linalg::identity(coefficients.nrows()))
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.coefficients
    }

    /// `sum_ab C_ab |a><b|`.
    pub fn operator(&self) -> HermitianMatrix {
        HermitianMatrix::from_hermitian_part(&(&self.basis * &self.coefficients * self.basis.adjoint()))
    }
}

/// Coherence-of-coherence coefficients `H_abc`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceCube {
    dim: usize,
    entries: Vec<f64>,
}

impl CoherenceCube {
    /// Real coefficients, indexed `(a * dim + b) * dim + c`.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim * dim {
            return Err(Error::Shape(format!(
                "cube of dimension {dim} needs {} entries, got {}",
                dim * dim * dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; dim * dim * dim],
        }
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.entries[(a * self.dim + b) * self.dim + c]
    }

    /// Literal contraction `sum_abc H_abc |a><b|c><a|` over `basis` columns.
    ///
    /// For an orthonormal basis `<b|c> = delta_bc` and the operator is
    /// diagonal in that basis.
    pub fn operator(&self, basis: &CMatrix) -> Result<HermitianMatrix> {
        if basis.ncols() != self.dim {
            return Err(Error::Shape("cube dimension does not match basis".into()));
        }
        let gram = basis.adjoint() * basis;
        let mut out = CMatrix::zeros(basis.nrows(), basis.nrows());
        for a in 0..self.dim {
            let mut weight = linalg::ZERO;
            for b in 0..self.dim {
                for c in 0..self.dim {
                    weight += gram[(b, c)] * self.get(a, b, c);
                }
            }
            let col = basis.column(a);
            out += (col * col.adjoint()) * weight;
        }
        HermitianMatrix::with_tolerance(out, POTENTIAL_TOL)
    }
}

/// `A^(1) = A + (1/i)[C, rho]`.
pub fn categorical_potential_1(
    a: &HermitianMatrix,
    c: &CoherenceMatrix,
    rho: &DensityMatrix,
) -> Result<HermitianMatrix> {
    let c_op = c.operator();
    if a.dim() != rho.dim() || c_op.dim() != rho.dim() {
        return Err(Error::Shape("categorical potential operands differ in dimension".into()));
    }
    let extra = linalg::commutator(c_op.matrix(), rho.matrix()) * (-I);
    HermitianMatrix::with_tolerance(a.matrix() + extra, POTENTIAL_TOL)
}

/// `A^(2) = A^(1) + (1/i)[H, C]` with `H` already contracted to operator form.
pub fn categorical_potential_2(
    a1: &HermitianMatrix,
    h_op: &HermitianMatrix,
    c: &CoherenceMatrix,
) -> Result<HermitianMatrix> {
    let c_op = c.operator();
    if a1.dim() != h_op.dim() || c_op.dim() != a1.dim() {
        return Err(Error::Shape("categorical potential operands differ in dimension".into()));
    }
    let extra = linalg::commutator(h_op.matrix(), c_op.matrix()) * (-I);
    HermitianMatrix::with_tolerance(a1.matrix() + extra, POTENTIAL_TOL)
}

/// Hermitize a derivative-overlap block: `(D + D^dagger)/2 + (D - D^dagger)/(2i)`.
pub fn hermitize_overlaps(d: &CMatrix) -> CMatrix {
    let dd = d.adjoint();
    let sym = (d + &dd).scale(0.5);
    let anti = (d - &dd) * (-I * 0.5);
    linalg::hermitian_part(&(sym + anti))
}

/// Default `C_ab(t)`: hermitized first-derivative overlaps of the tracked
/// eigenbasis at interior index `k`.
pub fn default_coherence_matrix(track: &SpectralTrack, k: usize) -> Result<CoherenceMatrix> {
    let d = derivative_overlaps(track, k, DiffScheme::Central)?;
    CoherenceMatrix::new(&hermitize_overlaps(&d), track.points()[k].eigenvectors.clone())
}

/// Default `H_abc(t) = Re D2[a][c] * delta_bc`.
pub fn default_coherence_cube(track: &SpectralTrack, k: usize) -> Result<CoherenceCube> {
    let d2 = second_derivative_overlaps(track, k)?;
    Ok(cube_from_second_overlaps(&d2))
}

pub fn cube_from_second_overlaps(d2: &CMatrix) -> CoherenceCube {
    let n = d2.nrows();
    let mut cube = CoherenceCube::zeros(n);
    for a in 0..n {
        for b in 0..n {
            cube.entries[(a * n + b) * n + b] = d2[(a, b)].re;
        }
    }
    cube
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, expm_i, pauli_x, pauli_y, pauli_z, real_matrix};

    fn dm(m: CMatrix) -> DensityMatrix {
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn purify_closed_forms() {
        let u = purify(&dm(linalg::identity(2).scale(0.5))).unwrap();
        assert!(linalg::max_abs(&(u.matrix() - linalg::identity(2).scale(0.5f64.sqrt()))) < 1e-15);
        let u = purify(&dm(diag_real(&[1.0, 0.0]))).unwrap();
        assert!(linalg::max_abs(&(u.matrix() - diag_real(&[1.0, 0.0]))) < 1e-15);
        let u = purify(&dm(diag_real(&[0.64, 0.36]))).unwrap();
        assert!(linalg::max_abs(&(u.matrix() - diag_real(&[0.8, 0.6]))) < 1e-15);
    }

    #[test]
    fn invalid_densities_are_rejected() {
        assert!(DensityMatrix::new(diag_real(&[1.1, -0.1])).is_err());
        assert!(DensityMatrix::new(diag_real(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(real_matrix(2, 2, &[0.5, 0.1, 0.2, 0.5])).is_err());
    }

    #[test]
    fn constant_amplitude_has_zero_potential() {
        let u = purify(&dm(diag_real(&[0.7, 0.3]))).unwrap();
        let grid = [0.0, 0.1, 0.2];
        let a = gauge_potential(&vec![u; 3], &grid, 1).unwrap();
        assert!(linalg::max_abs(a.matrix()) == 0.0);
    }

    #[test]
    fn rotating_phase_amplitude_gives_minus_half_sigma_z() {
        // U(t) = exp(-i Z t)/sqrt 2; on the grid A = -sin(h)/h * Z/2.
        let h = 1e-3;
        let grid = [0.4 - h, 0.4, 0.4 + h];
        let amps: Vec<_> = grid
            .iter()
            .map(|&t| Amplitude::new(expm_i(&pauli_z(), t).unwrap().unscale(2f64.sqrt())).unwrap())
            .collect();
        let a = gauge_potential(&amps, &grid, 1).unwrap();
        let expected = pauli_z().scale(-0.5 * h.sin() / h);
        assert!(linalg::max_abs(&(a.matrix() - &expected)) < 1e-12);
        assert!(linalg::max_abs(&(a.matrix() + pauli_z().scale(0.5))) < h * h);
    }

    #[test]
    fn real_symmetric_amplitudes_give_zero_diagonal() {
        let grid: Vec<f64> = vec![0.0, 0.01, 0.02];
        let amps: Vec<_> = grid
            .iter()
            .map(|&t| {
                let m = real_matrix(2, 2, &[0.6 + t, 0.2 * t, 0.2 * t, 0.3 - t * t]);
                let n = m.norm();
                Amplitude::new(m.unscale(n)).unwrap()
            })
            .collect();
        let a = gauge_potential(&amps, &grid, 1).unwrap();
        for i in 0..2 {
            assert!(a.matrix()[(i, i)].norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_index_is_rejected() {
        let u = purify(&dm(diag_real(&[0.5, 0.5]))).unwrap();
        assert!(matches!(
            gauge_potential(&vec![u; 3], &[0.0, 1.0, 2.0], 0),
            Err(Error::Boundary { .. })
        ));
    }

    #[test]
    fn covariant_derivative_without_potential_is_i_drho() {
        let grid = vec![0.0, 0.1, 0.2];
        let rhos: Vec<_> = grid
            .iter()
            .map(|&t| dm(diag_real(&[0.5 + t, 0.5 - t])))
            .collect();
        let zero = GaugePotential::zero(grid.clone(), 2);
        let d = covariant_derivative(&rhos, &zero, 1).unwrap();
        let expected = diag_real(&[1.0, -1.0]) * I;
        assert!(linalg::max_abs(&(d - expected)) < 1e-12);

        let constant = vec![dm(diag_real(&[0.3, 0.7])); 3];
        assert_eq!(linalg::max_abs(&covariant_derivative(&constant, &zero, 1).unwrap()), 0.0);

        let short = GaugePotential::zero(vec![0.0, 0.1], 2);
        assert!(matches!(covariant_derivative(&rhos, &short, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn gauge_transform_identity_and_isotropic_cases() {
        let rho = dm(diag_real(&[0.8, 0.2]));
        let a = HermitianMatrix::new(pauli_x().scale(0.3)).unwrap();
        let out = gauge_transform(&rho, &a, &linalg::identity(2), &CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(out.rho, rho);
        assert!(linalg::max_abs(&(out.potential.matrix() - a.matrix())) < 1e-15);

        let iso = dm(linalg::identity(2).scale(0.5));
        let v = expm_i(&(pauli_x() + pauli_y().scale(0.4)), 0.7).unwrap();
        let out = gauge_transform(&iso, &a, &v, &CMatrix::zeros(2, 2)).unwrap();
        assert!(linalg::max_abs(&(out.rho.matrix() - iso.matrix())) < 1e-15);

        let bad = diag_real(&[1.0, 2.0]);
        assert!(matches!(
            gauge_transform(&rho, &a, &bad, &CMatrix::zeros(2, 2)),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn first_categorical_potential_hand_algebra() {
        // [X, diag(0.9, 0.1)] = -0.8 i Y, so (1/i)[C, rho] = -0.8 Y.
        let rho = dm(diag_real(&[0.9, 0.1]));
        let a = HermitianMatrix::new(pauli_z().scale(0.25)).unwrap();
        let cm = CoherenceMatrix::in_standard_basis(&pauli_x()).unwrap();
        let a1 = categorical_potential_1(&a, &cm, &rho).unwrap();
        let diff = a1.matrix() - a.matrix();
        assert!(linalg::max_abs(&(diff + pauli_y().scale(0.8))) < 1e-15);

        let zero = CoherenceMatrix::in_standard_basis(&CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(categorical_potential_1(&a, &zero, &rho).unwrap(), a);
        let diagonal = CoherenceMatrix::in_standard_basis(&diag_real(&[2.0, -1.0])).unwrap();
        assert_eq!(categorical_potential_1(&a, &diagonal, &rho).unwrap(), a);
    }

    #[test]
    fn second_categorical_potential_hand_algebra() {
        // (1/i)[Z, X] = (1/i)(2i Y) = 2Y.
        let a1 = HermitianMatrix::new(pauli_x().scale(0.1)).unwrap();
        let h_op = HermitianMatrix::new(pauli_z()).unwrap();
        let cm = CoherenceMatrix::in_standard_basis(&pauli_x()).unwrap();
        let a2 = categorical_potential_2(&a1, &h_op, &cm).unwrap();
        assert!(linalg::max_abs(&(a2.matrix() - a1.matrix() - pauli_y().scale(2.0))) < 1e-15);

        let zero_h = HermitianMatrix::new(CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(categorical_potential_2(&a1, &zero_h, &cm).unwrap(), a1);
        let diag_c = CoherenceMatrix::in_standard_basis(&diag_real(&[0.3, 0.1])).unwrap();
        assert_eq!(categorical_potential_2(&a1, &h_op, &diag_c).unwrap(), a1);
    }

    #[test]
    fn cube_contraction_is_diagonal_in_orthonormal_basis() {
        let mut entries = vec![0.0; 8];
        entries[0] = 1.0; // H_000
        entries[7] = -1.0; // H_111
        entries[1] = 5.0; // H_001: <0|1> = 0, drops out
        let cube = CoherenceCube::new(2, entries).unwrap();
        let op = cube.operator(&linalg::identity(2)).unwrap();
        assert!(linalg::max_abs(&(op.matrix() - pauli_z())) < 1e-15);
    }

    #[test]
    fn hermitized_overlaps_recover_rotation_rate() {
        let omega = 0.7;
        let d = real_matrix(2, 2, &[0.0, -omega, omega, 0.0]);
        let cmat = hermitize_overlaps(&d);
        assert!((cmat[(0, 1)].norm() - omega).abs() < 1e-15);
        assert_eq!(linalg::hermitian_residual(&cmat), 0.0);
    }
}
