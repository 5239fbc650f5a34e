//! Model systems and exact references: the two-level avoided crossing,
//! time-dependent propagation, spin-chain Hamiltonians, and dense exact
//! diagonalization.
//!
//! The two-level diabatic energies `lambda^2 - 1/2` and `1/2 - lambda^2`
//! cross at `lambda = +-1/sqrt(2)`, not at `lambda = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, ONE, ZERO};
use crate::spectral::HermitianMatrix;
use crate::tn::{MatrixProductOperator, MatrixProductState, Tensor4};

/// Largest matrix dimension handed to the dense eigensolver.
pub const DENSE_LIMIT: usize = 4096;

/// Dimension above which the lowest eigenpair comes from Lanczos.
const LANCZOS_ABOVE: usize = 512;

/// Two diabatic levels coupled by a constant `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelModel {
    pub coupling: f64,
    pub lambda_grid: Vec<f64>,
}

impl TwoLevelModel {
    pub fn new(coupling: f64, lambda_grid: Vec<f64>) -> Result<Self> {
        if !coupling.is_finite() || coupling < 0.0 {
            return Err(Error::InvalidArgument(format!("coupling must be finite and >= 0, got {coupling}")));
        }
        if lambda_grid.is_empty() {
            return Err(Error::Grid("lambda grid is empty".into()));
        }
        if lambda_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("lambda grid must be strictly increasing".into()));
        }
        Ok(Self { coupling, lambda_grid })
    }

    /// `points` evenly spaced values on `[start, end]`.
    pub fn uniform(coupling: f64, start: f64, end: f64, points: usize) -> Result<Self> {
        Self::new(coupling, linspace(start, end, points)?)
    }
}

/// `points` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::Grid("grid needs at least one point".into())),
        1 => Ok(vec![start]),
        _ => {
            let h = (end - start) / (points - 1) as f64;
            Ok((0..points)
                .map(|k| if k + 1 == points { end } else { start + k as f64 * h })
                .collect())
        }
    }
}

/// `(lambda^2 - 1/2, 1/2 - lambda^2)`.
pub fn diabatic_energies(lambda: f64) -> (f64, f64) {
    let e1 = lambda * lambda - 0.5;
    (e1, -e1)
}

/// `[[e1, V], [V, e2]]`.
pub fn two_level_hamiltonian(model: &TwoLevelModel, lambda: f64) -> HermitianMatrix {
    let (e1, e2) = diabatic_energies(lambda);
    let v = model.coupling;
    HermitianMatrix::from_hermitian_part(&linalg::real_matrix(2, 2, &[e1, v, v, e2]))
}

/// `exp(-(e1 - e2)^2 / (2 V^2))`.
pub fn gaussian_transition_probability(model: &TwoLevelModel, lambda: f64) -> Result<f64> {
    let v = model.coupling;
    if v == 0.0 {
        return Err(Error::InvalidArgument("transition probability needs V > 0".into()));
    }
    let (e1, e2) = diabatic_energies(lambda);
    let gap = e1 - e2;
    Ok((-(gap * gap) / (2.0 * v * v)).exp())
}

/// Uniform time grid `t0, t0 + dt, ..., t1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t1 > t0) || steps == 0 {
            return Err(Error::Grid(format!("time grid [{t0}, {t1}] with {steps} steps")));
        }
        Ok(Self { t0, t1, steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }
}

/// Integrate `i d/dt psi = H(t) psi` with the exponential midpoint rule.
///
/// Returns `steps + 1` states, the first being `psi0`.
pub fn tdse_propagate(
    h_of_t: impl Fn(f64) -> HermitianMatrix,
    psi0: &CVector,
    grid: &TimeGrid,
) -> Result<Vec<CVector>> {
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: psi0.norm() });
    }
    let dt = grid.dt();
    let mut out = Vec::with_capacity(grid.steps + 1);
    out.push(psi0.clone());
    for k in 0..grid.steps {
        let mid = 0.5 * (grid.time(k) + grid.time(k + 1));
        let h = h_of_t(mid);
        if h.dim() != psi0.len() {
            return Err(Error::Shape("Hamiltonian dimension does not match the state".into()));
        }
        let u = linalg::expm_i(h.matrix(), dt)?;
        let next = u * &out[k];
        out.push(next);
    }
    Ok(out)
}

/// `exp(-2 pi V^2 / v)`.
pub fn landau_zener_reference(v: f64, coupling: f64) -> Result<f64> {
    if !(v > 0.0) || !(coupling > 0.0) {
        return Err(Error::InvalidArgument("sweep rate and coupling must be positive".into()));
    }
    Ok((-2.0 * std::f64::consts::PI * coupling * coupling / v).exp())
}

/// Diabatic survival after the sweep `H(t) = diag(vt/2, -vt/2) + V sigma_x`
/// started in `|0>`, plus the largest norm drift along the trajectory.
pub fn landau_zener_sweep(v: f64, coupling: f64, grid: &TimeGrid) -> Result<(f64, f64)> {
    let psi0 = CVector::from_vec(vec![ONE, ZERO]);
    let traj = tdse_propagate(
        |t| {
            HermitianMatrix::from_hermitian_part(&linalg::real_matrix(
                2,
                2,
                &[0.5 * v * t, coupling, coupling, -0.5 * v * t],
            ))
        },
        &psi0,
        grid,
    )?;
    let drift = traj.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    let last = traj.last().expect("trajectory has the initial state");
    Ok((last[0].norm_sqr(), drift))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinChainKind {
    /// `-J sum Z Z - h sum X`.
    Tfim,
    /// `J sum S.S + h sum S^z` with spin-1/2 operators.
    Heisenberg,
}

/// Open spin-1/2 chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinChainSpec {
    pub kind: SpinChainKind,
    pub sites: usize,
    #[serde(default = "one")]
    pub coupling: f64,
    #[serde(default)]
    pub field: f64,
}

fn one() -> f64 {
    1.0
}

impl SpinChainSpec {
    pub fn tfim(sites: usize, field: f64) -> Self {
        Self { kind: SpinChainKind::Tfim, sites, coupling: 1.0, field }
    }

    pub fn heisenberg(sites: usize) -> Self {
        Self { kind: SpinChainKind::Heisenberg, sites, coupling: 1.0, field: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidArgument(format!("spin chain needs N >= 2, got {}", self.sites)));
        }
        if !self.coupling.is_finite() || !self.field.is_finite() {
            return Err(Error::InvalidArgument("spin chain parameters must be finite".into()));
        }
        Ok(())
    }

    /// Hilbert-space dimension `2^N`, if it fits in `usize`.
    pub fn dimension(&self) -> Option<usize> {
        1usize.checked_shl(self.sites as u32)
    }
}

fn s_plus() -> CMatrix {
    linalg::real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])
}

fn s_minus() -> CMatrix {
    linalg::real_matrix(2, 2, &[0.0, 0.0, 1.0, 0.0])
}

fn s_z() -> CMatrix {
    linalg::pauli_z().scale(0.5)
}

/// Operator-valued bulk matrix of the Hamiltonian MPO. Row 0 is the left
/// boundary state, the last column the right boundary state.
fn bulk_blocks(spec: &SpinChainSpec) -> Vec<Vec<Option<CMatrix>>> {
    let id = linalg::identity(2);
    let (j, h) = (spec.coupling, spec.field);
    match spec.kind {
        SpinChainKind::Tfim => {
            let z = linalg::pauli_z();
            let x = linalg::pauli_x();
            vec![
                vec![Some(id.clone()), Some(z.scale(-j)), Some(x.scale(-h))],
                vec![None, None, Some(z)],
                vec![None, None, Some(id)],
            ]
        }
        SpinChainKind::Heisenberg => vec![
            vec![
                Some(id.clone()),
                Some(s_plus().scale(0.5 * j)),
                Some(s_minus().scale(0.5 * j)),
                Some(s_z().scale(j)),
                Some(s_z().scale(h)),
            ],
            vec![None, None, None, None, Some(s_minus())],
            vec![None, None, None, None, Some(s_plus())],
            vec![None, None, None, None, Some(s_z())],
            vec![None, None, None, None, Some(id)],
        ],
    }
}

/// Hamiltonian MPO of an open spin chain.
pub fn build_spin_chain_mpo(spec: &SpinChainSpec) -> Result<MatrixProductOperator> {
    spec.validate()?;
    let bulk = bulk_blocks(spec);
    let w = bulk.len();
    let n = spec.sites;
    let sites = (0..n)
        .map(|i| {
            let rows: Vec<usize> = if i == 0 { vec![0] } else { (0..w).collect() };
            let cols: Vec<usize> = if i + 1 == n { vec![w - 1] } else { (0..w).collect() };
            let mut t = Tensor4::zeros(rows.len(), 2, 2, cols.len());
            for (a, &row) in rows.iter().enumerate() {
                for (b, &col) in cols.iter().enumerate() {
                    if let Some(op) = &bulk[row][col] {
                        t.set_op(a, b, op.clone())?;
                    }
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixProductOperator::new(sites)
}

/// `op` acting on `site` of an `n`-site chain, identity elsewhere.
fn embed(op: &CMatrix, site: usize, n: usize) -> CMatrix {
    embed_pair(op, site, None, n)
}

/// `op` on `site` and optionally `next` on `site + 1`, identity elsewhere.
fn embed_pair(op: &CMatrix, site: usize, next: Option<&CMatrix>, n: usize) -> CMatrix {
    let mut out = CMatrix::from_element(1, 1, ONE);
    for k in 0..n {
        let f = match (k == site, next) {
            (true, _) => op.clone(),
            (false, Some(b)) if k == site + 1 => b.clone(),
            _ => linalg::identity(2),
        };
        out = linalg::kron(&out, &f);
    }
    out
}

/// Dense Hamiltonian built directly from Kronecker products.
pub fn dense_spin_chain_hamiltonian(spec: &SpinChainSpec) -> Result<HermitianMatrix> {
    spec.validate()?;
    let n = spec.sites;
    let dim = spec.dimension().filter(|&d| d <= DENSE_LIMIT).ok_or(Error::DimensionLimit {
        dim: spec.dimension().unwrap_or(usize::MAX),
        limit: DENSE_LIMIT,
    })?;
    let mut h = CMatrix::zeros(dim, dim);
    let (j, f) = (spec.coupling, spec.field);
    match spec.kind {
        SpinChainKind::Tfim => {
            let z = linalg::pauli_z();
            let x = linalg::pauli_x();
            for i in 0..n - 1 {
                h -= embed_pair(&z, i, Some(&z), n) * c(j, 0.0);
            }
            for i in 0..n {
                h -= embed(&x, i, n) * c(f, 0.0);
            }
        }
        SpinChainKind::Heisenberg => {
            let sx = linalg::pauli_x().scale(0.5);
            let sy = linalg::pauli_y().scale(0.5);
            let sz = s_z();
            for i in 0..n - 1 {
                for s in [&sx, &sy, &sz] {
                    h += embed_pair(s, i, Some(s), n) * c(j, 0.0);
                }
            }
            for i in 0..n {
                h += embed(&sz, i, n) * c(f, 0.0);
            }
        }
    }
    HermitianMatrix::new(h)
}

/// Product starting state: all spins along `+x` for the TFIM, Neel order
/// for the Heisenberg chain.
pub fn initial_state(spec: &SpinChainSpec) -> Result<MatrixProductState> {
    spec.validate()?;
    let states: Vec<CVector> = match spec.kind {
        SpinChainKind::Tfim => {
            let s = 0.5f64.sqrt();
            vec![CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]); spec.sites]
        }
        SpinChainKind::Heisenberg => (0..spec.sites)
            .map(|i| {
                if i % 2 == 0 {
                    CVector::from_vec(vec![ONE, ZERO])
                } else {
                    CVector::from_vec(vec![ZERO, ONE])
                }
            })
            .collect(),
    };
    MatrixProductState::from_product_state(&states)
}

/// Lowest `k` eigenpairs, ascending.
pub fn exact_diagonalization(h: &HermitianMatrix, k: usize) -> Result<(Vec<f64>, Vec<CVector>)> {
    exact_diagonalization_with_limit(h, k, DENSE_LIMIT)
}

pub fn exact_diagonalization_with_limit(
    h: &HermitianMatrix,
    k: usize,
    limit: usize,
) -> Result<(Vec<f64>, Vec<CVector>)> {
    let n = h.dim();
    if n > limit {
        return Err(Error::DimensionLimit { dim: n, limit });
    }
    let k = k.min(n);
    if k == 1 && n > LANCZOS_ABOVE {
        let start = CVector::from_fn(n, |i, _| c(1.0 + 0.01 * ((i * 7919) % 101) as f64, 0.0));
        let (e, v) = linalg::lanczos_lowest(h.matrix(), &start, 1e-13)?;
        return Ok((vec![e], vec![v]));
    }
    let (values, vectors) = linalg::eigh(h.matrix())?;
    Ok((
        values[..k].to_vec(),
        (0..k).map(|i| vectors.column(i).into_owned()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(v: f64) -> TwoLevelModel {
        TwoLevelModel::new(v, vec![0.0]).unwrap()
    }

    #[test]
    fn diabatic_examples() {
        assert_eq!(diabatic_energies(0.0), (-0.5, 0.5));
        let (a, b) = diabatic_energies(0.5f64.sqrt());
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
        assert_eq!(diabatic_energies(1.0), (0.5, -0.5));
    }

    #[test]
    fn two_level_spectra() {
        let (e, _) = linalg::eigh(two_level_hamiltonian(&model(0.1), 0.5f64.sqrt()).matrix()).unwrap();
        assert!((e[0] + 0.1).abs() < 1e-12 && (e[1] - 0.1).abs() < 1e-12);
        let (e, _) = linalg::eigh(two_level_hamiltonian(&model(0.1), 0.0).matrix()).unwrap();
        assert!((e[1] - 0.26f64.sqrt()).abs() < 1e-12 && (e[0] + 0.26f64.sqrt()).abs() < 1e-12);
        let (e, _) = linalg::eigh(two_level_hamiltonian(&model(0.0), 0.3).matrix()).unwrap();
        let (a, b) = diabatic_energies(0.3);
        assert!((e[0] - a.min(b)).abs() < 1e-15 && (e[1] - a.max(b)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_probability_examples() {
        let s = 0.5f64.sqrt();
        assert_eq!(gaussian_transition_probability(&model(0.1), s).unwrap(), 1.0);
        assert_eq!(gaussian_transition_probability(&model(0.1), -s).unwrap(), 1.0);
        let p0 = gaussian_transition_probability(&model(0.1), 0.0).unwrap();
        assert!((p0 - (-50f64).exp()).abs() <= 1e-12 * (-50f64).exp());
        let p1 = gaussian_transition_probability(&model(0.5), 1.0).unwrap();
        assert!((p1 - (-2f64).exp()).abs() < 1e-15);
        assert!(gaussian_transition_probability(&model(0.0), 0.0).is_err());
    }

    #[test]
    fn landau_zener_reference_examples() {
        assert!((landau_zener_reference(1.0, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        let v = 2.0 * std::f64::consts::PI * 0.3 * 0.3;
        assert!((landau_zener_reference(v, 0.3).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let p = landau_zener_reference(0.7, 0.1).unwrap();
        assert!((landau_zener_reference(0.7, 0.2).unwrap() - p.powi(4)).abs() < 1e-15);
        assert!(landau_zener_reference(0.0, 0.1).is_err());
    }

    #[test]
    fn tdse_trivial_cases() {
        let psi0 = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let zero = |_| HermitianMatrix::from_hermitian_part(&CMatrix::zeros(2, 2));
        for s in tdse_propagate(zero, &psi0, &grid).unwrap() {
            assert_eq!(s, psi0);
        }
        let ket0 = CVector::from_vec(vec![ONE, ZERO]);
        let grid = TimeGrid::new(0.0, std::f64::consts::FRAC_PI_2, 7).unwrap();
        let z = |_| HermitianMatrix::from_hermitian_part(&linalg::pauli_z());
        let last = tdse_propagate(z, &ket0, &grid).unwrap().pop().unwrap();
        assert!((last[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!(last[1].norm() < 1e-15);
        assert!(tdse_propagate(z, &CVector::from_vec(vec![ONE, ONE]), &grid).is_err());
    }

    #[test]
    fn tfim_two_sites_without_field() {
        let mpo = build_spin_chain_mpo(&SpinChainSpec::tfim(2, 0.0)).unwrap();
        let zz = linalg::kron(&linalg::pauli_z(), &linalg::pauli_z());
        assert!(linalg::max_abs(&(mpo.to_dense() + zz)) < 1e-15);
    }

    #[test]
    fn heisenberg_dimer_singlet() {
        let h = dense_spin_chain_hamiltonian(&SpinChainSpec::heisenberg(2)).unwrap();
        let (e, _) = exact_diagonalization(&h, 1).unwrap();
        assert!((e[0] + 0.75).abs() < 1e-14);
        let mpo = build_spin_chain_mpo(&SpinChainSpec::heisenberg(2)).unwrap();
        assert!(linalg::max_abs(&(mpo.to_dense() - h.matrix())) < 1e-15);
    }

    #[test]
    fn exact_diagonalization_of_diagonal() {
        let h = HermitianMatrix::new(linalg::diag_real(&[3.0, -1.0, 2.0])).unwrap();
        let (e, v) = exact_diagonalization(&h, 3).unwrap();
        assert_eq!(e, vec![-1.0, 2.0, 3.0]);
        assert!((v[0][1].norm() - 1.0).abs() < 1e-15);
        let big = HermitianMatrix::new(linalg::identity(5)).unwrap();
        assert!(matches!(
            exact_diagonalization_with_limit(&big, 1, 4),
            Err(Error::DimensionLimit { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(SpinChainSpec::tfim(1, 1.0).validate().is_err());
        assert!(build_spin_chain_mpo(&SpinChainSpec::tfim(1, 1.0)).is_err());
    }
}
