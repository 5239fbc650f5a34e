//! Two-site DMRG with a pluggable truncation rule.

mod scan;

pub use scan::{
    continuation_scan, BondBasis, BondTrack, CoherenceRule, ContinuationScan, ScanPoint,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ZERO};
use crate::spectral::HermitianMatrix;
use crate::tn::{
    boundary_environment, expectation, extend_left, extend_right, split_two_site, BondSpectrum,
    Environment, MatrixProductOperator, MatrixProductState, PolicyRule, Side, Tensor3, Tensor4,
    TruncationRule,
};
use crate::truncation::TruncationPolicy;

/// Default cap on the local problem dimension.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Weights of the two penalty terms in the augmented objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyWeights {
    #[serde(default)]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub max_bond: usize,
    pub num_sweeps: usize,
    pub energy_tol: f64,
    pub policy: TruncationPolicy,
    #[serde(default)]
    pub penalty: PenaltyWeights,
    /// Local problems larger than this are rejected.
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
    /// Local problems up to this size are diagonalized densely; larger ones
    /// use Lanczos seeded with the current two-site tensor.
    #[serde(default = "default_dense_solve_max")]
    pub dense_solve_max: usize,
    #[serde(default = "default_lanczos_tol")]
    pub lanczos_tol: f64,
}

fn default_dense_limit() -> usize {
    DEFAULT_DENSE_LIMIT
}

fn default_dense_solve_max() -> usize {
    256
}

fn default_lanczos_tol() -> f64 {
    1e-11
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            max_bond: 32,
            num_sweeps: 20,
            energy_tol: 1e-10,
            policy: TruncationPolicy::standard().with_cutoff(1e-14),
            penalty: PenaltyWeights::default(),
            dense_limit: DEFAULT_DENSE_LIMIT,
            dense_solve_max: default_dense_solve_max(),
            lanczos_tol: default_lanczos_tol(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_bond == 0 || self.num_sweeps == 0 {
            return Err(Error::InvalidArgument("max_bond and num_sweeps must be positive".into()));
        }
        if !(self.energy_tol > 0.0) || !(self.lanczos_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.penalty.lambda1 < 0.0 || self.penalty.lambda2 < 0.0 {
            return Err(Error::InvalidArgument("penalty weights must be non-negative".into()));
        }
        self.policy.validate()
    }
}

/// Log record for one bond split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondLogEntry {
    pub bond: usize,
    pub spectrum: BondSpectrum,
    pub charges1: Vec<f64>,
    pub charges2: Vec<f64>,
    pub effective: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DmrgResult {
    /// Energy after the last sweep.
    pub energy: f64,
    pub best_energy: f64,
    pub initial_energy: f64,
    pub state: MatrixProductState,
    pub sweep_energies: Vec<f64>,
    /// Last decision at each bond, indexed by bond.
    pub truncation_log: Vec<BondLogEntry>,
    pub converged: bool,
}

/// Two-site effective Hamiltonian, applied without forming the matrix.
///
/// Vectors are flattened with index `((a * d1 + s1) * d2 + s2) * r + b`.
pub struct EffectiveHamiltonian<'a> {
    left: &'a Environment,
    w1: &'a Tensor4,
    w2: &'a Tensor4,
    right: &'a Environment,
    l: usize,
    r: usize,
    blocks1: Vec<(usize, usize)>,
    blocks2: Vec<(usize, usize)>,
}

impl<'a> EffectiveHamiltonian<'a> {
    pub fn new(left: &'a Environment, w1: &'a Tensor4, w2: &'a Tensor4, right: &'a Environment) -> Result<Self> {
        if left.len() != w1.left() || w1.right() != w2.left() || w2.right() != right.len() {
            return Err(Error::Shape("environments do not match the MPO bonds".into()));
        }
        let l = left[0].nrows();
        let r = right[0].nrows();
        Ok(Self {
            left,
            w1,
            w2,
            right,
            l,
            r,
            blocks1: w1.nonzero_blocks(),
            blocks2: w2.nonzero_blocks(),
        })
    }

    pub fn dim(&self) -> usize {
        self.l * self.w1.d_in() * self.w2.d_in() * self.r
    }

    fn unflatten(&self, v: &CVector) -> Vec<CMatrix> {
        let (d1, d2, l, r) = (self.w1.d_in(), self.w2.d_in(), self.l, self.r);
        (0..d1 * d2)
            .map(|s| {
                let (s1, s2) = (s / d2, s % d2);
                CMatrix::from_fn(l, r, |a, b| v[((a * d1 + s1) * d2 + s2) * r + b])
            })
            .collect()
    }

    fn flatten(&self, blocks: &[CMatrix], d1: usize, d2: usize) -> CVector {
        let (l, r) = (self.l, self.r);
        let mut v = CVector::zeros(l * d1 * d2 * r);
        for s1 in 0..d1 {
            for s2 in 0..d2 {
                let m = &blocks[s1 * d2 + s2];
                for a in 0..l {
                    for b in 0..r {
                        v[((a * d1 + s1) * d2 + s2) * r + b] = m[(a, b)];
                    }
                }
            }
        }
        v
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        let (d1, d2) = (self.w1.d_in(), self.w2.d_in());
        let (o1, o2) = (self.w1.d_out(), self.w2.d_out());
        let theta = self.unflatten(v);
        let wmid = self.w1.right();
        // Z[c][s1' * d2 + s2] = sum_{a, s1} W1[a, s1', s1, c] L[a] theta[s1, s2]
        let mut z: Vec<Vec<Option<CMatrix>>> = vec![vec![None; o1 * d2]; wmid];
        let mut y_cache: Vec<Option<Vec<CMatrix>>> = vec![None; self.left.len()];
        for &(a, cc) in &self.blocks1 {
            let y = y_cache[a].get_or_insert_with(|| theta.iter().map(|t| &self.left[a] * t).collect());
            let op = self.w1.op(a, cc);
            for so in 0..o1 {
                for si in 0..d1 {
                    let coef = op[(so, si)];
                    if coef == ZERO {
                        continue;
                    }
                    for s2 in 0..d2 {
                        let term = &y[si * d2 + s2] * coef;
                        let slot = &mut z[cc][so * d2 + s2];
                        match slot {
                            Some(acc) => *acc += term,
                            None => *slot = Some(term),
                        }
                    }
                }
            }
        }
        // U[b][s1' * o2 + s2'] = sum_{c, s2} W2[c, s2', s2, b] Z[c][s1', s2]
        let mut u: Vec<Vec<Option<CMatrix>>> = vec![vec![None; o1 * o2]; self.right.len()];
        for &(cc, b) in &self.blocks2 {
            let op = self.w2.op(cc, b);
            for so in 0..o2 {
                for si in 0..d2 {
                    let coef = op[(so, si)];
                    if coef == ZERO {
                        continue;
                    }
                    for s1 in 0..o1 {
                        if let Some(zm) = &z[cc][s1 * d2 + si] {
                            let term = zm * coef;
                            let slot = &mut u[b][s1 * o2 + so];
                            match slot {
                                Some(acc) => *acc += term,
                                None => *slot = Some(term),
                            }
                        }
                    }
                }
            }
        }
        let mut out = vec![CMatrix::zeros(self.l, self.r); o1 * o2];
        for (b, row) in u.iter().enumerate() {
            for (s, m) in row.iter().enumerate() {
                if let Some(m) = m {
                    out[s] += m * &self.right[b];
                }
            }
        }
        self.flatten(&out, o1, o2)
    }

    /// Dense matrix, column by column.
    pub fn to_dense(&self, limit: usize) -> Result<HermitianMatrix> {
        let n = self.dim();
        if n > limit {
            return Err(Error::DimensionLimit { dim: n, limit });
        }
        let mut m = CMatrix::zeros(n, n);
        let mut e = CVector::zeros(n);
        for j in 0..n {
            e[j] = linalg::ONE;
            m.set_column(j, &self.apply(&e));
            e[j] = ZERO;
        }
        HermitianMatrix::with_tolerance(m, 1e-10)
    }
}

/// Dense two-site effective Hamiltonian.
pub fn effective_hamiltonian(
    env_left: &Environment,
    env_right: &Environment,
    w1: &Tensor4,
    w2: &Tensor4,
    limit: usize,
) -> Result<HermitianMatrix> {
    EffectiveHamiltonian::new(env_left, w1, w2, env_right)?.to_dense(limit)
}

fn theta_vector(a: &Tensor3, b: &Tensor3) -> CVector {
    let (d1, d2, l, r) = (a.phys(), b.phys(), a.left(), b.right());
    let mut v = CVector::zeros(l * d1 * d2 * r);
    for s1 in 0..d1 {
        for s2 in 0..d2 {
            let m = a.slice(s1) * b.slice(s2);
            for x in 0..l {
                for y in 0..r {
                    v[((x * d1 + s1) * d2 + s2) * r + y] = m[(x, y)];
                }
            }
        }
    }
    v
}

fn theta_matrix(v: &CVector, l: usize, d1: usize, d2: usize, r: usize) -> CMatrix {
    CMatrix::from_fn(l * d1, d2 * r, |row, col| v[row * d2 * r + col])
}

fn solve_local(heff: &EffectiveHamiltonian<'_>, start: &CVector, cfg: &SweepConfig) -> Result<(f64, CVector)> {
    let n = heff.dim();
    if n > cfg.dense_limit {
        return Err(Error::DimensionLimit { dim: n, limit: cfg.dense_limit });
    }
    if n <= cfg.dense_solve_max {
        let h = heff.to_dense(cfg.dense_limit)?;
        let (e, v) = linalg::eigh(h.matrix())?;
        return Ok((e[0], v.column(0).into_owned()));
    }
    linalg::lanczos_lowest_with(n, |x| heff.apply(x), start, cfg.lanczos_tol)
}

fn check_inputs(h: &MatrixProductOperator, init: &MatrixProductState) -> Result<()> {
    if h.phys_dims() != init.phys_dims() {
        return Err(Error::Shape("MPO and MPS physical dimensions differ".into()));
    }
    if init.len() < 2 {
        return Err(Error::InvalidArgument("two-site DMRG needs at least two sites".into()));
    }
    let norm = init.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// Ground state with the configured policy and no cross-point charges.
pub fn ground_state(h: &MatrixProductOperator, init: &MatrixProductState, cfg: &SweepConfig) -> Result<DmrgResult> {
    let mut rule = PolicyRule::new(&cfg.policy, cfg.max_bond);
    ground_state_with_rule(h, init, cfg, &mut rule)
}

/// Two-site sweeps left to right and back until the energy settles.
pub fn ground_state_with_rule(
    h: &MatrixProductOperator,
    init: &MatrixProductState,
    cfg: &SweepConfig,
    rule: &mut dyn TruncationRule,
) -> Result<DmrgResult> {
    cfg.validate()?;
    check_inputs(h, init)?;
    let n = init.len();
    let mut psi = init.canonicalize(0)?;
    psi.normalize()?;
    let initial_energy = expectation(&psi, h)?.re;
    let w = h.sites();

    let mut left_envs: Vec<Environment> = vec![boundary_environment(); n + 1];
    let mut right_envs: Vec<Environment> = vec![boundary_environment(); n + 1];
    for i in (1..n).rev() {
        right_envs[i] = extend_right(&right_envs[i + 1], psi.site(i), &w[i], psi.site(i));
    }

    let mut log: Vec<Option<BondLogEntry>> = vec![None; n - 1];
    let mut sweep_energies = Vec::new();
    let mut previous = initial_energy;
    let mut best = initial_energy;
    let mut converged = false;

    let mut step = |psi: &mut MatrixProductState,
                    j: usize,
                    absorb: Side,
                    left_envs: &[Environment],
                    right_envs: &[Environment],
                    log: &mut Vec<Option<BondLogEntry>>|
     -> Result<()> {
        let (a, b) = (psi.site(j), psi.site(j + 1));
        let (l, d1, d2, r) = (a.left(), a.phys(), b.phys(), b.right());
        let heff = EffectiveHamiltonian::new(&left_envs[j], &w[j], &w[j + 1], &right_envs[j + 2])?;
        let start = theta_vector(a, b);
        let (_, v) = solve_local(&heff, &start, cfg)?;
        let theta = theta_matrix(&v, l, d1, d2, r);
        let split = split_two_site(&theta, l, d1, d2, j, &psi.sites()[..j], rule, absorb)?;
        log[j] = Some(BondLogEntry {
            bond: j,
            charges1: split.decision.weights.charges1.clone(),
            charges2: split.decision.weights.charges2.clone(),
            effective: split.decision.weights.effective.clone(),
            spectrum: split.spectrum,
        });
        let center = if absorb == Side::Right { j + 1 } else { j };
        psi.set_pair(j, split.left, split.right, center);
        Ok(())
    };

    for _ in 0..cfg.num_sweeps {
        for j in 0..n - 1 {
            step(&mut psi, j, Side::Right, &left_envs, &right_envs, &mut log)?;
            left_envs[j + 1] = extend_left(&left_envs[j], psi.site(j), &w[j], psi.site(j));
        }
        for j in (0..n - 1).rev() {
            step(&mut psi, j, Side::Left, &left_envs, &right_envs, &mut log)?;
            right_envs[j + 1] = extend_right(&right_envs[j + 2], psi.site(j + 1), &w[j + 1], psi.site(j + 1));
        }
        psi.normalize()?;
        let energy = expectation(&psi, h)?.re;
        sweep_energies.push(energy);
        best = best.min(energy);
        let change = (energy - previous).abs();
        previous = energy;
        if change < cfg.energy_tol {
            converged = true;
            break;
        }
    }

    Ok(DmrgResult {
        energy: previous,
        best_energy: best,
        initial_energy,
        state: psi,
        sweep_energies,
        truncation_log: log.into_iter().flatten().collect(),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        build_spin_chain_mpo, dense_spin_chain_hamiltonian, exact_diagonalization, initial_state, SpinChainSpec,
    };

    fn plus_state(n: usize) -> MatrixProductState {
        initial_state(&SpinChainSpec::tfim(n, 1.0)).unwrap()
    }

    fn neel(n: usize) -> MatrixProductState {
        initial_state(&SpinChainSpec::heisenberg(n)).unwrap()
    }

    #[test]
    fn heisenberg_dimer() {
        let h = build_spin_chain_mpo(&SpinChainSpec::heisenberg(2)).unwrap();
        let res = ground_state(&h, &neel(2), &SweepConfig::default()).unwrap();
        assert!((res.energy + 0.75).abs() < 1e-12);
    }

    #[test]
    fn tfim_eight_sites_matches_exact() {
        let spec = SpinChainSpec::tfim(8, 1.0);
        let h = build_spin_chain_mpo(&spec).unwrap();
        let res = ground_state(&h, &plus_state(8), &SweepConfig::default()).unwrap();
        let (e, _) = exact_diagonalization(&dense_spin_chain_hamiltonian(&spec).unwrap(), 1).unwrap();
        assert!((res.energy - e[0]).abs() < 1e-8, "{} vs {}", res.energy, e[0]);
        assert!(res.converged);
        assert!(res.energy <= res.initial_energy + 1e-12);
        for w in res.sweep_energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn restart_from_ground_state_converges_in_one_sweep() {
        let spec = SpinChainSpec::tfim(6, 0.7);
        let h = build_spin_chain_mpo(&spec).unwrap();
        let cfg = SweepConfig::default();
        let first = ground_state(&h, &plus_state(6), &cfg).unwrap();
        let again = ground_state(&h, &first.state, &cfg).unwrap();
        assert_eq!(again.sweep_energies.len(), 1);
        assert!(again.converged);
    }

    #[test]
    fn trivial_environments_give_two_site_hamiltonian() {
        let spec = SpinChainSpec::tfim(2, 0.3);
        let h = build_spin_chain_mpo(&spec).unwrap();
        let env = boundary_environment();
        let heff = effective_hamiltonian(&env, &env, &h.sites()[0], &h.sites()[1], 4096).unwrap();
        let dense = dense_spin_chain_hamiltonian(&spec).unwrap();
        assert!(linalg::max_abs(&(heff.matrix() - dense.matrix())) < 1e-14);
    }

    #[test]
    fn dimension_limit_is_enforced() {
        let spec = SpinChainSpec::tfim(2, 0.3);
        let h = build_spin_chain_mpo(&spec).unwrap();
        let env = boundary_environment();
        assert!(matches!(
            effective_hamiltonian(&env, &env, &h.sites()[0], &h.sites()[1], 3),
            Err(Error::DimensionLimit { .. })
        ));
    }
}
