//! Warm-started scans over a Hamiltonian parameter, with Schmidt bases
//! tracked across grid points so coherence-aware policies see derivatives.
//!
//! At every bond the left Schmidt states are left-half states: the
//! left-canonical prefix sites followed by the left singular vectors.
//! Overlaps between grid points are taken by transfer contraction. Labels
//! persist across points through max-overlap matching; states without a
//! partner contribute zero columns to `D` and `D2`.

use serde::{Deserialize, Serialize};

use super::{ground_state_with_rule, DmrgResult, SweepConfig};
use crate::error::{Error, Result};
use crate::gauge::{covariant_from_parts, potential_from_derivative};
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};
use crate::spectral::Alignment;
use crate::tn::{
    BondContext, BondDecision, MatrixProductOperator, MatrixProductState, Tensor3, TruncationRule,
};
use crate::truncation::{
    charge_second_order, compute_weights, select_states, TruncationPolicy,
};

/// Left Schmidt basis of one bond at one grid point.
#[derive(Debug, Clone)]
pub struct BondBasis {
    pub prefix: Vec<Tensor3>,
    /// Columns are Schmidt states, rows `a * d + s`.
    pub vectors: CMatrix,
    pub sigma: Vec<f64>,
    /// Persistent label of each column.
    pub labels: Vec<usize>,
}

/// `<prev_i|cur_j>` for left-half states.
fn left_overlap(
    prev_prefix: &[Tensor3],
    prev_vectors: &CMatrix,
    cur_prefix: &[Tensor3],
    cur_vectors: &CMatrix,
) -> Result<CMatrix> {
    if prev_prefix.len() != cur_prefix.len() {
        return Err(Error::Shape("prefixes cover different sites".into()));
    }
    let mut e = CMatrix::from_element(1, 1, ONE);
    for (p, c) in prev_prefix.iter().zip(cur_prefix) {
        let mut next = CMatrix::zeros(p.right(), c.right());
        for s in 0..p.phys() {
            next += p.slice(s).adjoint() * &e * c.slice(s);
        }
        e = next;
    }
    let (lp, lc) = (e.nrows(), e.ncols());
    if !prev_vectors.nrows().is_multiple_of(lp) || !cur_vectors.nrows().is_multiple_of(lc) {
        return Err(Error::Shape("Schmidt vectors do not match their prefix".into()));
    }
    let d = prev_vectors.nrows() / lp;
    let mut out = CMatrix::zeros(prev_vectors.ncols(), cur_vectors.ncols());
    for s in 0..d {
        let ps = CMatrix::from_fn(lp, prev_vectors.ncols(), |a, k| prev_vectors[(a * d + s, k)]);
        let cs = CMatrix::from_fn(lc, cur_vectors.ncols(), |a, k| cur_vectors[(a * d + s, k)]);
        out += ps.adjoint() * &e * cs;
    }
    Ok(out)
}

/// Derivative overlaps of the current basis against its history.
struct Derivatives {
    /// `<prev_matched(j)|cur_j> * phase_j`, rows over the previous basis.
    aligned_overlap: CMatrix,
    phases: Vec<C64>,
    /// Previous column matched to each current column.
    matched: Vec<Option<usize>>,
    d: CMatrix,
    d2: Option<CMatrix>,
    relabelled: bool,
}

fn derivatives(
    prev: &BondBasis,
    prevprev: Option<&BondBasis>,
    cur_prefix: &[Tensor3],
    cur_vectors: &CMatrix,
    h1: f64,
    h2: Option<f64>,
) -> Result<Derivatives> {
    let n = cur_vectors.ncols();
    let m1 = left_overlap(&prev.prefix, &prev.vectors, cur_prefix, cur_vectors)?;
    let alignment = Alignment::from_overlap(&m1);
    let mut matched = vec![None; n];
    for (p, slot) in alignment.assignment.iter().enumerate() {
        if let Some(c) = *slot {
            matched[c] = Some(p);
        }
    }
    let phases = alignment.phases.clone();
    let mut aligned = m1.clone();
    for (j, z) in phases.iter().enumerate() {
        for i in 0..aligned.nrows() {
            aligned[(i, j)] *= *z;
        }
    }
    // <cur~_a|prev_{m(b)}> = conj(aligned[m(b)][a])
    let back = |m: &CMatrix, row: usize, a: usize| -> C64 { m[(row, a)].conj() };
    let mut d = CMatrix::zeros(n, n);
    for b in 0..n {
        if let Some(pb) = matched[b] {
            for a in 0..n {
                let delta = if a == b { ONE } else { ZERO };
                d[(a, b)] = (delta - back(&aligned, pb, a)) / h1;
            }
        }
    }
    let d2 = match (prevprev, h2) {
        (Some(pp), Some(h2)) => {
            let mut m2 = left_overlap(&pp.prefix, &pp.vectors, cur_prefix, cur_vectors)?;
            for (j, z) in phases.iter().enumerate() {
                for i in 0..m2.nrows() {
                    m2[(i, j)] *= *z;
                }
            }
            let w0 = 2.0 / (h1 * (h1 + h2));
            let w1 = -2.0 / (h1 * h2);
            let w2 = 2.0 / (h2 * (h1 + h2));
            let mut out = CMatrix::zeros(n, n);
            for b in 0..n {
                let Some(pb) = matched[b] else { continue };
                let label = prev.labels[pb];
                let Some(qb) = pp.labels.iter().position(|&l| l == label) else { continue };
                for a in 0..n {
                    let delta = if a == b { ONE } else { ZERO };
                    out[(a, b)] = delta * w0 + back(&aligned, pb, a) * w1 + back(&m2, qb, a) * w2;
                }
            }
            Some(out)
        }
        _ => None,
    };
    Ok(Derivatives {
        aligned_overlap: aligned,
        phases,
        matched,
        d,
        d2,
        relabelled: alignment.relabelled,
    })
}

/// Schmidt-basis history and spectra of one bond over a scan.
#[derive(Debug, Clone, Default)]
pub struct BondTrack {
    pub bond: usize,
    pub grid: Vec<f64>,
    /// Kept normalized singular values per grid point.
    pub spectra: Vec<Vec<f64>>,
    pub labels: Vec<Vec<usize>>,
    /// Grid indices where matching had to relabel states.
    pub relabelled_at: Vec<usize>,
    history: Vec<BondBasis>,
    next_label: usize,
}

impl BondTrack {
    fn new(bond: usize) -> Self {
        Self { bond, ..Default::default() }
    }

    fn last(&self) -> Option<&BondBasis> {
        self.history.last()
    }

    fn second_last(&self) -> Option<&BondBasis> {
        self.history.len().checked_sub(2).map(|i| &self.history[i])
    }
}

/// Spacings `(g_k - g_{k-1}, g_{k-1} - g_{k-2})` available at point `k`.
fn spacings(grid: &[f64], k: usize) -> (Option<f64>, Option<f64>) {
    let h1 = (k >= 1).then(|| grid[k] - grid[k - 1]);
    let h2 = (k >= 2).then(|| grid[k - 1] - grid[k - 2]);
    (h1, h2)
}

/// Truncation rule that feeds tracked derivative overlaps into the policy.
pub struct CoherenceRule<'a> {
    policy: TruncationPolicy,
    tracks: &'a [BondTrack],
    h1: Option<f64>,
    h2: Option<f64>,
}

impl<'a> CoherenceRule<'a> {
    pub fn new(cfg: &SweepConfig, tracks: &'a [BondTrack], h1: Option<f64>, h2: Option<f64>) -> Self {
        let mut policy = cfg.policy.clone();
        policy.max_kept = policy.max_kept.min(cfg.max_bond);
        Self { policy, tracks, h1, h2 }
    }
}

impl TruncationRule for CoherenceRule<'_> {
    fn decide(&mut self, ctx: &BondContext<'_>) -> Result<BondDecision> {
        let track = self.tracks.get(ctx.bond);
        let derivs = match (track.and_then(BondTrack::last), self.h1) {
            (Some(prev), Some(h1)) => Some(derivatives(
                prev,
                track.and_then(BondTrack::second_last),
                ctx.left_prefix,
                ctx.left_vectors,
                h1,
                self.h2,
            )?),
            _ => None,
        };
        let (d, d2) = match &derivs {
            Some(x) => (Some(&x.d), x.d2.as_ref()),
            None => (None, None),
        };
        let mut weights = compute_weights(ctx.singular_values, d, d2, &self.policy)?;
        let sel = select_states(&mut weights, &self.policy)?;
        Ok(BondDecision { weights, kept: sel.kept })
    }
}

/// Per-point summary of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub lambda: f64,
    pub energy: f64,
    /// `sum_b Tr[(D rho_b)^dagger (D rho_b)]` over bond density tracks.
    pub coherence_penalty: f64,
    /// `sum_b sum_a p_a Q2_a`.
    pub curvature_penalty: f64,
    pub objective: f64,
    pub converged: bool,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ContinuationScan {
    pub grid: Vec<f64>,
    pub results: Vec<DmrgResult>,
    pub points: Vec<ScanPoint>,
    pub tracks: Vec<BondTrack>,
    pub fidelity_to_oracle: Option<Vec<f64>>,
}

impl ContinuationScan {
    pub fn all_converged(&self) -> bool {
        self.results.iter().all(|r| r.converged)
    }
}

fn schmidt_basis(psi: &MatrixProductState, bond: usize) -> Result<(Vec<Tensor3>, CMatrix, Vec<f64>)> {
    let c = psi.canonicalize(bond)?;
    let m = c.site(bond).left_matrix();
    let svd = m.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Eigensolver("SVD did not return vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let norm = svd.singular_values.norm();
    let keep: Vec<usize> = order.into_iter().filter(|&i| svd.singular_values[i] > 0.0).collect();
    let sigma = keep.iter().map(|&i| svd.singular_values[i] / norm).collect();
    let vectors = CMatrix::from_fn(u.nrows(), keep.len(), |r, k| u[(r, keep[k])]);
    Ok((c.sites()[..bond].to_vec(), vectors, sigma))
}

fn coherence_penalty(p_cur: &[f64], p_prev: &[f64], aligned: &CMatrix, h: f64) -> Result<f64> {
    let rho = linalg::diag_real(p_cur);
    let prev_diag = linalg::diag_real(p_prev);
    let rho_prev = linalg::hermitian_part(&(aligned.adjoint() * prev_diag * aligned));
    let drho = (&rho - &rho_prev).unscale(h);
    let u = linalg::diag_real(&p_cur.iter().map(|p| p.sqrt()).collect::<Vec<_>>());
    let u_prev = linalg::sqrt_psd(&rho_prev, 1e-10)?;
    let du = (&u - u_prev).unscale(h);
    let a = potential_from_derivative(&u, &du);
    let d = covariant_from_parts(&drho, a.matrix(), &rho);
    Ok(d.norm_squared())
}

/// Record the final Schmidt bases of point `k` and return its penalties.
fn record_point(
    tracks: &mut [BondTrack],
    psi: &MatrixProductState,
    grid: &[f64],
    k: usize,
    multiplicity: bool,
) -> Result<(f64, f64)> {
    let (h1, h2) = spacings(grid, k);
    let mut coherence = 0.0;
    let mut curvature = 0.0;
    for track in tracks.iter_mut() {
        let (prefix, mut vectors, sigma) = schmidt_basis(psi, track.bond)?;
        let n = sigma.len();
        let mut labels = Vec::with_capacity(n);
        match (track.last(), h1) {
            (Some(prev), Some(h1)) => {
                let der = derivatives(prev, track.second_last(), &prefix, &vectors, h1, h2)?;
                for (j, z) in der.phases.iter().enumerate() {
                    for r in 0..vectors.nrows() {
                        vectors[(r, j)] *= *z;
                    }
                }
                let p_prev: Vec<f64> = prev.sigma.iter().map(|s| s * s).collect();
                let p_cur: Vec<f64> = sigma.iter().map(|s| s * s).collect();
                coherence += coherence_penalty(&p_cur, &p_prev, &der.aligned_overlap, h1)?;
                if let Some(d2) = &der.d2 {
                    let q2 = charge_second_order(d2, multiplicity)?;
                    curvature += p_cur.iter().zip(&q2).map(|(p, q)| p * q).sum::<f64>();
                }
                let prev_labels = prev.labels.clone();
                for m in &der.matched {
                    labels.push(match m {
                        Some(p) => prev_labels[*p],
                        None => {
                            track.next_label += 1;
                            track.next_label - 1
                        }
                    });
                }
                if der.relabelled {
                    track.relabelled_at.push(k);
                }
            }
            _ => {
                labels.extend(track.next_label..track.next_label + n);
                track.next_label += n;
            }
        }
        track.grid.push(grid[k]);
        track.spectra.push(sigma.clone());
        track.labels.push(labels.clone());
        track.history.push(BondBasis { prefix, vectors, sigma, labels });
        if track.history.len() > 2 {
            track.history.remove(0);
        }
    }
    Ok((coherence, curvature))
}

/// Solve every grid point in order, each warm-started from its predecessor.
///
/// `oracle`, when given, returns the exact ground vector at a grid value;
/// the scan then reports `|<psi|oracle>|^2` per point.
pub fn continuation_scan<F>(
    family: F,
    grid: &[f64],
    init: &MatrixProductState,
    cfg: &SweepConfig,
    oracle: Option<&dyn Fn(f64) -> Result<CVector>>,
) -> Result<ContinuationScan>
where
    F: Fn(f64) -> Result<MatrixProductOperator>,
{
    if grid.is_empty() {
        return Err(Error::Grid("scan grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("scan grid must be strictly increasing".into()));
    }
    cfg.validate()?;
    let mut tracks: Vec<BondTrack> = (0..init.len().saturating_sub(1)).map(BondTrack::new).collect();
    let mut results = Vec::with_capacity(grid.len());
    let mut points = Vec::with_capacity(grid.len());
    let mut fidelities = oracle.map(|_| Vec::with_capacity(grid.len()));
    let mut start = init.clone();
    for k in 0..grid.len() {
        let h = family(grid[k])?;
        let (h1, h2) = spacings(grid, k);
        let result = {
            let mut rule = CoherenceRule::new(cfg, &tracks, h1, h2);
            ground_state_with_rule(&h, &start, cfg, &mut rule)?
        };
        let (coherence, curvature) =
            record_point(&mut tracks, &result.state, grid, k, cfg.policy.second_order_multiplicity)?;
        let fidelity = match oracle {
            Some(f) => {
                let exact = f(grid[k])?;
                let dense = result.state.to_dense();
                if exact.len() != dense.len() {
                    return Err(Error::Shape("oracle vector has the wrong dimension".into()));
                }
                Some(dense.dotc(&exact).norm_sqr() / (dense.norm_squared() * exact.norm_squared()))
            }
            None => None,
        };
        if let (Some(list), Some(f)) = (fidelities.as_mut(), fidelity) {
            list.push(f);
        }
        points.push(ScanPoint {
            lambda: grid[k],
            energy: result.energy,
            coherence_penalty: coherence,
            curvature_penalty: curvature,
            objective: result.energy + cfg.penalty.lambda1 * coherence + cfg.penalty.lambda2 * curvature,
            converged: result.converged,
            fidelity,
        });
        start = result.state.clone();
        results.push(result);
    }
    Ok(ContinuationScan {
        grid: grid.to_vec(),
        results,
        points,
        tracks,
        fidelity_to_oracle: fidelities,
    })
}
