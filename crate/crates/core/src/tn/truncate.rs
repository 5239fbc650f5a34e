use serde::{Deserialize, Serialize};

use super::{MatrixProductState, Tensor3};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::truncation::{compute_weights, select_states, TruncationPolicy, TruncationWeights};

/// Which neighbour receives the singular values after a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// What a truncation rule sees at a bond.
#[derive(Debug, Clone, Copy)]
pub struct BondContext<'a> {
    pub bond: usize,
    /// Full normalized spectrum, descending.
    pub singular_values: &'a [f64],
    /// Left singular vectors matching `singular_values`, rows `a * d + s`.
    pub left_vectors: &'a CMatrix,
    /// Left-canonical sites `0..bond` preceding the split.
    pub left_prefix: &'a [Tensor3],
}

/// A rule's verdict: weights for the log and the kept indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BondDecision {
    pub weights: TruncationWeights,
    pub kept: Vec<usize>,
}

/// Selection hook consulted at every bond split.
pub trait TruncationRule {
    fn decide(&mut self, ctx: &BondContext<'_>) -> Result<BondDecision>;
}

/// A policy applied with zero charges and a bond-dimension cap.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRule {
    pub policy: TruncationPolicy,
}

impl PolicyRule {
    /// `policy` with its cap tightened to `max_bond`.
    pub fn new(policy: &TruncationPolicy, max_bond: usize) -> Self {
        let mut policy = policy.clone();
        policy.max_kept = policy.max_kept.min(max_bond);
        Self { policy }
    }
}

impl TruncationRule for PolicyRule {
    fn decide(&mut self, ctx: &BondContext<'_>) -> Result<BondDecision> {
        let mut weights = compute_weights(ctx.singular_values, None, None, &self.policy)?;
        let sel = select_states(&mut weights, &self.policy)?;
        Ok(BondDecision { weights, kept: sel.kept })
    }
}

/// Kept spectrum at one bond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondSpectrum {
    /// Kept singular values, renormalized to unit norm, descending.
    pub singular_values: Vec<f64>,
    /// Sum of squares of the dropped normalized singular values.
    pub discarded_weight: f64,
    /// Full normalized spectrum before truncation.
    pub full: Vec<f64>,
    /// Indices into `full` that were kept, ascending.
    pub kept: Vec<usize>,
}

/// Result of splitting a two-site block.
#[derive(Debug, Clone)]
pub struct Split {
    pub left: Tensor3,
    pub right: Tensor3,
    pub spectrum: BondSpectrum,
    pub decision: BondDecision,
}

/// SVD-split `theta` (rows `a * d1 + s1`, columns `s2 * r + b`) and keep the
/// states chosen by `rule`.
#[allow(clippy::too_many_arguments)]
pub fn split_two_site(
    theta: &CMatrix,
    left_dim: usize,
    d1: usize,
    d2: usize,
    bond: usize,
    left_prefix: &[Tensor3],
    rule: &mut dyn TruncationRule,
    absorb: Side,
) -> Result<Split> {
    if theta.nrows() != left_dim * d1 || !theta.ncols().is_multiple_of(d2) {
        return Err(Error::Shape("two-site block does not match its dimensions".into()));
    }
    let right_dim = theta.ncols() / d2;
    let svd = theta.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Eigensolver("SVD did not return vectors".into())),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let norm = svd.singular_values.norm();
    if norm == 0.0 {
        return Err(Error::EmptySpectrum);
    }
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i] / norm).collect();
    let u_sorted = CMatrix::from_fn(u.nrows(), order.len(), |r, k| u[(r, order[k])]);
    let decision = rule.decide(&BondContext {
        bond,
        singular_values: &sigma,
        left_vectors: &u_sorted,
        left_prefix,
    })?;
    if decision.kept.is_empty() || decision.kept.iter().any(|&k| k >= sigma.len()) {
        return Err(Error::InvalidArgument("truncation rule returned an invalid kept set".into()));
    }
    let mut kept = decision.kept.clone();
    kept.sort_unstable();
    kept.dedup();
    let kept_norm = kept.iter().map(|&k| sigma[k] * sigma[k]).sum::<f64>().sqrt();
    let values: Vec<f64> = kept.iter().map(|&k| sigma[k] / kept_norm).collect();
    let discarded_weight = (0..sigma.len())
        .filter(|k| kept.binary_search(k).is_err())
        .map(|k| sigma[k] * sigma[k])
        .sum();
    let chi = kept.len();
    let mut uk = CMatrix::from_fn(u.nrows(), chi, |r, j| u_sorted[(r, kept[j])]);
    let mut vk = CMatrix::from_fn(chi, vt.ncols(), |j, col| vt[(order[kept[j]], col)]);
    match absorb {
        Side::Right => {
            for (j, s) in values.iter().enumerate() {
                vk.row_mut(j).scale_mut(*s);
            }
        }
        Side::Left => {
            for (j, s) in values.iter().enumerate() {
                uk.column_mut(j).scale_mut(*s);
            }
        }
    }
    Ok(Split {
        left: Tensor3::from_left_matrix(&uk, left_dim, d1),
        right: Tensor3::from_right_matrix(&vk, d2, right_dim),
        spectrum: BondSpectrum {
            singular_values: values,
            discarded_weight,
            full: sigma,
            kept,
        },
        decision,
    })
}

/// `A[s1] B[s2]` as a matrix with rows `a * d1 + s1`, columns `s2 * r + b`.
pub(crate) fn two_site_matrix(a: &Tensor3, b: &Tensor3) -> CMatrix {
    let (d1, d2, r) = (a.phys(), b.phys(), b.right());
    let mut theta = CMatrix::zeros(a.left() * d1, d2 * r);
    for s1 in 0..d1 {
        for s2 in 0..d2 {
            let blk = a.slice(s1) * b.slice(s2);
            for x in 0..a.left() {
                for y in 0..r {
                    theta[(x * d1 + s1, s2 * r + y)] = blk[(x, y)];
                }
            }
        }
    }
    theta
}

/// Split the bond between sites `bond` and `bond + 1` with `rule`.
///
/// The canonical center must sit on one of the two sites; it stays there.
pub fn svd_truncate(
    psi: &MatrixProductState,
    bond: usize,
    rule: &mut dyn TruncationRule,
) -> Result<(MatrixProductState, BondSpectrum)> {
    if bond + 1 >= psi.len() {
        return Err(Error::Boundary { index: bond, len: psi.len().saturating_sub(1), needed: "bond index" });
    }
    let absorb = match psi.canonical_center() {
        Some(c) if c == bond => Side::Left,
        Some(c) if c == bond + 1 => Side::Right,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "canonical center must be adjacent to bond {bond}"
            )))
        }
    };
    let (a, b) = (psi.site(bond), psi.site(bond + 1));
    let theta = two_site_matrix(a, b);
    let split = split_two_site(
        &theta,
        a.left(),
        a.phys(),
        b.phys(),
        bond,
        &psi.sites()[..bond],
        rule,
        absorb,
    )?;
    let mut out = psi.clone();
    let center = if absorb == Side::Left { bond } else { bond + 1 };
    out.set_pair(bond, split.left, split.right, center);
    Ok((out, split.spectrum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CVector};
    use crate::truncation::TruncationPolicy;

    #[test]
    fn singlet_spectrum() {
        let s = 0.5f64.sqrt();
        let theta = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]);
        let a = Tensor3::from_left_matrix(&theta, 1, 2);
        let b = Tensor3::from_right_matrix(&crate::linalg::identity(2), 2, 1);
        let psi = MatrixProductState::new(vec![a, b]).unwrap().canonicalize(0).unwrap();
        let mut rule = PolicyRule::new(&TruncationPolicy::standard(), 2);
        let (out, spec) = svd_truncate(&psi, 0, &mut rule).unwrap();
        assert!((spec.singular_values[0] - s).abs() < 1e-12);
        assert!((spec.singular_values[1] - s).abs() < 1e-12);
        assert_eq!(spec.discarded_weight, 0.0);
        assert!((out.to_dense() - psi.to_dense()).norm() < 1e-12);
    }

    #[test]
    fn product_state_discards_nothing() {
        let v = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let psi = MatrixProductState::from_product_state(&vec![v; 3]).unwrap();
        let mut rule = PolicyRule::new(&TruncationPolicy::standard(), 4);
        let (_, spec) = svd_truncate(&psi, 0, &mut rule).unwrap();
        assert_eq!(spec.singular_values.len(), 1);
        assert!(spec.discarded_weight < 1e-30);
    }

    #[test]
    fn center_must_touch_bond() {
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let psi = MatrixProductState::from_product_state(&vec![v; 4]).unwrap();
        let mut rule = PolicyRule::new(&TruncationPolicy::standard(), 4);
        assert!(svd_truncate(&psi, 2, &mut rule).is_err());
    }
}
