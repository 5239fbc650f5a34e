//! Coherence-aware truncation weights and state selection.
//!
//! Every policy ranks Schmidt states by a score and keeps the best ones.
//! The standard policy ranks by `sigma`. The gauge policies damp `sigma`
//! by per-state charges; the coherence-eigenvalue policies add charges to
//! the probabilities `p = sigma^2`. Kept states always carry their raw
//! weights, renormalized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Pairs with `p_a + p_b` below this contribute nothing to `Q`.
pub const PAIR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Standard,
    Uhlmann,
    Categorified,
    CoherenceEigenvalue,
    #[serde(rename = "coherence_eigenvalue_2")]
    CoherenceEigenvalue2,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Standard,
        PolicyKind::Uhlmann,
        PolicyKind::Categorified,
        PolicyKind::CoherenceEigenvalue,
        PolicyKind::CoherenceEigenvalue2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Standard => "standard",
            PolicyKind::Uhlmann => "uhlmann",
            PolicyKind::Categorified => "categorified",
            PolicyKind::CoherenceEigenvalue => "coherence_eigenvalue",
            PolicyKind::CoherenceEigenvalue2 => "coherence_eigenvalue_2",
        }
    }

    /// Whether scores live on the probability scale (`p`) rather than `sigma`.
    pub fn probability_scale(self) -> bool {
        matches!(
            self,
            PolicyKind::CoherenceEigenvalue | PolicyKind::CoherenceEigenvalue2
        )
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_max_kept() -> usize {
    usize::MAX
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationPolicy {
    pub kind: PolicyKind,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma2: f64,
    #[serde(default)]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda2: f64,
    #[serde(default = "default_max_kept")]
    pub max_kept: usize,
    #[serde(default)]
    pub cutoff: f64,
    /// Count the summed index of the second-order charge as a factor `dim`.
    #[serde(default = "default_true")]
    pub second_order_multiplicity: bool,
}

impl TruncationPolicy {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            gamma1: 0.0,
            gamma2: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
            max_kept: usize::MAX,
            cutoff: 0.0,
            second_order_multiplicity: true,
        }
    }

    pub fn standard() -> Self {
        Self::new(PolicyKind::Standard)
    }

    pub fn with_max_kept(mut self, max_kept: usize) -> Self {
        self.max_kept = max_kept;
        self
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_gammas(mut self, gamma1: f64, gamma2: f64) -> Self {
        self.gamma1 = gamma1;
        self.gamma2 = gamma2;
        self
    }

    pub fn with_lambdas(mut self, lambda1: f64, lambda2: f64) -> Self {
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.max_kept == 0 {
            return Err(Error::InvalidArgument("max_kept must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.cutoff) {
            return Err(Error::InvalidArgument(format!(
                "cutoff must lie in [0, 1), got {}",
                self.cutoff
            )));
        }
        Ok(())
    }

    /// The coefficients this kind actually uses, in `(gamma1, gamma2)` or
    /// `(lambda1, lambda2)` order.
    pub fn active_coefficients(&self) -> (f64, f64) {
        match self.kind {
            PolicyKind::Standard => (0.0, 0.0),
            PolicyKind::Uhlmann => (self.gamma1, 0.0),
            PolicyKind::Categorified => (self.gamma1, self.gamma2),
            PolicyKind::CoherenceEigenvalue => (self.lambda1, 0.0),
            PolicyKind::CoherenceEigenvalue2 => (self.lambda1, self.lambda2),
        }
    }

    pub fn coefficients_are_zero(&self) -> bool {
        self.active_coefficients() == (0.0, 0.0)
    }
}

/// Raw weights, charges, and scores for one Schmidt spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationWeights {
    /// `sigma` (or `p` for probability-scale kinds), descending.
    pub raw: Vec<f64>,
    pub charges1: Vec<f64>,
    pub charges2: Vec<f64>,
    /// `sigma_eff` or `p~`.
    pub effective: Vec<f64>,
    /// Filled by [`select_states`].
    pub kept: Vec<usize>,
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("probabilities must be non-negative".into()));
    }
    let total: f64 = p.iter().sum();
    if total > 1.0 + 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total} > 1"
        )));
    }
    Ok(())
}

fn check_square(m: &CMatrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Shape(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `Q_a = sum_{b != a} (p_a - p_b)^2 p_a p_b / (p_a + p_b)^2 |D[a][b]|^2`.
pub fn charge_first_order(p: &[f64], d: &CMatrix) -> Result<Vec<f64>> {
    check_probabilities(p)?;
    check_square(d, p.len(), "derivative overlap")?;
    Ok((0..p.len())
        .map(|a| {
            (0..p.len())
                .filter(|&b| b != a)
                .map(|b| {
                    let s = p[a] + p[b];
                    if s < PAIR_FLOOR {
                        return 0.0;
                    }
                    let diff = p[a] - p[b];
                    diff * diff * p[a] * p[b] / (s * s) * d[(a, b)].norm_sqr()
                })
                .sum()
        })
        .collect())
}

/// `Q2_a = m * sum_c |D2[a][c]|^2` with `m = dim` when `multiplicity` is set,
/// else `m = 1`.
pub fn charge_second_order(d2: &CMatrix, multiplicity: bool) -> Result<Vec<f64>> {
    let n = d2.nrows();
    check_square(d2, n, "second derivative overlap")?;
    let m = if multiplicity { n as f64 } else { 1.0 };
    Ok((0..n)
        .map(|a| m * (0..n).map(|c| d2[(a, c)].norm_sqr()).sum::<f64>())
        .collect())
}

/// `sigma_eff = sigma * exp(-gamma1 Q1 - gamma2 Q2)`; the Uhlmann kind
/// ignores `gamma2`, the standard kind ignores both.
pub fn effective_singular_values(
    sigma: &[f64],
    q1: &[f64],
    q2: &[f64],
    policy: &TruncationPolicy,
) -> Result<Vec<f64>> {
    if q1.len() != sigma.len() || q2.len() != sigma.len() {
        return Err(Error::Shape(format!(
            "{} singular values with {} and {} charges",
            sigma.len(),
            q1.len(),
            q2.len()
        )));
    }
    if sigma.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::InvalidArgument("singular values must be non-negative".into()));
    }
    let (g1, g2) = match policy.kind {
        PolicyKind::Standard => (0.0, 0.0),
        PolicyKind::Uhlmann => (policy.gamma1, 0.0),
        _ => (policy.gamma1, policy.gamma2),
    };
    Ok(sigma
        .iter()
        .zip(q1.iter().zip(q2))
        .map(|(&s, (&a, &b))| {
            if g1 == 0.0 && g2 == 0.0 {
                s
            } else {
                s * (-g1 * a - g2 * b).exp()
            }
        })
        .collect())
}

/// `p~ = p + lambda1 Q1`.
pub fn coherence_eigenvalues(p: &[f64], d: &CMatrix, lambda1: f64) -> Result<Vec<f64>> {
    let q = charge_first_order(p, d)?;
    Ok(p.iter().zip(&q).map(|(&pa, &qa)| pa + lambda1 * qa).collect())
}

/// `p~2 = p + lambda1 Q1 + lambda2 Q2`.
pub fn coherence_eigenvalues_2(
    p: &[f64],
    d: &CMatrix,
    d2: &CMatrix,
    lambda1: f64,
    lambda2: f64,
    multiplicity: bool,
) -> Result<Vec<f64>> {
    let q1 = charge_first_order(p, d)?;
    let q2 = charge_second_order(d2, multiplicity)?;
    if q2.len() != p.len() {
        return Err(Error::Shape("second derivative overlap has wrong dimension".into()));
    }
    Ok((0..p.len())
        .map(|a| p[a] + lambda1 * q1[a] + lambda2 * q2[a])
        .collect())
}

/// Raw weights, charges, and scores for a descending Schmidt spectrum.
///
/// `d` and `d2` are the first and second derivative overlaps of the Schmidt
/// basis along the scan; missing overlaps mean zero charges.
pub fn compute_weights(
    sigma: &[f64],
    d: Option<&CMatrix>,
    d2: Option<&CMatrix>,
    policy: &TruncationPolicy,
) -> Result<TruncationWeights> {
    policy.validate()?;
    if sigma.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::InvalidArgument("singular values must be non-negative".into()));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("singular values must be descending".into()));
    }
    let n = sigma.len();
    let norm2: f64 = sigma.iter().map(|s| s * s).sum();
    let p: Vec<f64> = if norm2 > 0.0 {
        sigma.iter().map(|s| s * s / norm2).collect()
    } else {
        vec![0.0; n]
    };
    let charges1 = match d {
        Some(d) => charge_first_order(&p, d)?,
        None => vec![0.0; n],
    };
    let charges2 = match d2 {
        Some(d2) => {
            check_square(d2, n, "second derivative overlap")?;
            charge_second_order(d2, policy.second_order_multiplicity)?
        }
        None => vec![0.0; n],
    };
    let (raw, effective) = match policy.kind {
        PolicyKind::CoherenceEigenvalue | PolicyKind::CoherenceEigenvalue2 => {
            let (l1, l2) = policy.active_coefficients();
            let eff = (0..n).map(|a| p[a] + l1 * charges1[a] + l2 * charges2[a]).collect();
            (p, eff)
        }
        _ => {
            let eff = effective_singular_values(sigma, &charges1, &charges2, policy)?;
            (sigma.to_vec(), eff)
        }
    };
    Ok(TruncationWeights {
        raw,
        charges1,
        charges2,
        effective,
        kept: Vec::new(),
    })
}

/// Kept states and their renormalized raw weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Original indices, ordered by descending score.
    pub kept: Vec<usize>,
    /// Raw weights of the kept states: unit 2-norm for `sigma`, unit sum
    /// for `p`.
    pub retained: Vec<f64>,
}

/// Selection scores on the probability scale: `p~` for probability kinds,
/// `sigma_eff^2 / sum sigma^2` otherwise.
pub fn selection_scores(weights: &TruncationWeights, policy: &TruncationPolicy) -> Vec<f64> {
    if policy.kind.probability_scale() {
        return weights.effective.clone();
    }
    let raw_norm2: f64 = weights.raw.iter().map(|s| s * s).sum();
    weights.effective.iter().map(|&e| e * e / raw_norm2).collect()
}

/// Rank by score, apply the relative cutoff and the `max_kept` cap.
///
/// Scores come from [`selection_scores`], so `cutoff` always acts on the
/// probability scale. Ties keep the lower original index first.
pub fn select_states(weights: &mut TruncationWeights, policy: &TruncationPolicy) -> Result<Selection> {
    policy.validate()?;
    let n = weights.raw.len();
    if weights.effective.len() != n {
        return Err(Error::Shape("effective and raw weights differ in length".into()));
    }
    if !weights.raw.iter().any(|&w| w > 0.0) {
        return Err(Error::EmptySpectrum);
    }
    let prob_scale = policy.kind.probability_scale();
    let score = selection_scores(weights, policy);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let best = score[order[0]];
    let threshold = policy.cutoff * best;
    let mut kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| score[i] >= threshold && weights.raw[i] > 0.0)
        .take(policy.max_kept)
        .collect();
    if kept.is_empty() {
        // Every positive-score state has zero raw weight; keep the best raw one.
        let top = (0..n)
            .max_by(|&a, &b| weights.raw[a].total_cmp(&weights.raw[b]).then(b.cmp(&a)))
            .expect("non-empty spectrum");
        kept.push(top);
    }
    let retained: Vec<f64> = kept.iter().map(|&i| weights.raw[i]).collect();
    let retained = if prob_scale {
        let total: f64 = retained.iter().sum();
        retained.iter().map(|w| w / total).collect()
    } else {
        let norm = retained.iter().map(|w| w * w).sum::<f64>().sqrt();
        retained.iter().map(|w| w / norm).collect()
    };
    weights.kept = kept.clone();
    Ok(Selection { kept, retained })
}

/// `energy + lambda1 * coherence_penalty + lambda2 * curvature_penalty`.
pub fn augmented_local_objective(
    energy: f64,
    coherence_penalty: f64,
    curvature_penalty: f64,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    if coherence_penalty < 0.0 || curvature_penalty < 0.0 {
        return Err(Error::InvalidArgument("penalties must be non-negative".into()));
    }
    Ok(energy + lambda1 * coherence_penalty + lambda2 * curvature_penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_matrix};

    fn d01(mag2: f64) -> CMatrix {
        let m = mag2.sqrt();
        real_matrix(2, 2, &[0.0, m, -m, 0.0])
    }

    #[test]
    fn first_order_charge_examples() {
        assert_eq!(charge_first_order(&[0.9, 0.1], &CMatrix::zeros(2, 2)).unwrap(), vec![0.0, 0.0]);
        assert_eq!(charge_first_order(&[0.5, 0.5], &d01(7.0)).unwrap(), vec![0.0, 0.0]);
        let q = charge_first_order(&[0.9, 0.1], &d01(4.0)).unwrap();
        assert!((q[0] - 0.2304).abs() < 1e-12);
        assert!(charge_first_order(&[0.9, 0.1], &CMatrix::zeros(3, 3)).is_err());
        assert!(charge_first_order(&[0.9, 0.2], &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn vanishing_pairs_contribute_nothing() {
        let q = charge_first_order(&[1.0, 0.0, 0.0], &CMatrix::from_element(3, 3, c(1.0, 0.0))).unwrap();
        assert_eq!(q, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn second_order_charge_examples() {
        assert_eq!(charge_second_order(&CMatrix::zeros(2, 2), true).unwrap(), vec![0.0, 0.0]);
        let d2 = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(charge_second_order(&d2, true).unwrap()[0], 2.0);
        assert_eq!(charge_second_order(&d2, false).unwrap()[0], 1.0);
        let scaled = charge_second_order(&d2.scale(3.0), true).unwrap();
        assert!((scaled[0] - 18.0).abs() < 1e-12);
    }

    #[test]
    fn effective_singular_value_examples() {
        let p = TruncationPolicy::new(PolicyKind::Categorified);
        assert_eq!(
            effective_singular_values(&[0.8, 0.6], &[2.0, 0.0], &[1.0, 1.0], &p).unwrap(),
            vec![0.8, 0.6]
        );
        let p = TruncationPolicy::new(PolicyKind::Uhlmann).with_gammas(1.0, 5.0);
        let e = effective_singular_values(&[0.5], &[2f64.ln()], &[1.0], &p).unwrap();
        assert!((e[0] - 0.25).abs() < 1e-15);
        let e = effective_singular_values(&[0.8, 0.6], &[2.0, 0.0], &[0.0, 0.0], &p).unwrap();
        assert!((e[0] - 0.8 * (-2f64).exp()).abs() < 1e-15 && e[1] == 0.6);
        assert!(e[0] < e[1]);
        assert!(effective_singular_values(&[-0.1], &[0.0], &[0.0], &p).is_err());
        assert!(effective_singular_values(&[0.1], &[0.0, 1.0], &[0.0], &p).is_err());
    }

    #[test]
    fn coherence_eigenvalue_examples() {
        assert_eq!(coherence_eigenvalues(&[0.9, 0.1], &d01(4.0), 0.0).unwrap(), vec![0.9, 0.1]);
        let pt = coherence_eigenvalues(&[0.9, 0.1], &d01(4.0), 0.5).unwrap();
        assert!((pt[0] - 1.0152).abs() < 1e-12);
        assert_eq!(coherence_eigenvalues(&[0.5, 0.5], &d01(4.0), 3.0).unwrap(), vec![0.5, 0.5]);

        let d2 = real_matrix(2, 2, &[0.3, 0.1, 0.2, 0.4]);
        let p2 = coherence_eigenvalues_2(&[0.9, 0.1], &d01(4.0), &d2, 0.5, 0.0, true).unwrap();
        assert_eq!(p2, pt);
        let zero = coherence_eigenvalues_2(&[0.9, 0.1], &d01(4.0), &d2, 0.0, 0.0, true).unwrap();
        assert_eq!(zero, vec![0.9, 0.1]);
    }

    #[test]
    fn selection_examples() {
        let policy = TruncationPolicy::standard().with_max_kept(2);
        let mut w = compute_weights(&[0.9, 0.4, 0.1], None, None, &policy).unwrap();
        let sel = select_states(&mut w, &policy).unwrap();
        assert_eq!(sel.kept, vec![0, 1]);
        let norm: f64 = sel.retained.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-15);

        let policy = TruncationPolicy::new(PolicyKind::Uhlmann).with_gammas(1.0, 0.0).with_max_kept(1);
        let mut w = TruncationWeights {
            raw: vec![0.8, 0.6],
            charges1: vec![2.0, 0.0],
            charges2: vec![0.0, 0.0],
            effective: effective_singular_values(&[0.8, 0.6], &[2.0, 0.0], &[0.0, 0.0], &policy).unwrap(),
            kept: vec![],
        };
        assert_eq!(select_states(&mut w, &policy).unwrap().kept, vec![1]);
        assert_eq!(w.kept, vec![1]);
    }

    #[test]
    fn all_zero_spectrum_is_an_error() {
        let policy = TruncationPolicy::standard();
        let mut w = compute_weights(&[0.0, 0.0], None, None, &policy).unwrap();
        assert_eq!(select_states(&mut w, &policy), Err(Error::EmptySpectrum));
    }

    #[test]
    fn cutoff_is_relative_on_probability_scale() {
        let policy = TruncationPolicy::standard().with_cutoff(0.01);
        let mut w = compute_weights(&[1.0, 0.2, 0.05], None, None, &policy).unwrap();
        // scores 1, 0.04, 0.0025
        assert_eq!(select_states(&mut w, &policy).unwrap().kept, vec![0, 1]);
    }

    #[test]
    fn objective_examples() {
        assert_eq!(augmented_local_objective(-1.0, 0.5, 0.25, 0.0, 0.0).unwrap(), -1.0);
        assert_eq!(augmented_local_objective(-1.0, 0.5, 0.25, 1.0, 2.0).unwrap(), 0.0);
        assert!(augmented_local_objective(-1.0, -0.5, 0.25, 1.0, 2.0).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::standard().with_max_kept(0).validate().is_err());
        assert!(TruncationPolicy::standard().with_cutoff(1.0).validate().is_err());
        assert!(TruncationPolicy::standard().with_gammas(-1.0, 0.0).validate().is_err());
        assert!(TruncationPolicy::standard().with_lambdas(f64::NAN, 0.0).validate().is_err());
    }
}
