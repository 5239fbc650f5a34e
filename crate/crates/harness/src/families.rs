//! Seeded random smooth families used by the gauge diagnostics.

use rand::Rng;
use uhlmann_dmrg::gauge::DensityMatrix;
use uhlmann_dmrg::linalg::{self, c, CMatrix, I};
use uhlmann_dmrg::Result;

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    linalg::hermitian_part(&m)
}

/// `V(t) = exp(-i t G1) exp(-i t^2 G2)` with its exact derivative.
#[derive(Debug, Clone)]
pub struct UnitaryFamily {
    pub g1: CMatrix,
    pub g2: CMatrix,
}

impl UnitaryFamily {
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        Self { g1: random_hermitian(n, rng), g2: random_hermitian(n, rng) }
    }

    pub fn value(&self, t: f64) -> Result<CMatrix> {
        Ok(linalg::expm_i(&self.g1, t)? * linalg::expm_i(&self.g2, t * t)?)
    }

    pub fn derivative(&self, t: f64) -> Result<CMatrix> {
        let e1 = linalg::expm_i(&self.g1, t)?;
        let e2 = linalg::expm_i(&self.g2, t * t)?;
        Ok((&self.g1 * &e1 * &e2) * (-I) + &e1 * &self.g2 * &e2 * (-I * 2.0 * t))
    }
}

/// `rho(t) = W(t) diag(p(t)) W(t)^dagger`, `W(t) = exp(-i t G)`, with
/// `p(t)` a softmax of affine logits. Full rank with distinct weights.
#[derive(Debug, Clone)]
pub struct DensityFamily {
    pub g: CMatrix,
    pub offsets: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl DensityFamily {
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        Self {
            g: random_hermitian(n, rng),
            offsets: (0..n).map(|k| k as f64 + rng.gen_range(0.0..0.5)).collect(),
            slopes: (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        }
    }

    pub fn weights(&self, t: f64) -> Vec<f64> {
        let logits: Vec<f64> = self.offsets.iter().zip(&self.slopes).map(|(a, b)| -(a + b * t)).collect();
        let z: f64 = logits.iter().map(|x| x.exp()).sum();
        logits.iter().map(|x| x.exp() / z).collect()
    }

    pub fn matrix(&self, t: f64) -> Result<CMatrix> {
        let w = linalg::expm_i(&self.g, t)?;
        Ok(linalg::hermitian_part(&(&w * linalg::diag_real(&self.weights(t)) * w.adjoint())))
    }

    pub fn density(&self, t: f64) -> Result<DensityMatrix> {
        DensityMatrix::new(self.matrix(t)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn unitary_derivative_matches_finite_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let v = UnitaryFamily::random(3, &mut rng);
        let h = 1e-6;
        let fd = (v.value(0.4 + h).unwrap() - v.value(0.4 - h).unwrap()).unscale(2.0 * h);
        assert!(linalg::max_abs(&(fd - v.derivative(0.4).unwrap())) < 1e-8);
        assert!(linalg::unitarity_residual(&v.value(0.4).unwrap()) < 1e-12);
    }

    #[test]
    fn density_family_is_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let f = DensityFamily::random(4, &mut rng);
        for t in [-1.0, 0.0, 2.0] {
            assert!(f.density(t).is_ok());
        }
    }
}
