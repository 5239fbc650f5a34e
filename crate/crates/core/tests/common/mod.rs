#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uhlmann_dmrg::gauge::DensityMatrix;
use uhlmann_dmrg::linalg::{self, c, CMatrix, I};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    linalg::hermitian_part(&m)
}

/// `V(t) = exp(-i t G3) exp(-i t^2 G4)` with its exact derivative.
pub struct UnitaryFamily {
    pub g3: CMatrix,
    pub g4: CMatrix,
}

impl UnitaryFamily {
    pub fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        Self { g3: random_hermitian(n, rng), g4: random_hermitian(n, rng) }
    }

    pub fn value(&self, t: f64) -> CMatrix {
        linalg::expm_i(&self.g3, t).unwrap() * linalg::expm_i(&self.g4, t * t).unwrap()
    }

    pub fn derivative(&self, t: f64) -> CMatrix {
        let e3 = linalg::expm_i(&self.g3, t).unwrap();
        let e4 = linalg::expm_i(&self.g4, t * t).unwrap();
        (&self.g3 * &e3 * &e4) * (-I) + &e3 * &self.g4 * &e4 * (-I * 2.0 * t)
    }
}

/// `rho(t) = W(t) diag(p(t)) W(t)^dagger` with `W(t) = exp(-i t G)` and
/// `p(t)` a softmax of affine logits; full rank and smooth.
pub struct DensityFamily {
    pub g: CMatrix,
    pub offsets: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl DensityFamily {
    pub fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
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

    pub fn matrix(&self, t: f64) -> CMatrix {
        let w = linalg::expm_i(&self.g, t).unwrap();
        linalg::hermitian_part(&(&w * linalg::diag_real(&self.weights(t)) * w.adjoint()))
    }

    pub fn density(&self, t: f64) -> DensityMatrix {
        DensityMatrix::new(self.matrix(t)).unwrap()
    }
}

pub fn uniform_grid(t0: f64, h: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t0 + h * k as f64).collect()
}
