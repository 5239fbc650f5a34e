mod common;

use common::{random_hermitian, rng};
use uhlmann_dmrg::gauge::{curvature_field, pure_gauge_potential, CommutatorConvention};
use uhlmann_dmrg::linalg::{self, c, CMatrix};
use uhlmann_dmrg::spectral::{derivative_overlaps, DiffScheme, HermitianMatrix, SpectralTrack};

fn assert_second_order(errors: &[f64]) {
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio} from {errors:?}");
    }
}

fn real_symmetric(seed: u64, n: usize) -> CMatrix {
    let mut r = rng(seed);
    random_hermitian(n, &mut r).map(|z| c(z.re, 0.0))
}

#[test]
fn antisymmetry_defect_is_second_order() {
    let (a, b, q) = (real_symmetric(1, 3), real_symmetric(2, 3), real_symmetric(3, 3));
    let family = |t: f64| HermitianMatrix::from_hermitian_part(&(&a + &b * c(t, 0.0) + &q * c(t * t, 0.0)));
    let t0 = 0.3;
    let errors: Vec<f64> = (0..4)
        .map(|level| {
            let h = 0.05 / 2f64.powi(level);
            let grid = [t0 - h, t0, t0 + h];
            let mats: Vec<_> = grid.iter().map(|&t| family(t)).collect();
            let track = SpectralTrack::build(&grid, &mats).unwrap();
            let d = derivative_overlaps(&track, 1, DiffScheme::Central).unwrap();
            linalg::max_abs(&(&d + d.adjoint()))
        })
        .collect();
    assert_second_order(&errors);
}

#[test]
fn pure_gauge_curvature_is_second_order() {
    let mut r = rng(4);
    let gs: Vec<CMatrix> = (0..3).map(|_| random_hermitian(2, &mut r)).collect();
    let v = |s1: f64, s2: f64| {
        linalg::expm_i(&gs[0], s1).unwrap() * linalg::expm_i(&gs[1], s2).unwrap() * linalg::expm_i(&gs[2], s1 * s2).unwrap()
    };
    let errors: Vec<f64> = (0..4)
        .map(|level| {
            let n = 4 * 2usize.pow(level) + 1;
            let axis: Vec<f64> = (0..n).map(|k| 0.4 * k as f64 / (n - 1) as f64).collect();
            let samples: Vec<CMatrix> = axis.iter().flat_map(|&x| axis.iter().map(move |&y| (x, y))).map(|(x, y)| v(x, y)).collect();
            let a = pure_gauge_potential(axis.clone(), axis.clone(), &samples).unwrap();
            curvature_field(&a, CommutatorConvention::Hermitian).unwrap().max_norm()
        })
        .collect();
    assert_second_order(&errors);
}
