//! Dense complex linear algebra shared by every module.
//!
//! Everything is stored as `nalgebra` dense matrices of [`C64`]. Real
//! Hamiltonians are still complex-typed; [`eigh`] detects purely real input
//! and takes the faster real-symmetric path.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Build a matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_slice(
        rows,
        cols,
        &entries.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>(),
    )
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |M - M^dagger|`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |M + M^dagger|`.
pub fn antihermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] + m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M^dagger) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `max |V^dagger V - I|`.
pub fn unitarity_residual(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    max_abs(&(g - identity(v.ncols())))
}

fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
///
/// The sort is stable, and every eigenvector is rotated so that its first
/// largest-magnitude component is real and positive. Only the lower triangle
/// is trusted; callers validate hermiticity.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Shape(format!("eigh on {}x{} matrix", n, m.ncols())));
    }
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigensolver("non-finite matrix entry".into()));
    }
    let (values, vectors): (Vec<f64>, CMatrix) = if is_real(m) {
        let re = DMatrix::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let eig = SymmetricEigen::new(re);
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| c(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let mut sorted = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).into_owned();
        fix_phase(&mut col);
        sorted.set_column(dst, &col);
    }
    Ok((sorted_values, sorted))
}

/// Rotate a vector so its first largest-magnitude component is real positive.
pub fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, z) in v.iter().enumerate() {
        // Small slack so that ties resolve to the first index.
        if z.norm() > best_norm * (1.0 + 1e-10) {
            best_norm = z.norm();
            best = i;
        }
    }
    if best_norm > 0.0 {
        let phase = v[best].conj() / best_norm;
        for z in v.iter_mut() {
            *z *= phase;
        }
        v[best] = c(v[best].norm(), 0.0);
    }
}

/// `V f(p) V^dagger` for a hermitian matrix with eigenpairs `(p, V)`.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let fj = f(values[j]);
        for i in 0..vectors.nrows() {
            scaled[(i, j)] *= fj;
        }
    }
    scaled * vectors.adjoint()
}

/// Principal square root of a hermitian PSD matrix. Eigenvalues below
/// `-tol` are rejected, those in `[-tol, 0)` are clamped to zero.
pub fn sqrt_psd(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (p, v) = eigh(m)?;
    if let Some(&lowest) = p.first() {
        if lowest < -tol {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {lowest:e}"
            )));
        }
    }
    Ok(spectral_map(&p, &v, |x| c(x.max(0.0).sqrt(), 0.0)))
}

/// `exp(-i H t)` for hermitian `H`.
pub fn expm_i(h: &CMatrix, t: f64) -> Result<CMatrix> {
    if h.nrows() == 2 {
        return Ok(expm_i_2x2(h, t));
    }
    let (e, v) = eigh(h)?;
    Ok(spectral_map(&e, &v, |x| C64::from_polar(1.0, -x * t)))
}

/// Closed form for 2x2: `H = a I + b.sigma`.
fn expm_i_2x2(h: &CMatrix, t: f64) -> CMatrix {
    let a = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let bz = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let bx = 0.5 * (h[(0, 1)].re + h[(1, 0)].re);
    let by = 0.5 * (h[(1, 0)].im - h[(0, 1)].im);
    let b = (bx * bx + by * by + bz * bz).sqrt();
    let global = C64::from_polar(1.0, -a * t);
    let (cos, sin) = ((b * t).cos(), (b * t).sin());
    // sin(bt)/b, with the b -> 0 limit.
    let s = if b > 0.0 { sin / b } else { t };
    let m00 = c(cos, -s * bz);
    let m11 = c(cos, s * bz);
    let m01 = -I * s * c(bx, -by);
    let m10 = -I * s * c(bx, by);
    CMatrix::from_row_slice(2, 2, &[m00, m01, m10, m11]).map(|z| z * global)
}

/// Lowest eigenpair of a dense hermitian matrix by restarted Lanczos with
/// full reorthogonalization, seeded with `start`.
///
/// Deterministic for a given input. Returns `(eigenvalue, unit eigenvector)`.
pub fn lanczos_lowest(h: &CMatrix, start: &CVector, tol: f64) -> Result<(f64, CVector)> {
    lanczos_lowest_with(h.nrows(), |v| h * v, start, tol)
}

/// [`lanczos_lowest`] for an operator given only by its action on vectors.
pub fn lanczos_lowest_with(
    n: usize,
    apply: impl Fn(&CVector) -> CVector,
    start: &CVector,
    tol: f64,
) -> Result<(f64, CVector)> {
    let krylov_dim = n.min(64);
    let mut v0 = start.clone();
    if v0.norm() < 1e-14 {
        v0 = CVector::from_element(n, ONE);
    }
    v0.unscale_mut(v0.norm());

    let mut best = (f64::INFINITY, v0.clone());
    for _restart in 0..200 {
        let mut basis: Vec<CVector> = vec![v0.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for j in 0..krylov_dim {
            let mut w = apply(&basis[j]);
            let alpha = basis[j].dotc(&w).re;
            alphas.push(alpha);
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&w);
                    w.axpy(-proj, b, ONE);
                }
            }
            let beta = w.norm();
            if j + 1 == krylov_dim || beta < 1e-13 {
                break;
            }
            betas.push(beta);
            w.unscale_mut(beta);
            basis.push(w);
        }
        let m = alphas.len();
        let t = DMatrix::<f64>::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (k, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::Eigensolver("empty Krylov space".into()))?;
        let mut ritz = CVector::zeros(n);
        for (i, b) in basis.iter().enumerate().take(m) {
            ritz.axpy(c(eig.eigenvectors[(i, k)], 0.0), b, ONE);
        }
        ritz.unscale_mut(ritz.norm());
        let residual = (apply(&ritz) - ritz.scale(theta)).norm();
        best = (theta, ritz.clone());
        if residual <= tol * theta.abs().max(1.0) || m == n {
            return Ok(best);
        }
        v0 = ritz;
    }
    // Restarts exhausted: the Ritz pair is still the best variational estimate.
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorts_ascending_and_reconstructs() {
        let m = real_matrix(3, 3, &[2.0, 1.0, 0.0, 1.0, -1.0, 0.5, 0.0, 0.5, 0.3]);
        let (p, v) = eigh(&m).unwrap();
        assert!(p.windows(2).all(|w| w[0] <= w[1]));
        let rec = spectral_map(&p, &v, |x| c(x, 0.0));
        assert!(max_abs(&(rec - &m)) < 1e-12);
    }

    #[test]
    fn expm_2x2_matches_spectral_route() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.2, -0.7), c(0.2, 0.7), c(-1.1, 0.0)]);
        let closed = expm_i(&h, 0.37).unwrap();
        let (e, v) = eigh(&h).unwrap();
        let spectral = spectral_map(&e, &v, |x| C64::from_polar(1.0, -0.37 * x));
        assert!(max_abs(&(closed - spectral)) < 1e-13);
    }

    #[test]
    fn lanczos_finds_lowest_of_dense_matrix() {
        let n = 40;
        let h = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(i as f64 * 0.1 - 1.0, 0.0)
            } else if i + 1 == j {
                c(0.3, 0.1)
            } else if j + 1 == i {
                c(0.3, -0.1)
            } else {
                ZERO
            }
        });
        let (e_dense, _) = eigh(&h).unwrap();
        let start = CVector::from_fn(n, |i, _| c(1.0 / (1.0 + i as f64), 0.0));
        let (e, v) = lanczos_lowest(&h, &start, 1e-12).unwrap();
        assert!((e - e_dense[0]).abs() < 1e-10);
        assert!(((&h * &v) - v.scale(e)).norm() < 1e-9);
    }

    #[test]
    fn sqrt_psd_rejects_negative() {
        let m = diag_real(&[0.5, -0.1]);
        assert!(matches!(sqrt_psd(&m, 1e-12), Err(Error::InvalidDensity(_))));
    }
}
