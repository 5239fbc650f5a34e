//! Eigen-decomposition tracking over parameter grids.
//!
//! A [`SpectralTrack`] holds the eigensystem of a hermitian family at every
//! grid point, with each point's eigenvectors phase-aligned (and, when
//! eigenvalues come close, re-labelled) against the previous point. Finite
//! differences of the aligned eigenvectors give the overlaps `<a|d b>` and
//! `<a|d^2 c>` consumed by the gauge and truncation modules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};

/// Absolute tolerance, relative to the largest entry, for hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Diagonal overlaps below this trigger max-overlap relabelling.
pub const ALIGNMENT_THRESHOLD: f64 = 0.1;

/// A square complex matrix known to be hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates `m = m^dagger` to `1e-12` relative to `max(1, max|m_ij|)`.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!(
                "hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = linalg::max_abs(&m).max(1.0);
        let asym = linalg::hermitian_residual(&m);
        if asym > tol * scale {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
            });
        }
        Ok(Self(linalg::hermitian_part(&m)))
    }

    /// Hermitian part `(m + m^dagger)/2` of an arbitrary square matrix.
    pub fn from_hermitian_part(m: &CMatrix) -> Self {
        Self(linalg::hermitian_part(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// Eigenvalues (ascending unless relabelled by alignment) with orthonormal
/// eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralPoint {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |V^dagger V - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.eigenvectors)
    }

    /// `V diag(p) V^dagger`.
    pub fn reconstruct(&self) -> CMatrix {
        linalg::spectral_map(&self.eigenvalues, &self.eigenvectors, |x| {
            linalg::c(x, 0.0)
        })
    }
}

/// Hermitian eigensolve with ascending, stably sorted eigenvalues.
pub fn eigh_sorted(m: &HermitianMatrix) -> Result<SpectralPoint> {
    let (eigenvalues, eigenvectors) = linalg::eigh(m.matrix())?;
    Ok(SpectralPoint {
        eigenvalues,
        eigenvectors,
    })
}

/// Label matching between a previous basis (rows of the overlap) and a
/// current basis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `assignment[prev] = Some(cur)` for each previous label.
    pub assignment: Vec<Option<usize>>,
    /// Unit phase to multiply into each current column.
    pub phases: Vec<C64>,
    /// Set when some diagonal overlap fell below [`ALIGNMENT_THRESHOLD`] and
    /// the greedy max-overlap relabelling was used.
    pub relabelled: bool,
}

impl Alignment {
    /// Build the matching from `overlap[(prev, cur)] = <prev|cur>`.
    ///
    /// Identity labels are kept while every diagonal overlap reaches the
    /// threshold. Otherwise previous labels are visited in ascending order
    /// and each takes the unassigned current column of largest overlap
    /// modulus, ties going to the lower index. Phases make each matched
    /// overlap real and non-negative.
    pub fn from_overlap(overlap: &CMatrix) -> Self {
        let (n_prev, n_cur) = overlap.shape();
        let common = n_prev.min(n_cur);
        let identity_ok = (0..common).all(|k| overlap[(k, k)].norm() >= ALIGNMENT_THRESHOLD);
        let mut assignment = vec![None; n_prev];
        let relabelled = !identity_ok;
        if identity_ok {
            for (k, slot) in assignment.iter_mut().enumerate().take(common) {
                *slot = Some(k);
            }
        } else {
            let mut taken = vec![false; n_cur];
            for (prev, slot) in assignment.iter_mut().enumerate() {
                let mut best: Option<(usize, f64)> = None;
                for cur in 0..n_cur {
                    if taken[cur] {
                        continue;
                    }
                    let w = overlap[(prev, cur)].norm();
                    if best.is_none_or(|(_, bw)| w > bw) {
                        best = Some((cur, w));
                    }
                }
                if let Some((cur, _)) = best {
                    taken[cur] = true;
                    *slot = Some(cur);
                }
            }
        }
        let mut phases = vec![ONE; n_cur];
        for (prev, slot) in assignment.iter().enumerate() {
            if let Some(cur) = *slot {
                let z = overlap[(prev, cur)];
                if z.norm() > 0.0 {
                    phases[cur] = z.conj() / z.norm();
                }
            }
        }
        Self {
            assignment,
            phases,
            relabelled,
        }
    }

    /// Current column placed at each output position: matched columns at
    /// their previous label, unmatched ones appended in ascending order.
    pub fn ordering(&self, n_cur: usize) -> Vec<usize> {
        let mut order: Vec<usize> = self.assignment.iter().flatten().copied().collect();
        let mut used = vec![false; n_cur];
        for &k in &order {
            used[k] = true;
        }
        order.extend((0..n_cur).filter(|&k| !used[k]));
        order
    }
}

/// Align `cur` to `prev`: relabel if needed, then multiply each eigenvector
/// by the unit phase making `<a_prev|a_cur>` real and non-negative.
///
/// The returned flag reports that relabelling took place.
pub fn align_phases(prev: &SpectralPoint, cur: &SpectralPoint) -> Result<(SpectralPoint, bool)> {
    if prev.dim() != cur.dim() || prev.eigenvectors.nrows() != cur.eigenvectors.nrows() {
        return Err(Error::Shape(format!(
            "cannot align spectra of dimension {} and {}",
            prev.dim(),
            cur.dim()
        )));
    }
    let overlap = prev.eigenvectors.adjoint() * &cur.eigenvectors;
    let alignment = Alignment::from_overlap(&overlap);
    let order = alignment.ordering(cur.dim());
    let mut eigenvectors = CMatrix::zeros(cur.eigenvectors.nrows(), cur.dim());
    let mut eigenvalues = Vec::with_capacity(cur.dim());
    for (dst, &src) in order.iter().enumerate() {
        let col = cur.eigenvectors.column(src) * alignment.phases[src];
        eigenvectors.set_column(dst, &col);
        eigenvalues.push(cur.eigenvalues[src]);
    }
    Ok((
        SpectralPoint {
            eigenvalues,
            eigenvectors,
        },
        alignment.relabelled,
    ))
}

/// Finite-difference stencil for `<a|d b>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    Central,
    Forward,
    Backward,
}

/// Eigensystems over an ordered parameter grid, phase-aligned left to right.
#[derive(Debug, Clone)]
pub struct SpectralTrack {
    grid: Vec<f64>,
    points: Vec<SpectralPoint>,
    /// Grid indices where alignment had to relabel eigenvectors.
    relabelled_at: Vec<usize>,
}

impl SpectralTrack {
    /// Diagonalize each matrix and align every point against its predecessor.
    pub fn build(grid: &[f64], matrices: &[HermitianMatrix]) -> Result<Self> {
        if grid.len() != matrices.len() {
            return Err(Error::Shape(format!(
                "{} grid values for {} matrices",
                grid.len(),
                matrices.len()
            )));
        }
        let points = matrices
            .iter()
            .map(eigh_sorted)
            .collect::<Result<Vec<_>>>()?;
        Self::from_points(grid.to_vec(), points)
    }

    /// Align a sequence of already-diagonalized points.
    pub fn from_points(grid: Vec<f64>, points: Vec<SpectralPoint>) -> Result<Self> {
        if grid.is_empty() || grid.len() != points.len() {
            return Err(Error::Grid(format!(
                "need a non-empty grid matching {} points, got {}",
                points.len(),
                grid.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("grid must be strictly increasing".into()));
        }
        let mut aligned = Vec::with_capacity(points.len());
        let mut relabelled_at = Vec::new();
        let mut iter = points.into_iter();
        aligned.push(iter.next().expect("non-empty"));
        for (k, point) in iter.enumerate() {
            let (p, flag) = align_phases(aligned.last().expect("non-empty"), &point)?;
            if flag {
                relabelled_at.push(k + 1);
            }
            aligned.push(p);
        }
        Ok(Self {
            grid,
            points: aligned,
            relabelled_at,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn points(&self) -> &[SpectralPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn relabelled_at(&self) -> &[usize] {
        &self.relabelled_at
    }

    fn vectors(&self, k: usize) -> &CMatrix {
        &self.points[k].eigenvectors
    }

    /// Spacing if the grid is uniform to `1e-9` relative.
    pub fn uniform_spacing(&self) -> Option<f64> {
        if self.grid.len() < 2 {
            return None;
        }
        let h = self.grid[1] - self.grid[0];
        self.grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
            .then_some(h)
    }
}

/// `D[a][b] = <a(k)| d b(k)>` by finite differences on the actual spacing.
pub fn derivative_overlaps(track: &SpectralTrack, k: usize, scheme: DiffScheme) -> Result<CMatrix> {
    let n = track.len();
    if k >= n {
        return Err(Error::Boundary {
            index: k,
            len: n,
            needed: "valid",
        });
    }
    let (lo, hi) = match scheme {
        DiffScheme::Central => {
            if k == 0 || k + 1 >= n {
                return Err(Error::Boundary {
                    index: k,
                    len: n,
                    needed: "two-sided",
                });
            }
            (k - 1, k + 1)
        }
        DiffScheme::Forward => {
            if k + 1 >= n {
                return Err(Error::Boundary {
                    index: k,
                    len: n,
                    needed: "forward",
                });
            }
            (k, k + 1)
        }
        DiffScheme::Backward => {
            if k == 0 {
                return Err(Error::Boundary {
                    index: k,
                    len: n,
                    needed: "backward",
                });
            }
            (k - 1, k)
        }
    };
    let h = track.grid[hi] - track.grid[lo];
    let diff = (track.vectors(hi) - track.vectors(lo)).unscale(h);
    Ok(track.vectors(k).adjoint() * diff)
}

/// `D2[a][c] = <a(k)| d^2 c(k)>` by the three-point second difference.
/// Requires uniform spacing.
pub fn second_derivative_overlaps(track: &SpectralTrack, k: usize) -> Result<CMatrix> {
    let n = track.len();
    if k == 0 || k + 1 >= n {
        return Err(Error::Boundary {
            index: k,
            len: n,
            needed: "two-sided",
        });
    }
    let h = track
        .uniform_spacing()
        .ok_or_else(|| Error::Grid("second differences need uniform spacing".into()))?;
    let second = (track.vectors(k + 1) - track.vectors(k).scale(2.0) + track.vectors(k - 1))
        .unscale(h * h);
    Ok(track.vectors(k).adjoint() * second)
}

/// Zero matrix helper for callers that need a placeholder overlap block.
pub fn zero_overlaps(n: usize) -> CMatrix {
    CMatrix::from_element(n, n, ZERO)
}
