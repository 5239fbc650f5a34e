use serde::{Deserialize, Serialize};

use super::{grid_derivative, ActionParams};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I};

/// How the commutator enters field strengths.
///
/// `Hermitian` uses `F = dA - dA + i[A, A]`, which vanishes on pure gauges
/// `A = i (dV) V^dagger` and keeps `F` hermitian. `Literal` uses the plain
/// commutator `F = dA - dA + [A, A]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutatorConvention {
    #[default]
    Hermitian,
    Literal,
}

impl CommutatorConvention {
    fn bracket(self, x: &CMatrix, y: &CMatrix) -> CMatrix {
        let comm = linalg::commutator(x, y);
        match self {
            Self::Hermitian => comm * I,
            Self::Literal => comm,
        }
    }
}

/// Two potential components sampled on a rectangular grid.
///
/// Values are stored row-major: point `(i, j)` is at `i * axis2.len() + j`.
#[derive(Debug, Clone)]
pub struct PotentialGrid2d {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub a1: Vec<CMatrix>,
    pub a2: Vec<CMatrix>,
}

impl PotentialGrid2d {
    pub fn new(axis1: Vec<f64>, axis2: Vec<f64>, a1: Vec<CMatrix>, a2: Vec<CMatrix>) -> Result<Self> {
        let n = axis1.len() * axis2.len();
        if a1.len() != n || a2.len() != n {
            return Err(Error::Shape(format!(
                "{}x{} grid needs {n} values per component",
                axis1.len(),
                axis2.len()
            )));
        }
        for axis in [&axis1, &axis2] {
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Grid("axes must be strictly increasing".into()));
            }
        }
        Ok(Self { axis1, axis2, a1, a2 })
    }

    /// The same pair of matrices at every grid point.
    pub fn constant(axis1: Vec<f64>, axis2: Vec<f64>, a1: CMatrix, a2: CMatrix) -> Result<Self> {
        let n = axis1.len() * axis2.len();
        Self::new(axis1, axis2, vec![a1; n], vec![a2; n])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    fn at(&self, i: usize, j: usize) -> usize {
        i * self.axis2.len() + j
    }

    fn check_interior(&self, i: usize, j: usize) -> Result<()> {
        let (n1, n2) = self.shape();
        if i == 0 || i + 1 >= n1 {
            return Err(Error::Boundary { index: i, len: n1, needed: "interior on axis 1" });
        }
        if j == 0 || j + 1 >= n2 {
            return Err(Error::Boundary { index: j, len: n2, needed: "interior on axis 2" });
        }
        Ok(())
    }

    /// Central derivative of component 2 along axis 1 and of component 1
    /// along axis 2, at an interior point.
    fn cross_derivatives(&self, i: usize, j: usize) -> (CMatrix, CMatrix) {
        let h1 = self.axis1[i + 1] - self.axis1[i - 1];
        let h2 = self.axis2[j + 1] - self.axis2[j - 1];
        let d1_a2 = (&self.a2[self.at(i + 1, j)] - &self.a2[self.at(i - 1, j)]).unscale(h1);
        let d2_a1 = (&self.a1[self.at(i, j + 1)] - &self.a1[self.at(i, j - 1)]).unscale(h2);
        (d1_a2, d2_a1)
    }
}

/// `A_mu = i (d_mu V) V^dagger` from unitary samples on a rectangular grid.
///
/// Derivatives are central in the interior and three-point one-sided on the
/// edges.
pub fn pure_gauge_potential(axis1: Vec<f64>, axis2: Vec<f64>, v: &[CMatrix]) -> Result<PotentialGrid2d> {
    let (n1, n2) = (axis1.len(), axis2.len());
    if v.len() != n1 * n2 {
        return Err(Error::Shape("unitary samples do not fill the grid".into()));
    }
    let mut a1 = Vec::with_capacity(v.len());
    let mut a2 = Vec::with_capacity(v.len());
    for i in 0..n1 {
        for j in 0..n2 {
            let column: Vec<CMatrix> = (0..n1).map(|r| v[r * n2 + j].clone()).collect();
            let dv1 = grid_derivative(&column, &axis1, i)?;
            let dv2 = grid_derivative(&v[i * n2..(i + 1) * n2], &axis2, j)?;
            let vd = v[i * n2 + j].adjoint();
            a1.push(linalg::hermitian_part(&(dv1 * &vd * I)));
            a2.push(linalg::hermitian_part(&(dv2 * &vd * I)));
        }
    }
    PotentialGrid2d::new(axis1, axis2, a1, a2)
}

/// Field strength `F_12` at interior point `(i, j)`.
pub fn curvature(a: &PotentialGrid2d, i: usize, j: usize, convention: CommutatorConvention) -> Result<CMatrix> {
    a.check_interior(i, j)?;
    let (d1_a2, d2_a1) = a.cross_derivatives(i, j);
    let p = a.at(i, j);
    Ok(d1_a2 - d2_a1 + convention.bracket(&a.a1[p], &a.a2[p]))
}

/// `B_12 = d_1 B_2 - d_2 B_1 + [A_1, B_2] - [A_2, B_1]` at interior `(i, j)`.
pub fn higher_field_strength(
    a: &PotentialGrid2d,
    b: &PotentialGrid2d,
    i: usize,
    j: usize,
    convention: CommutatorConvention,
) -> Result<CMatrix> {
    if a.axis1 != b.axis1 || a.axis2 != b.axis2 {
        return Err(Error::Grid("potential and B field live on different grids".into()));
    }
    b.check_interior(i, j)?;
    let (d1_b2, d2_b1) = b.cross_derivatives(i, j);
    let p = a.at(i, j);
    Ok(d1_b2 - d2_b1 + convention.bracket(&a.a1[p], &b.a2[p]) - convention.bracket(&a.a2[p], &b.a1[p]))
}

/// One field-strength component per plaquette, with quadrature weights.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub values: Vec<CMatrix>,
    pub measure: Vec<f64>,
}

impl CurvatureField {
    pub fn new(values: Vec<CMatrix>, measure: Vec<f64>) -> Result<Self> {
        if values.len() != measure.len() {
            return Err(Error::Shape("one measure weight per plaquette".into()));
        }
        Ok(Self { values, measure })
    }

    /// Largest entry magnitude over all plaquettes.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }
}

fn interior_cells(a: &PotentialGrid2d) -> Vec<(usize, usize, f64)> {
    let (n1, n2) = a.shape();
    let mut cells = Vec::new();
    for i in 1..n1.saturating_sub(1) {
        for j in 1..n2.saturating_sub(1) {
            let w1 = 0.5 * (a.axis1[i + 1] - a.axis1[i - 1]);
            let w2 = 0.5 * (a.axis2[j + 1] - a.axis2[j - 1]);
            cells.push((i, j, w1 * w2));
        }
    }
    cells
}

/// `F_12` at every interior point, weighted by its cell area.
pub fn curvature_field(a: &PotentialGrid2d, convention: CommutatorConvention) -> Result<CurvatureField> {
    let cells = interior_cells(a);
    let values = cells
        .iter()
        .map(|&(i, j, _)| curvature(a, i, j, convention))
        .collect::<Result<_>>()?;
    CurvatureField::new(values, cells.iter().map(|c| c.2).collect())
}

/// `B_12` at every interior point, weighted by its cell area.
pub fn higher_field(
    a: &PotentialGrid2d,
    b: &PotentialGrid2d,
    convention: CommutatorConvention,
) -> Result<CurvatureField> {
    let cells = interior_cells(a);
    let values = cells
        .iter()
        .map(|&(i, j, _)| higher_field_strength(a, b, i, j, convention))
        .collect::<Result<_>>()?;
    CurvatureField::new(values, cells.iter().map(|c| c.2).collect())
}

/// `sum_p w_p [Tr(F^dagger F)/g1^2 + Tr((F^dagger F)^2)/g2^4]`.
pub fn curvature_action(f: &CurvatureField, params: &ActionParams) -> Result<f64> {
    params.validate()?;
    if f.values.is_empty() {
        return Err(Error::InvalidArgument("curvature field has no plaquettes".into()));
    }
    let mut total = 0.0;
    for (value, w) in f.values.iter().zip(&f.measure) {
        let ff = value.adjoint() * value;
        let quad = linalg::trace(&ff).re;
        let quart = linalg::trace(&(&ff * &ff)).re;
        total += w * (quad / params.g1.powi(2) + quart / params.g2.powi(4));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_y, pauli_z};

    fn axes() -> (Vec<f64>, Vec<f64>) {
        (vec![0.0, 0.1, 0.2], vec![0.0, 0.1, 0.2])
    }

    #[test]
    fn constant_commuting_potential_is_flat() {
        let (x, y) = axes();
        let a = PotentialGrid2d::constant(x, y, pauli_z(), pauli_z().scale(2.0)).unwrap();
        for conv in [CommutatorConvention::Hermitian, CommutatorConvention::Literal] {
            assert_eq!(linalg::max_abs(&curvature(&a, 1, 1, conv).unwrap()), 0.0);
        }
    }

    #[test]
    fn constant_pauli_pair_curvature() {
        let (x, y) = axes();
        let a = PotentialGrid2d::constant(x, y, pauli_x(), pauli_y()).unwrap();
        let lit = curvature(&a, 1, 1, CommutatorConvention::Literal).unwrap();
        assert!(linalg::max_abs(&(lit - pauli_z() * (I * 2.0))) < 1e-15);
        let herm = curvature(&a, 1, 1, CommutatorConvention::Hermitian).unwrap();
        assert!(linalg::max_abs(&(herm + pauli_z().scale(2.0))) < 1e-15);
        assert!(matches!(
            curvature(&a, 0, 1, CommutatorConvention::Hermitian),
            Err(Error::Boundary { .. })
        ));
    }

    #[test]
    fn higher_field_strength_cases() {
        let (x, y) = axes();
        let z = CMatrix::zeros(2, 2);
        let a = PotentialGrid2d::constant(x.clone(), y.clone(), pauli_z(), z.clone()).unwrap();
        let b = PotentialGrid2d::constant(x.clone(), y.clone(), z.clone(), pauli_x()).unwrap();
        let lit = higher_field_strength(&a, &b, 1, 1, CommutatorConvention::Literal).unwrap();
        assert!(linalg::max_abs(&(lit - pauli_y() * (I * 2.0))) < 1e-15);

        let b0 = PotentialGrid2d::constant(x.clone(), y.clone(), z.clone(), z.clone()).unwrap();
        let out = higher_field_strength(&a, &b0, 1, 1, CommutatorConvention::Hermitian).unwrap();
        assert_eq!(linalg::max_abs(&out), 0.0);

        let a0 = PotentialGrid2d::constant(x.clone(), y.clone(), z.clone(), z.clone()).unwrap();
        let bc = PotentialGrid2d::constant(x, y, pauli_x(), pauli_y()).unwrap();
        let out = higher_field_strength(&a0, &bc, 1, 1, CommutatorConvention::Hermitian).unwrap();
        assert_eq!(linalg::max_abs(&out), 0.0);
    }

    #[test]
    fn curvature_action_hand_arithmetic() {
        let f = CurvatureField::new(vec![pauli_z() * (I * 2.0)], vec![1.0]).unwrap();
        let p = ActionParams::default();
        assert!((curvature_action(&f, &p).unwrap() - 40.0).abs() < 1e-12);
        let doubled = ActionParams { g1: 2.0, ..p };
        assert!((curvature_action(&f, &doubled).unwrap() - (8.0 / 4.0 + 32.0)).abs() < 1e-12);

        let zero = CurvatureField::new(vec![CMatrix::zeros(2, 2); 4], vec![0.25; 4]).unwrap();
        assert_eq!(curvature_action(&zero, &p).unwrap(), 0.0);
        let empty = CurvatureField::new(vec![], vec![]).unwrap();
        assert!(curvature_action(&empty, &p).is_err());
    }
}
