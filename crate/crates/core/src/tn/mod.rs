//! Matrix product states and operators.
//!
//! A site tensor `A[a, s, b]` is stored as one `left x right` matrix per
//! physical index `s`. An MPO tensor `W[a, s', s, b]` is stored as one
//! `d_out x d_in` operator per bond pair `(a, b)`. Dense vectors order sites
//! with site 0 most significant, matching `kron(site0, site1, ...)`.

mod truncate;

pub use truncate::{
    split_two_site, svd_truncate, BondContext, BondDecision, BondSpectrum, PolicyRule, Side,
    TruncationRule,
};

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, ONE, ZERO};

/// Rank-3 MPS site tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    left: usize,
    right: usize,
    mats: Vec<CMatrix>,
}

impl Tensor3 {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        Self {
            left,
            right,
            mats: vec![CMatrix::zeros(left, right); phys],
        }
    }

    pub fn from_matrices(mats: Vec<CMatrix>) -> Result<Self> {
        let first = mats.first().ok_or_else(|| Error::Shape("site tensor needs a physical index".into()))?;
        let (left, right) = first.shape();
        if mats.iter().any(|m| m.shape() != (left, right)) {
            return Err(Error::Shape("physical slices differ in shape".into()));
        }
        Ok(Self { left, right, mats })
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn phys(&self) -> usize {
        self.mats.len()
    }

    pub fn get(&self, a: usize, s: usize, b: usize) -> C64 {
        self.mats[s][(a, b)]
    }

    pub fn slice(&self, s: usize) -> &CMatrix {
        &self.mats[s]
    }

    pub fn slices(&self) -> &[CMatrix] {
        &self.mats
    }

    /// `(left * phys) x right`, row index `a * phys + s`.
    pub fn left_matrix(&self) -> CMatrix {
        let d = self.phys();
        CMatrix::from_fn(self.left * d, self.right, |row, b| self.mats[row % d][(row / d, b)])
    }

    /// `left x (phys * right)`, column index `s * right + b`.
    pub fn right_matrix(&self) -> CMatrix {
        let r = self.right;
        CMatrix::from_fn(self.left, self.phys() * r, |a, col| self.mats[col / r][(a, col % r)])
    }

    pub fn from_left_matrix(m: &CMatrix, left: usize, phys: usize) -> Self {
        let right = m.ncols();
        let mats = (0..phys)
            .map(|s| CMatrix::from_fn(left, right, |a, b| m[(a * phys + s, b)]))
            .collect();
        Self { left, right, mats }
    }

    pub fn from_right_matrix(m: &CMatrix, phys: usize, right: usize) -> Self {
        let left = m.nrows();
        let mats = (0..phys)
            .map(|s| CMatrix::from_fn(left, right, |a, b| m[(a, s * right + b)]))
            .collect();
        Self { left, right, mats }
    }

    /// `sum_s A[s]^dagger A[s] - I`, largest entry.
    pub fn left_isometry_residual(&self) -> f64 {
        let mut acc = -linalg::identity(self.right);
        for m in &self.mats {
            acc += m.adjoint() * m;
        }
        linalg::max_abs(&acc)
    }

    /// `sum_s A[s] A[s]^dagger - I`, largest entry.
    pub fn right_isometry_residual(&self) -> f64 {
        let mut acc = -linalg::identity(self.left);
        for m in &self.mats {
            acc += m * m.adjoint();
        }
        linalg::max_abs(&acc)
    }

    fn scale_mut(&mut self, z: C64) {
        for m in &mut self.mats {
            *m *= z;
        }
    }

    /// Contract `M` into the left bond: `A'[s] = M A[s]`.
    fn absorb_left(&mut self, m: &CMatrix) {
        for a in &mut self.mats {
            *a = m * &*a;
        }
        self.left = m.nrows();
    }

    /// Contract `M` into the right bond: `A'[s] = A[s] M`.
    fn absorb_right(&mut self, m: &CMatrix) {
        for a in &mut self.mats {
            *a = &*a * m;
        }
        self.right = m.ncols();
    }
}

/// Rank-4 MPO site tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    left: usize,
    right: usize,
    d_out: usize,
    d_in: usize,
    ops: Vec<CMatrix>,
}

impl Tensor4 {
    pub fn zeros(left: usize, d_out: usize, d_in: usize, right: usize) -> Self {
        Self {
            left,
            right,
            d_out,
            d_in,
            ops: vec![CMatrix::zeros(d_out, d_in); left * right],
        }
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    /// Operator block `W[a, :, :, b]`.
    pub fn op(&self, a: usize, b: usize) -> &CMatrix {
        &self.ops[a * self.right + b]
    }

    pub fn set_op(&mut self, a: usize, b: usize, op: CMatrix) -> Result<()> {
        if op.shape() != (self.d_out, self.d_in) {
            return Err(Error::Shape("MPO block has the wrong physical shape".into()));
        }
        self.ops[a * self.right + b] = op;
        Ok(())
    }

    pub fn get(&self, a: usize, so: usize, si: usize, b: usize) -> C64 {
        self.op(a, b)[(so, si)]
    }

    /// Nonzero `(a, b)` blocks.
    pub(crate) fn nonzero_blocks(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.left {
            for b in 0..self.right {
                if self.op(a, b).iter().any(|z| *z != ZERO) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Matrix product state with an optional orthogonality center.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProductState {
    sites: Vec<Tensor3>,
    center: Option<usize>,
}

fn check_chain(sites: &[Tensor3]) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::Shape("MPS needs at least one site".into()));
    }
    if sites[0].left != 1 || sites[sites.len() - 1].right != 1 {
        return Err(Error::Shape("boundary bonds must have dimension 1".into()));
    }
    for (i, w) in sites.windows(2).enumerate() {
        if w[0].right != w[1].left {
            return Err(Error::Shape(format!(
                "bond {i} mismatch: {} vs {}",
                w[0].right, w[1].left
            )));
        }
    }
    Ok(())
}

impl MatrixProductState {
    /// Wrap site tensors without any canonical-form claim.
    pub fn new(sites: Vec<Tensor3>) -> Result<Self> {
        check_chain(&sites)?;
        Ok(Self { sites, center: None })
    }

    /// Product state from one unit vector per site.
    pub fn from_product_state(local_states: &[CVector]) -> Result<Self> {
        let sites = local_states
            .iter()
            .map(|v| {
                if (v.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::NotNormalized { norm: v.norm() });
                }
                Tensor3::from_matrices(v.iter().map(|&z| CMatrix::from_element(1, 1, z)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        check_chain(&sites)?;
        // Every site is both a left and a right isometry.
        Ok(Self { sites, center: Some(0) })
    }

    /// Random normalized MPS with bond dimensions capped at `chi`, in
    /// canonical form centered at site 0.
    pub fn random<R: Rng>(phys_dims: &[usize], chi: usize, rng: &mut R) -> Result<Self> {
        let n = phys_dims.len();
        if n == 0 || chi == 0 || phys_dims.contains(&0) {
            return Err(Error::InvalidArgument("random MPS needs sites, chi > 0 and d > 0".into()));
        }
        let mut bonds = vec![1usize; n + 1];
        for i in 1..n {
            let left: f64 = phys_dims[..i].iter().map(|&d| d as f64).product();
            let right: f64 = phys_dims[i..].iter().map(|&d| d as f64).product();
            bonds[i] = (chi as f64).min(left).min(right) as usize;
        }
        let sites = (0..n)
            .map(|i| {
                let mats = (0..phys_dims[i])
                    .map(|_| {
                        CMatrix::from_fn(bonds[i], bonds[i + 1], |_, _| {
                            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        })
                    })
                    .collect();
                Tensor3::from_matrices(mats)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut psi = Self::new(sites)?.canonicalize(0)?;
        psi.normalize()?;
        Ok(psi)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Tensor3] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Tensor3 {
        &self.sites[i]
    }

    pub fn canonical_center(&self) -> Option<usize> {
        self.center
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(Tensor3::phys).collect()
    }

    /// Dimension of each internal bond, left to right.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|s| s.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Replace two adjacent sites after a two-site update.
    pub(crate) fn set_pair(&mut self, i: usize, left: Tensor3, right: Tensor3, center: usize) {
        self.sites[i] = left;
        self.sites[i + 1] = right;
        self.center = Some(center);
    }

    /// Largest isometry violation against the stored canonical center.
    pub fn canonical_residual(&self) -> Option<f64> {
        let c = self.center?;
        let left = self.sites[..c].iter().map(Tensor3::left_isometry_residual);
        let right = self.sites[c + 1..].iter().map(Tensor3::right_isometry_residual);
        Some(left.chain(right).fold(0.0, f64::max))
    }

    /// Mixed canonical form with orthogonality center `center`, by QR sweeps.
    pub fn canonicalize(&self, center: usize) -> Result<Self> {
        let n = self.len();
        if center >= n {
            return Err(Error::Boundary { index: center, len: n, needed: "site index" });
        }
        let mut sites = self.sites.clone();
        for i in 0..center {
            let d = sites[i].phys();
            let l = sites[i].left;
            let qr = sites[i].left_matrix().qr();
            let (q, r) = (qr.q(), qr.r());
            sites[i] = Tensor3::from_left_matrix(&q, l, d);
            sites[i + 1].absorb_left(&r);
        }
        for i in (center + 1..n).rev() {
            let d = sites[i].phys();
            let r = sites[i].right;
            // LQ via QR of the adjoint.
            let qr = sites[i].right_matrix().adjoint().qr();
            let (q, rr) = (qr.q(), qr.r());
            sites[i] = Tensor3::from_right_matrix(&q.adjoint(), d, r);
            sites[i - 1].absorb_right(&rr.adjoint());
        }
        Ok(Self { sites, center: Some(center) })
    }

    /// Move the center and rescale to unit norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let c = match self.center {
            Some(c) => c,
            None => {
                *self = self.canonicalize(0)?;
                0
            }
        };
        let norm = self.sites[c].mats.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        self.sites[c].scale_mut(c64(1.0 / norm));
        Ok(norm)
    }

    pub fn norm(&self) -> f64 {
        inner_product(self, self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    /// Dense state vector.
    pub fn to_dense(&self) -> CVector {
        // Row vector of the contracted prefix, one row per basis string.
        let mut acc = CMatrix::from_element(1, 1, ONE);
        for site in &self.sites {
            let d = site.phys();
            let mut next = CMatrix::zeros(acc.nrows() * d, site.right);
            for row in 0..acc.nrows() {
                let prefix = acc.row(row);
                for s in 0..d {
                    next.row_mut(row * d + s).copy_from(&(prefix * site.slice(s)));
                }
            }
            acc = next;
        }
        CVector::from_column_slice(acc.column(0).as_slice())
    }

    /// Schmidt probabilities at `bond` (between sites `bond` and `bond + 1`).
    pub fn entanglement_spectrum(&self, bond: usize) -> Result<Vec<f64>> {
        if bond + 1 >= self.len() {
            return Err(Error::Boundary { index: bond, len: self.len() - 1, needed: "bond index" });
        }
        let psi = if self.center == Some(bond) { self.clone() } else { self.canonicalize(bond)? };
        let mut sigma: Vec<f64> = psi.sites[bond].left_matrix().singular_values().iter().copied().collect();
        sigma.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = sigma.iter().map(|s| s * s).sum();
        if total == 0.0 {
            return Err(Error::EmptySpectrum);
        }
        Ok(sigma.iter().map(|s| s * s / total).collect())
    }
}

fn c64(x: f64) -> C64 {
    c(x, 0.0)
}

/// Matrix product operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProductOperator {
    sites: Vec<Tensor4>,
}

impl MatrixProductOperator {
    pub fn new(sites: Vec<Tensor4>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Shape("MPO needs at least one site".into()));
        }
        if sites[0].left != 1 || sites[sites.len() - 1].right != 1 {
            return Err(Error::Shape("boundary MPO bonds must have dimension 1".into()));
        }
        if sites.windows(2).any(|w| w[0].right != w[1].left) {
            return Err(Error::Shape("MPO bond dimensions do not chain".into()));
        }
        Ok(Self { sites })
    }

    /// Identity operator on the given physical dimensions.
    pub fn identity(phys_dims: &[usize]) -> Result<Self> {
        Self::product(&phys_dims.iter().map(|&d| linalg::identity(d)).collect::<Vec<_>>())
    }

    /// `op_0 (x) op_1 (x) ...` with bond dimension 1.
    pub fn product(ops: &[CMatrix]) -> Result<Self> {
        let sites = ops
            .iter()
            .map(|op| {
                let mut w = Tensor4::zeros(1, op.nrows(), op.ncols(), 1);
                w.set_op(0, 0, op.clone())?;
                Ok(w)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }

    /// Random MPO with entries uniform in the unit complex square.
    pub fn random<R: Rng>(phys_dims: &[usize], bond: usize, rng: &mut R) -> Result<Self> {
        let n = phys_dims.len();
        let sites = (0..n)
            .map(|i| {
                let l = if i == 0 { 1 } else { bond };
                let r = if i + 1 == n { 1 } else { bond };
                let d = phys_dims[i];
                let mut w = Tensor4::zeros(l, d, d, r);
                for op in &mut w.ops {
                    *op = CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                }
                w
            })
            .collect();
        Self::new(sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Tensor4] {
        &self.sites
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|w| w.d_in).collect()
    }

    /// Dense operator matrix.
    pub fn to_dense(&self) -> CMatrix {
        // acc[b] is the dense operator on the processed prefix ending in bond b.
        let mut acc: Vec<CMatrix> = vec![CMatrix::from_element(1, 1, ONE)];
        for w in &self.sites {
            let mut next = vec![CMatrix::zeros(0, 0); w.right];
            for (b, slot) in next.iter_mut().enumerate() {
                let mut sum: Option<CMatrix> = None;
                for (a, prefix) in acc.iter().enumerate() {
                    let blk = w.op(a, b);
                    if blk.iter().all(|z| *z == ZERO) {
                        continue;
                    }
                    let term = linalg::kron(prefix, blk);
                    sum = Some(match sum {
                        Some(s) => s + term,
                        None => term,
                    });
                }
                let rows = acc[0].nrows() * w.d_out;
                let cols = acc[0].ncols() * w.d_in;
                *slot = sum.unwrap_or_else(|| CMatrix::zeros(rows, cols));
            }
            acc = next;
        }
        acc.swap_remove(0)
    }
}

/// Left environment blocks: one `bra x ket` matrix per MPO bond index.
pub type Environment = Vec<CMatrix>;

/// Trivial boundary environment.
pub fn boundary_environment() -> Environment {
    vec![CMatrix::from_element(1, 1, ONE)]
}

/// `L'[b] = sum W[a, s', s, b] B[s']^dagger L[a] K[s]`.
pub fn extend_left(env: &Environment, bra: &Tensor3, w: &Tensor4, ket: &Tensor3) -> Environment {
    let mut out = vec![CMatrix::zeros(bra.right, ket.right); w.right];
    let blocks = w.nonzero_blocks();
    // T[a][s] = L[a] K[s]
    let t: Vec<Vec<CMatrix>> = env
        .iter()
        .map(|l| ket.mats.iter().map(|k| l * k).collect())
        .collect();
    for &(a, b) in &blocks {
        let op = w.op(a, b);
        for so in 0..w.d_out {
            let mut inner = CMatrix::zeros(bra.left, ket.right);
            let mut any = false;
            for si in 0..w.d_in {
                let z = op[(so, si)];
                if z != ZERO {
                    inner += &t[a][si] * z;
                    any = true;
                }
            }
            if any {
                out[b] += bra.mats[so].adjoint() * inner;
            }
        }
    }
    out
}

/// `R'[a] = sum W[a, s', s, b] K[s] R[b] B[s']^dagger` (`ket x bra`).
pub fn extend_right(env: &Environment, bra: &Tensor3, w: &Tensor4, ket: &Tensor3) -> Environment {
    let mut out = vec![CMatrix::zeros(ket.left, bra.left); w.left];
    let blocks = w.nonzero_blocks();
    // T[b][s] = K[s] R[b]
    let t: Vec<Vec<CMatrix>> = env
        .iter()
        .map(|r| ket.mats.iter().map(|k| k * r).collect())
        .collect();
    for &(a, b) in &blocks {
        let op = w.op(a, b);
        for so in 0..w.d_out {
            let mut inner = CMatrix::zeros(ket.left, bra.right);
            let mut any = false;
            for si in 0..w.d_in {
                let z = op[(so, si)];
                if z != ZERO {
                    inner += &t[b][si] * z;
                    any = true;
                }
            }
            if any {
                out[a] += inner * bra.mats[so].adjoint();
            }
        }
    }
    out
}

fn check_same_dims(a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("physical dimensions {a:?} and {b:?} differ")));
    }
    Ok(())
}

/// `<a|b>` by transfer-matrix contraction.
pub fn inner_product(a: &MatrixProductState, b: &MatrixProductState) -> Result<C64> {
    check_same_dims(&a.phys_dims(), &b.phys_dims())?;
    let mut e = CMatrix::from_element(1, 1, ONE);
    for (x, y) in a.sites.iter().zip(&b.sites) {
        let mut next = CMatrix::zeros(x.right, y.right);
        for s in 0..x.phys() {
            next += x.mats[s].adjoint() * &e * &y.mats[s];
        }
        e = next;
    }
    Ok(e[(0, 0)])
}

/// `<psi|O|psi> / <psi|psi>`.
pub fn expectation(psi: &MatrixProductState, op: &MatrixProductOperator) -> Result<C64> {
    check_same_dims(&psi.phys_dims(), &op.phys_dims())?;
    if op.sites.iter().any(|w| w.d_in != w.d_out) {
        return Err(Error::Shape("expectation needs square MPO blocks".into()));
    }
    let mut env = boundary_environment();
    for (site, w) in psi.sites.iter().zip(&op.sites) {
        env = extend_left(&env, site, w, site);
    }
    let norm = inner_product(psi, psi)?;
    if norm.norm() == 0.0 {
        return Err(Error::NotNormalized { norm: 0.0 });
    }
    Ok(env[0][(0, 0)] / norm)
}
