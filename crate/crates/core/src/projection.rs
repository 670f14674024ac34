//! Orthogonal projections and the relative position of a pair of them.
//!
//! For projections `P`, `Q` on `ℂⁿ` the space splits into
//! `R(P)∩R(Q) ⊕ N(P)∩N(Q) ⊕ R(P)∩N(Q) ⊕ N(P)∩R(Q) ⊕ H₀`, each summand
//! reducing both projections. On the generic part `H₀` the pair has no
//! common range or kernel directions and is described by principal angles
//! in `(0, π/2)`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::random::{random_unitary, seeded_rng};
use crate::numkernel::{herm_eig, nullspace_scaled, op_norm, CMatrix, NumError, Tolerance};

/// Bound on `‖P − P*‖` and `‖P² − P‖` accepted by [`make_projection`].
pub const PROJECTION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("not a projection: ‖P − P*‖ = {selfadjoint_residual:e}, ‖P² − P‖ = {idempotent_residual:e}")]
    NotAProjection {
        selfadjoint_residual: f64,
        idempotent_residual: f64,
    },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("rank {rank} out of range for dimension {dim}")]
    BadRank { dim: usize, rank: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("inconsistent dimensions: {0}")]
    InconsistentDims(String),
    #[error(transparent)]
    Numerical(#[from] NumError),
}

/// A selfadjoint idempotent matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Projection(CMatrix);

impl Projection {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// Rank, read off the trace.
    pub fn rank(&self) -> usize {
        self.0.trace().re.round().max(0.0) as usize
    }

    /// `1 − P`.
    pub fn complement(&self) -> Projection {
        Projection(&CMatrix::identity(self.dim()) - &self.0)
    }

    /// `U P U*`, assumed to stay within tolerance for unitary `U`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Projection, ProjectionError> {
        make_projection(&(&(u * &self.0) * &u.adjoint()))
    }

    /// Projection onto the span of orthonormal columns.
    pub fn onto(basis: &CMatrix) -> Result<Projection, ProjectionError> {
        make_projection(&CMatrix::range_projector(basis))
    }
}

impl<'de> Deserialize<'de> for Projection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = CMatrix::deserialize(d)?;
        make_projection(&m).map_err(serde::de::Error::custom)
    }
}

/// Validates `m` as a projection (`‖M − M*‖ ≤ 1e−10` and `‖M² − M‖ ≤ 1e−10`).
/// Never repairs its input.
pub fn make_projection(m: &CMatrix) -> Result<Projection, ProjectionError> {
    if !m.is_square() {
        return Err(ProjectionError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    // Frobenius bounds the operator norm; only fall back to the SVD when needed.
    let sa = m - &m.adjoint();
    let id = &(m * m) - m;
    let mut sa_res = sa.frobenius_norm();
    let mut id_res = id.frobenius_norm();
    if sa_res > PROJECTION_TOL {
        sa_res = op_norm(&sa)?;
    }
    if id_res > PROJECTION_TOL {
        id_res = op_norm(&id)?;
    }
    if sa_res > PROJECTION_TOL || id_res > PROJECTION_TOL {
        return Err(ProjectionError::NotAProjection {
            selfadjoint_residual: sa_res,
            idempotent_residual: id_res,
        });
    }
    Ok(Projection(m.clone()))
}

/// Haar-random projection of the given rank: `U diag(1ʳ, 0ⁿ⁻ʳ) U*`.
pub fn random_projection(n: usize, rank: usize, seed: u64) -> Result<Projection, ProjectionError> {
    random_projection_with(n, rank, &mut seeded_rng(seed))
}

pub fn random_projection_with(n: usize, rank: usize, rng: &mut impl Rng) -> Result<Projection, ProjectionError> {
    if rank > n {
        return Err(ProjectionError::BadRank { dim: n, rank });
    }
    if rank == 0 {
        return Ok(Projection(CMatrix::zeros(n, n)));
    }
    if rank == n {
        return Ok(Projection(CMatrix::identity(n)));
    }
    let u = random_unitary(n, rng);
    let cols: Vec<usize> = (0..rank).collect();
    let p = CMatrix::range_projector(&u.select_columns(&cols)).hermitian_part();
    make_projection(&p)
}

/// Requested dimensions of the five summands of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalmosDims {
    pub dim11: usize,
    pub dim00: usize,
    pub dim10: usize,
    pub dim01: usize,
    pub dimgen: usize,
}

impl HalmosDims {
    pub fn new(dim11: usize, dim00: usize, dim10: usize, dim01: usize, dimgen: usize) -> Self {
        Self { dim11, dim00, dim10, dim01, dimgen }
    }

    pub fn total(&self) -> usize {
        self.dim11 + self.dim00 + self.dim10 + self.dim01 + self.dimgen
    }

    pub fn as_array(&self) -> [usize; 5] {
        [self.dim11, self.dim00, self.dim10, self.dim01, self.dimgen]
    }
}

/// Random five-space dimensions summing to `n`. With `balanced`, `dim10 = dim01`.
pub fn random_halmos_dims(n: usize, balanced: bool, rng: &mut impl Rng) -> HalmosDims {
    let dimgen = 2 * rng.random_range(0..=n / 2);
    let mut rest = n - dimgen;
    let (dim10, dim01) = if balanced {
        let k = rng.random_range(0..=rest / 2);
        (k, k)
    } else {
        let a = rng.random_range(0..=rest);
        (a, rng.random_range(0..=rest - a))
    };
    rest -= dim10 + dim01;
    let dim11 = rng.random_range(0..=rest);
    HalmosDims::new(dim11, rest - dim11, dim10, dim01, dimgen)
}

/// `k` angles uniform in `[0.05, π/2 − 0.05]`.
pub fn random_angles(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.05..FRAC_PI_2 - 0.05)).collect()
}

/// Random pair in dimension `n` with angles from [`random_angles`].
pub fn random_pair(n: usize, balanced: bool, rng: &mut impl Rng) -> (Projection, Projection) {
    let dims = random_halmos_dims(n, balanced, rng);
    let angles = random_angles(dims.dimgen / 2, rng);
    pair_with_dims_rng(dims, &angles, rng).expect("generated dimensions are consistent")
}

/// Pair of projections with prescribed five-space dimensions and generic
/// principal angles, conjugated by a Haar unitary drawn from `seed`.
///
/// Each angle `θ` contributes the 2×2 block `P = diag(1, 0)`,
/// `Q = [[cos²θ, cosθ sinθ], [cosθ sinθ, sin²θ]]`.
pub fn pair_with_dims(dims: HalmosDims, angles: &[f64], seed: u64) -> Result<(Projection, Projection), ProjectionError> {
    pair_with_dims_rng(dims, angles, &mut seeded_rng(seed))
}

pub fn pair_with_dims_rng(
    dims: HalmosDims,
    angles: &[f64],
    rng: &mut impl Rng,
) -> Result<(Projection, Projection), ProjectionError> {
    if dims.dimgen % 2 != 0 {
        return Err(ProjectionError::InconsistentDims(format!("generic dimension {} is odd", dims.dimgen)));
    }
    if angles.len() != dims.dimgen / 2 {
        return Err(ProjectionError::InconsistentDims(format!(
            "{} angles given for generic dimension {}",
            angles.len(),
            dims.dimgen
        )));
    }
    if let Some(a) = angles.iter().find(|&&a| !(a > 0.0 && a < FRAC_PI_2)) {
        return Err(ProjectionError::InconsistentDims(format!("angle {a} outside (0, π/2)")));
    }
    let n = dims.total();
    let mut pd = Vec::with_capacity(n);
    pd.extend(std::iter::repeat_n(1.0, dims.dim11));
    pd.extend(std::iter::repeat_n(0.0, dims.dim00));
    pd.extend(std::iter::repeat_n(1.0, dims.dim10));
    pd.extend(std::iter::repeat_n(0.0, dims.dim01));
    let mut qd = Vec::with_capacity(n);
    qd.extend(std::iter::repeat_n(1.0, dims.dim11));
    qd.extend(std::iter::repeat_n(0.0, dims.dim00));
    qd.extend(std::iter::repeat_n(0.0, dims.dim10));
    qd.extend(std::iter::repeat_n(1.0, dims.dim01));
    let mut p = CMatrix::zeros(n, n);
    let mut q = CMatrix::zeros(n, n);
    for i in 0..pd.len() {
        p[(i, i)] = Complex64::new(pd[i], 0.0);
        q[(i, i)] = Complex64::new(qd[i], 0.0);
    }
    let mut off = pd.len();
    for &theta in angles {
        let (s, c) = theta.sin_cos();
        p[(off, off)] = Complex64::new(1.0, 0.0);
        q[(off, off)] = Complex64::new(c * c, 0.0);
        q[(off, off + 1)] = Complex64::new(c * s, 0.0);
        q[(off + 1, off)] = Complex64::new(c * s, 0.0);
        q[(off + 1, off + 1)] = Complex64::new(s * s, 0.0);
        off += 2;
    }
    let u = random_unitary(n, rng);
    let conj = |m: &CMatrix| (&(&u * m) * &u.adjoint()).hermitian_part();
    Ok((make_projection(&conj(&p))?, make_projection(&conj(&q))?))
}

/// Orthonormal bases of the five summands for a pair `(P, Q)`.
#[derive(Clone, Debug)]
pub struct FiveSpace {
    /// `R(P) ∩ R(Q)`
    pub m11: CMatrix,
    /// `N(P) ∩ N(Q)`
    pub m00: CMatrix,
    /// `R(P) ∩ N(Q)`
    pub m10: CMatrix,
    /// `N(P) ∩ R(Q)`
    pub m01: CMatrix,
    /// Generic part, ordered by ascending eigenvalue of the compression of `P − Q`.
    pub h0: CMatrix,
    /// Compression of `P` to `h0`.
    pub p0: Projection,
    /// Compression of `Q` to `h0`.
    pub q0: Projection,
}

impl FiveSpace {
    pub fn dims(&self) -> HalmosDims {
        HalmosDims::new(self.m11.cols(), self.m00.cols(), self.m10.cols(), self.m01.cols(), self.h0.cols())
    }

    pub fn index(&self) -> IndexPair {
        IndexPair { d_plus: self.m10.cols(), d_minus: self.m01.cols() }
    }

    pub fn bases(&self) -> [&CMatrix; 5] {
        [&self.m11, &self.m00, &self.m10, &self.m01, &self.h0]
    }

    /// All five bases side by side; unitary when the decomposition is exact.
    pub fn stacked(&self) -> CMatrix {
        CMatrix::hstack(self.m11.rows(), &self.bases())
    }

    /// Principal angles of the generic part, ascending, one per 2-dimensional
    /// block: `asin` of the positive eigenvalues of the compressed `P − Q`.
    pub fn principal_angles(&self) -> Result<Vec<f64>, NumError> {
        let diff = self.p0.matrix() - self.q0.matrix();
        if diff.rows() == 0 {
            return Ok(vec![]);
        }
        let eig = herm_eig(&diff, &Tolerance::default())?;
        let half = eig.eigenvalues.len() / 2;
        Ok(eig.eigenvalues[eig.eigenvalues.len() - half..]
            .iter()
            .map(|s| s.clamp(0.0, 1.0).asin())
            .collect())
    }

    /// Largest of the commutator residuals `‖PΠ − ΠP‖`, `‖QΠ − ΠQ‖` over the
    /// five summand projections `Π`.
    pub fn reduction_residual(&self, p: &Projection, q: &Projection) -> Result<f64, NumError> {
        let mut worst = 0.0_f64;
        for basis in self.bases() {
            let pi = CMatrix::range_projector(basis);
            worst = worst.max(op_norm(&pi.commutator(p.matrix()))?);
            worst = worst.max(op_norm(&pi.commutator(q.matrix()))?);
        }
        Ok(worst)
    }

    /// `‖S*S − I‖` for the stacked basis `S`.
    pub fn orthonormality_residual(&self) -> Result<f64, NumError> {
        let s = self.stacked();
        op_norm(&(&(&s.adjoint() * &s) - &CMatrix::identity(s.cols())))
    }
}

/// `(dim N(P−Q−1), dim N(P−Q+1)) = (dim R(P)∩N(Q), dim N(P)∩R(Q))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexPair {
    pub d_plus: usize,
    pub d_minus: usize,
}

impl IndexPair {
    pub fn is_balanced(&self) -> bool {
        self.d_plus == self.d_minus
    }

    pub fn as_array(&self) -> [usize; 2] {
        [self.d_plus, self.d_minus]
    }
}

fn same_dim(p: &Projection, q: &Projection) -> Result<(), ProjectionError> {
    if p.dim() != q.dim() {
        return Err(ProjectionError::DimMismatch(p.dim(), q.dim()));
    }
    Ok(())
}

/// Five-space decomposition. Intersections are nullspaces of `P + Q − 2`,
/// `P + Q`, `P − Q − 1` and `P − Q + 1`; the generic part is the orthogonal
/// complement of their sum.
pub fn halmos_decompose(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<FiveSpace, ProjectionError> {
    same_dim(p, q)?;
    let n = p.dim();
    let sum = p.matrix() + q.matrix();
    let diff = p.matrix() - q.matrix();
    let m11 = nullspace_scaled(&sum.shift(2.0), 1.0, tol)?;
    let m00 = nullspace_scaled(&sum, 1.0, tol)?;
    let m10 = nullspace_scaled(&diff.shift(1.0), 1.0, tol)?;
    let m01 = nullspace_scaled(&diff.shift(-1.0), 1.0, tol)?;

    let taken = CMatrix::hstack(n, &[&m11, &m00, &m10, &m01]);
    let gen_dim = n.saturating_sub(taken.cols());
    let h0 = if gen_dim == 0 {
        CMatrix::zeros(n, 0)
    } else {
        let complement = &CMatrix::identity(n) - &CMatrix::range_projector(&taken);
        let eig = herm_eig(&complement.hermitian_part(), tol)?;
        let idx: Vec<usize> = (n - gen_dim..n).collect();
        let raw = eig.eigenvectors.select_columns(&idx);
        // canonical order: ascending eigenvalues of the compressed P − Q
        let comp = (&(&raw.adjoint() * &diff) * &raw).hermitian_part();
        let inner = herm_eig(&comp, tol)?;
        &raw * &inner.eigenvectors
    };
    let compress = |m: &CMatrix| (&(&h0.adjoint() * m) * &h0).hermitian_part();
    let p0 = make_projection(&compress(p.matrix()))?;
    let q0 = make_projection(&compress(q.matrix()))?;
    Ok(FiveSpace { m11, m00, m10, m01, h0, p0, q0 })
}

pub fn index_pair(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<IndexPair, ProjectionError> {
    same_dim(p, q)?;
    let diff = p.matrix() - q.matrix();
    Ok(IndexPair {
        d_plus: nullspace_scaled(&diff.shift(1.0), 1.0, tol)?.cols(),
        d_minus: nullspace_scaled(&diff.shift(-1.0), 1.0, tol)?.cols(),
    })
}

/// `a = P − Q`, `b = P + Q` and the residuals of `a² + b² = 2b` and
/// `(b − 1)² = (1 − a)(1 + a)`.
#[derive(Clone, Debug)]
pub struct DiffSum {
    pub a: CMatrix,
    pub b: CMatrix,
    pub square_sum_residual: f64,
    pub factor_residual: f64,
}

impl DiffSum {
    pub fn worst_residual(&self) -> f64 {
        self.square_sum_residual.max(self.factor_residual)
    }
}

pub fn diff_sum(p: &Projection, q: &Projection) -> Result<DiffSum, ProjectionError> {
    same_dim(p, q)?;
    let a = p.matrix() - q.matrix();
    let b = p.matrix() + q.matrix();
    let lhs = &(&a * &a) + &(&b * &b);
    let square_sum_residual = op_norm(&(&lhs - &b.scale_re(2.0)))?;
    let bm1 = b.shift(1.0);
    let one_minus_a = (-&a).shift(-1.0);
    let one_plus_a = a.shift(-1.0);
    let factor_residual = op_norm(&(&(&bm1 * &bm1) - &(&one_minus_a * &one_plus_a)))?;
    Ok(DiffSum { a, b, square_sum_residual, factor_residual })
}

/// On-disk pair: `{"P": CMatrix, "Q": CMatrix}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairFile {
    #[serde(rename = "P")]
    pub p: Projection,
    #[serde(rename = "Q")]
    pub q: Projection,
}

/// Summary of a [`FiveSpace`]: the five dimensions, the index pair and the
/// generic principal angles in radians.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiveSpaceReport {
    pub dims: [usize; 5],
    pub index: [usize; 2],
    pub principal_angles: Vec<f64>,
}

impl FiveSpace {
    pub fn report(&self) -> Result<FiveSpaceReport, NumError> {
        Ok(FiveSpaceReport {
            dims: self.dims().as_array(),
            index: self.index().as_array(),
            principal_angles: self.principal_angles()?,
        })
    }
}
