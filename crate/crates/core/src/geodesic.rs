//! Geodesics `δ(t) = e^{tZ} P e^{−tZ}` of the projection manifold with the
//! operator-norm Finsler metric.
//!
//! The exponent `Z` is skew-Hermitian and `P`-codiagonal (`PZP = P⊥ZP⊥ = 0`);
//! the speed of `δ` is constant and equal to `‖Z‖`. Segments with
//! `‖Z‖ ≤ π/2` are minimal for `|t| ≤ 1`.
//!
//! [`minimal_exponent`] assembles `Z` summand by summand from the five-space
//! decomposition:
//!
//! * `Z = 0` on `R(P)∩R(Q) ⊕ N(P)∩N(Q)`;
//! * `Z = iπ/2 (V + V*)` on `R(P)∩N(Q) ⊕ N(P)∩R(Q)`, for an isometry
//!   `V : N(P)∩R(Q) → R(P)∩N(Q)`;
//! * on the generic part, `Z₀` is the principal logarithm of `V₀(2P₀ − 1)`
//!   where `V₀` is the polar factor of `P₀ + Q₀ − 1`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::random::{random_unitary, seeded_rng};
use crate::numkernel::{logm_unitary_principal, op_norm, polar_unitary, CMatrix, NumError, SkewExp, Tolerance};
use crate::projection::{
    halmos_decompose, index_pair, make_projection, random_projection_with, FiveSpace, IndexPair, Projection,
    ProjectionError,
};

/// Slack on `‖Z‖ ≤ π/2` for the normalized flag.
pub const NORMALIZED_SLACK: f64 = 1e-12;
/// Bound on `‖Z + Z*‖` for a segment exponent.
pub const SKEW_TOL: f64 = 1e-10;
/// Bound on `‖PZP‖` and `‖P⊥ZP⊥‖`.
pub const CODIAGONAL_TOL: f64 = 1e-9;
/// Bound on `‖x − (px + xp)‖` for tangent vectors.
pub const TANGENT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("no geodesic: index ({}, {})", .0.d_plus, .0.d_minus)]
    NoGeodesic(IndexPair),
    #[error("exponent is not skew-Hermitian (‖Z + Z*‖ = {0:e})")]
    NotSkew(f64),
    #[error("exponent is not codiagonal (residual {0:e})")]
    NotCodiagonal(f64),
    #[error("vector is not tangent (residual {0:e})")]
    NotTangent(f64),
    #[error("pairing needs index (k, k) with k ≥ 1, got ({}, {})", .0.d_plus, .0.d_minus)]
    BadIndex(IndexPair),
    #[error("pairing unitary is {found}x{found}, expected {expected}x{expected}")]
    BadUnitarySize { expected: usize, found: usize },
    #[error("pairing matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("curve grid needs at least 2 points, got {0}")]
    BadGrid(usize),
    #[error("conjugated re-derivation of the exponent differs by {0:e}")]
    RederivationMismatch(f64),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Numerical(#[from] NumError),
}

/// A geodesic `t ↦ e^{tZ} P e^{−tZ}` with validated exponent.
#[derive(Clone, Debug)]
pub struct GeodesicSegment {
    base: Projection,
    exponent: CMatrix,
    norm: f64,
    normalized: bool,
    exp: SkewExp,
}

impl GeodesicSegment {
    pub fn new(base: Projection, exponent: CMatrix, tol: &Tolerance) -> Result<Self, GeodesicError> {
        if exponent.rows() != base.dim() || exponent.cols() != base.dim() {
            return Err(ProjectionError::DimMismatch(base.dim(), exponent.rows()).into());
        }
        let skew = op_norm(&(&exponent + &exponent.adjoint()))?;
        if skew > SKEW_TOL {
            return Err(GeodesicError::NotSkew(skew));
        }
        let codiag = codiagonal_residual(&base, &exponent)?;
        if codiag > CODIAGONAL_TOL {
            return Err(GeodesicError::NotCodiagonal(codiag));
        }
        let norm = op_norm(&exponent)?;
        let exp = SkewExp::new(&exponent, tol)?;
        Ok(Self { base, exponent, norm, normalized: norm <= FRAC_PI_2 + NORMALIZED_SLACK, exp })
    }

    /// Geodesic with initial velocity `x`: exponent `[x, P]`.
    pub fn from_tangent(v: &TangentVector, tol: &Tolerance) -> Result<Self, GeodesicError> {
        let z = v.value.commutator(v.at.matrix());
        Self::new(v.at.clone(), z, tol)
    }

    pub fn base(&self) -> &Projection {
        &self.base
    }

    pub fn exponent(&self) -> &CMatrix {
        &self.exponent
    }

    /// `‖Z‖`, which is also the speed and the length of `t ∈ [0, 1]`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// `e^{tZ} P e^{−tZ}`. Any real `t` is accepted.
    pub fn evaluate(&self, t: f64) -> Result<Projection, GeodesicError> {
        if t == 0.0 {
            return Ok(self.base.clone());
        }
        let e = self.exp.at(t);
        Ok(make_projection(&(&(&e * self.base.matrix()) * &e.adjoint()))?)
    }

    /// `e^{tZ} [Z, P] e^{−tZ}`, tangent at `evaluate(t)`.
    pub fn velocity(&self, t: f64) -> Result<TangentVector, GeodesicError> {
        let e = self.exp.at(t);
        let x0 = self.exponent.commutator(self.base.matrix());
        let x = &(&e * &x0) * &e.adjoint();
        TangentVector::new(self.evaluate(t)?, x)
    }

    /// `‖evaluate(1) − q‖`.
    pub fn endpoint_error(&self, q: &Projection) -> Result<f64, GeodesicError> {
        Ok(op_norm(&(self.evaluate(1.0)?.matrix() - q.matrix()))?)
    }

    /// Largest of `‖PZP‖` and `‖P⊥ZP⊥‖`.
    pub fn codiagonal_residual(&self) -> Result<f64, GeodesicError> {
        Ok(codiagonal_residual(&self.base, &self.exponent)?)
    }

    /// Length of `t ∈ [0, 1]` as the integral of the (constant) speed.
    pub fn finsler_length(&self) -> Result<f64, GeodesicError> {
        Ok(op_norm(&self.exponent.commutator(self.base.matrix()))?)
    }
}

fn codiagonal_residual(p: &Projection, z: &CMatrix) -> Result<f64, NumError> {
    let pm = p.matrix();
    let pc = p.complement();
    let on = op_norm(&(&(pm * z) * pm))?;
    let off = op_norm(&(&(pc.matrix() * z) * pc.matrix()))?;
    Ok(on.max(off))
}

/// A Hermitian `x` tangent at `p`: `x = px + xp`.
#[derive(Clone, Debug)]
pub struct TangentVector {
    pub at: Projection,
    pub value: CMatrix,
}

impl TangentVector {
    pub fn new(at: Projection, value: CMatrix) -> Result<Self, GeodesicError> {
        let p = at.matrix();
        let residual = op_norm(&(&value - &(&(p * &value) + &(&value * p))))?;
        let herm = op_norm(&(&value - &value.adjoint()))?;
        let worst = residual.max(herm);
        if worst > TANGENT_TOL {
            return Err(GeodesicError::NotTangent(worst));
        }
        Ok(Self { at, value })
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.value).unwrap_or(f64::NAN)
    }
}

/// A curve of projections on `t ∈ [0, 1]`.
pub trait Curve {
    fn point(&self, t: f64) -> Result<Projection, GeodesicError>;
}

impl Curve for GeodesicSegment {
    fn point(&self, t: f64) -> Result<Projection, GeodesicError> {
        self.evaluate(t)
    }
}

/// The constant curve.
pub struct ConstantCurve(pub Projection);

impl Curve for ConstantCurve {
    fn point(&self, _t: f64) -> Result<Projection, GeodesicError> {
        Ok(self.0.clone())
    }
}

/// Consecutive geodesic legs traversed at equal parameter share.
pub struct PiecewiseGeodesic {
    legs: Vec<GeodesicSegment>,
}

impl PiecewiseGeodesic {
    pub fn new(legs: Vec<GeodesicSegment>) -> Self {
        assert!(!legs.is_empty(), "piecewise geodesic needs at least one leg");
        Self { legs }
    }

    pub fn legs(&self) -> &[GeodesicSegment] {
        &self.legs
    }

    pub fn finsler_length(&self) -> Result<f64, GeodesicError> {
        self.legs.iter().map(|l| l.finsler_length()).sum()
    }
}

impl Curve for PiecewiseGeodesic {
    fn point(&self, t: f64) -> Result<Projection, GeodesicError> {
        let k = self.legs.len();
        let s = (t.clamp(0.0, 1.0) * k as f64).min(k as f64);
        let i = (s.floor() as usize).min(k - 1);
        self.legs[i].evaluate(s - i as f64)
    }
}

/// Chordal length `Σ ‖γ(tᵢ₊₁) − γ(tᵢ)‖` over `m` equally spaced points of `[0, 1]`.
pub fn curve_length(curve: &dyn Curve, m: usize) -> Result<f64, GeodesicError> {
    if m < 2 {
        return Err(GeodesicError::BadGrid(m));
    }
    let mut prev = curve.point(0.0)?;
    let mut total = 0.0;
    for i in 1..m {
        let t = i as f64 / (m - 1) as f64;
        let cur = curve.point(t)?;
        total += op_norm(&(cur.matrix() - prev.matrix()))?;
        prev = cur;
    }
    Ok(total)
}

/// A geodesic from `P` to `Q` exists iff `dim R(P)∩N(Q) = dim N(P)∩R(Q)`.
pub fn exists_geodesic(p: &Projection, q: &Projection, tol: &Tolerance) -> Result<bool, GeodesicError> {
    Ok(index_pair(p, q, tol)?.is_balanced())
}

/// Minimal geodesic from `P` to `Q`.
///
/// `pairing` is a `k×k` unitary `U` selecting the isometry
/// `V = M₁₀ U M₀₁*` between the ordered bases of `N(P)∩R(Q)` and
/// `R(P)∩N(Q)`; `None` means `U = 1`. It is ignored when `k = 0`.
pub fn minimal_exponent(
    p: &Projection,
    q: &Projection,
    pairing: Option<&CMatrix>,
    tol: &Tolerance,
) -> Result<GeodesicSegment, GeodesicError> {
    let fs = halmos_decompose(p, q, tol)?;
    let index = fs.index();
    if !index.is_balanced() {
        return Err(GeodesicError::NoGeodesic(index));
    }
    let z = &generic_exponent(&fs, tol)? + &pairing_exponent(&fs, pairing)?;
    GeodesicSegment::new(p.clone(), z, tol)
}

/// `h₀ Z₀ h₀*` with `Z₀ = log(V₀(2P₀ − 1))`.
fn generic_exponent(fs: &FiveSpace, tol: &Tolerance) -> Result<CMatrix, GeodesicError> {
    let n = fs.h0.rows();
    let g = fs.h0.cols();
    if g == 0 {
        return Ok(CMatrix::zeros(n, n));
    }
    let p0 = fs.p0.matrix();
    let b0 = (p0 + fs.q0.matrix()).shift(1.0);
    let v0 = polar_unitary(&b0, tol)?;
    let reflection = p0.scale_re(2.0).shift(1.0);
    let w0 = &v0 * &reflection;
    // the generic part has all angles in (0, π/2), so −1 is never an eigenvalue
    let log = logm_unitary_principal(&w0, tol, true)?;
    debug_assert!(log.within_half_pi);
    Ok(&(&fs.h0 * &log.log) * &fs.h0.adjoint())
}

/// `iπ/2 (V + V*)` with `V = M₁₀ U M₀₁*`.
fn pairing_exponent(fs: &FiveSpace, pairing: Option<&CMatrix>) -> Result<CMatrix, GeodesicError> {
    let n = fs.m10.rows();
    let k = fs.m10.cols();
    if k == 0 {
        return Ok(CMatrix::zeros(n, n));
    }
    let u = match pairing {
        Some(u) => {
            if u.rows() != k || u.cols() != k {
                return Err(GeodesicError::BadUnitarySize { expected: k, found: u.rows() });
            }
            let defect = op_norm(&(&(&u.adjoint() * u) - &CMatrix::identity(k)))?;
            if defect > 1e-10 {
                return Err(GeodesicError::NotUnitary(defect));
            }
            u.clone()
        }
        None => CMatrix::identity(k),
    };
    let v = &(&fs.m10 * &u) * &fs.m01.adjoint();
    Ok((&v + &v.adjoint()).scale(Complex64::new(0.0, FRAC_PI_2)))
}

/// One minimal geodesic per pairing unitary `Uᵢ`, all from `P` to `Q`.
pub fn multi_geodesic_family(
    p: &Projection,
    q: &Projection,
    unitaries: &[CMatrix],
    tol: &Tolerance,
) -> Result<Vec<GeodesicSegment>, GeodesicError> {
    let fs = halmos_decompose(p, q, tol)?;
    let index = fs.index();
    if !index.is_balanced() || index.d_plus == 0 {
        return Err(GeodesicError::BadIndex(index));
    }
    let k = index.d_plus;
    if let Some(bad) = unitaries.iter().find(|u| u.rows() != k || u.cols() != k) {
        return Err(GeodesicError::BadUnitarySize { expected: k, found: bad.rows() });
    }
    let generic = generic_exponent(&fs, tol)?;
    unitaries
        .iter()
        .map(|u| {
            let z = &generic + &pairing_exponent(&fs, Some(u))?;
            GeodesicSegment::new(p.clone(), z, tol)
        })
        .collect()
}

/// Outcome of [`unique_minimal_check`].
#[derive(Clone, Debug)]
pub struct UniquenessReport {
    pub index: IndexPair,
    pub unique: bool,
    /// `‖Z − U Z' U*‖` where `Z'` was derived from `U*PU`, `U*QU` (index `(0, 0)` only).
    pub rederivation_residual: Option<f64>,
    /// Two distinct minimal exponents (index `(k, k)`, `k ≥ 1` only).
    pub witnesses: Option<(CMatrix, CMatrix)>,
}

/// Agreement required between the direct and the conjugated derivation.
pub const REDERIVATION_TOL: f64 = 1e-8;

/// Decides uniqueness of the minimal geodesic by the finite index.
///
/// Index `(0, 0)`: the exponent is re-derived from the conjugated pair
/// `(U*PU, U*QU)` for a Haar `U` drawn from `seed`, mapped back, and must agree.
/// Index `(k, k)`, `k ≥ 1`: pairings `V` and `iV` give two distinct minimal
/// geodesics.
pub fn unique_minimal_check(
    p: &Projection,
    q: &Projection,
    tol: &Tolerance,
    seed: u64,
) -> Result<UniquenessReport, GeodesicError> {
    let index = index_pair(p, q, tol)?;
    if !index.is_balanced() {
        return Err(GeodesicError::NoGeodesic(index));
    }
    if index.d_plus == 0 {
        let direct = minimal_exponent(p, q, None, tol)?;
        let u = random_unitary(p.dim(), &mut seeded_rng(seed));
        let uadj = u.adjoint();
        let pc = p.conjugate(&uadj)?;
        let qc = q.conjugate(&uadj)?;
        let other = minimal_exponent(&pc, &qc, None, tol)?;
        let back = &(&u * other.exponent()) * &uadj;
        let residual = op_norm(&(direct.exponent() - &back))?;
        if residual > REDERIVATION_TOL {
            return Err(GeodesicError::RederivationMismatch(residual));
        }
        return Ok(UniquenessReport { index, unique: true, rederivation_residual: Some(residual), witnesses: None });
    }
    let k = index.d_plus;
    let id = CMatrix::identity(k);
    let phased = id.scale(Complex64::new(0.0, 1.0));
    let fam = multi_geodesic_family(p, q, &[id, phased], tol)?;
    Ok(UniquenessReport {
        index,
        unique: false,
        rederivation_residual: None,
        witnesses: Some((fam[0].exponent().clone(), fam[1].exponent().clone())),
    })
}

/// Lengths of two-leg competitors `P → R → Q`.
#[derive(Clone, Debug)]
pub struct CompetitorReport {
    pub minimal_length: f64,
    pub lengths: Vec<f64>,
}

impl CompetitorReport {
    /// `min(lengths) − minimal_length`; negative means a competitor won.
    pub fn worst_margin(&self) -> f64 {
        self.lengths.iter().fold(f64::INFINITY, |m, &l| m.min(l)) - self.minimal_length
    }
}

/// Length of the piecewise geodesic `P → R → Q` made of minimal legs.
pub fn competitor_length_through(
    p: &Projection,
    r: &Projection,
    q: &Projection,
    tol: &Tolerance,
) -> Result<f64, GeodesicError> {
    let first = minimal_exponent(p, r, None, tol)?;
    let second = minimal_exponent(r, q, None, tol)?;
    PiecewiseGeodesic::new(vec![first, second]).finsler_length()
}

/// Draws `trials` intermediate projections `R` (trial `i` seeded with
/// `seed + i`, same rank as `P`, joinable to both ends) and measures the
/// two-leg curves through them.
pub fn minimality_competitors(
    p: &Projection,
    q: &Projection,
    trials: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<CompetitorReport, GeodesicError> {
    let minimal = minimal_exponent(p, q, None, tol)?;
    let rank = p.rank();
    let mut lengths = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = seeded_rng(seed.wrapping_add(trial as u64));
        let r = loop {
            let r = random_projection_with(p.dim(), rank, &mut rng)?;
            if exists_geodesic(p, &r, tol)? && exists_geodesic(&r, q, tol)? {
                break r;
            }
        };
        lengths.push(competitor_length_through(p, &r, q, tol)?);
    }
    Ok(CompetitorReport { minimal_length: minimal.norm(), lengths })
}

/// Machine-readable summary of a minimal geodesic between a pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeodesicReport {
    #[serde(rename = "norm_Z")]
    pub norm_z: f64,
    pub index: [usize; 2],
    pub endpoint_error: f64,
    pub length_estimate: f64,
    pub unique: bool,
}

/// Builds the minimal geodesic and its report; `samples` is the chordal grid size.
pub fn geodesic_report(
    p: &Projection,
    q: &Projection,
    samples: usize,
    tol: &Tolerance,
    seed: u64,
) -> Result<(GeodesicSegment, GeodesicReport), GeodesicError> {
    let seg = minimal_exponent(p, q, None, tol)?;
    let uniq = unique_minimal_check(p, q, tol, seed)?;
    let report = GeodesicReport {
        norm_z: seg.norm(),
        index: uniq.index.as_array(),
        endpoint_error: seg.endpoint_error(q)?,
        length_estimate: curve_length(&seg, samples)?,
        unique: uniq.unique,
    };
    Ok((seg, report))
}
