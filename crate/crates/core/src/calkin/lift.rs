//! Lifting projections and geodesics from the quotient, and the
//! finite/infinite dichotomy for existence of geodesics.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BlockIndex, BlockOperator, CalkinError, QuotientElement};
use crate::geodesic::{minimal_exponent, GeodesicError, GeodesicSegment, NORMALIZED_SLACK};
use crate::numkernel::{herm_eig, nullspace_scaled, op_norm, singular_values, CMatrix, NumError, SkewExp, Tolerance};
use crate::projection::{
    index_pair, make_projection, random_pair, random_projection_with, IndexPair, Projection,
};

/// Half-width of the forbidden band around 1/2 in [`lift_projection`].
pub const SPECTRAL_GAP: f64 = 0.1;

/// Bound on the defining constraints of quotient data.
const QUOTIENT_TOL: f64 = 1e-10;

/// Projection lift `φ(T)` of a selfadjoint `T` whose quotient is a projection.
///
/// `φ` sends eigenvalues `≥ 1/2` to 1 and the rest to 0. Blocks that are
/// already projections are kept as they are.
pub fn lift_projection(t: &BlockOperator, tol: &Tolerance) -> Result<BlockOperator, CalkinError> {
    if t.tail() != &t.tail().adjoint() {
        return Err(CalkinError::NotSelfadjoint(BlockIndex::Tail));
    }
    if let Some(i) = t.exceptional().iter().position(|m| m != &m.adjoint()) {
        return Err(CalkinError::NotSelfadjoint(BlockIndex::Exceptional(i)));
    }
    if make_projection(t.tail()).is_err() {
        return Err(CalkinError::NotProjection("quotient of T"));
    }
    t.try_map_blocks(|idx, m| -> Result<CMatrix, CalkinError> {
        if make_projection(m).is_ok() {
            return Ok(m.clone());
        }
        let eig = herm_eig(m, tol)?;
        if let Some(&eigenvalue) = eig.eigenvalues.iter().find(|&&l| (l - 0.5).abs() < SPECTRAL_GAP) {
            return Err(CalkinError::NoSpectralGap { block: idx, eigenvalue });
        }
        Ok(eig.apply_fn(|l| Complex64::new(if l >= 0.5 { 1.0 } else { 0.0 }, 0.0)))
    })
}

fn check_projection(m: &CMatrix, what: &'static str) -> Result<Projection, CalkinError> {
    make_projection(m).map_err(|_| CalkinError::NotProjection(what))
}

fn check_lift(lift: &BlockOperator, p: &QuotientElement, what: &'static str) -> Result<(), CalkinError> {
    if lift.block_dim() != p.dim() {
        return Err(CalkinError::BlockDimMismatch(lift.block_dim(), p.dim()));
    }
    for m in lift.exceptional().iter().chain(std::iter::once(lift.tail())) {
        check_projection(m, what)?;
    }
    let gap = op_norm(&(lift.tail() - p.matrix()))?;
    if gap > QUOTIENT_TOL {
        return Err(CalkinError::FiberMismatch(gap));
    }
    Ok(())
}

/// Lift of the quotient geodesic `e^{tz} p e^{−tz}` starting at a given `P`
/// over `p`: `Z = P Z₀ P⊥ + P⊥ Z₀ P` with `Z₀` the constant operator `z`.
///
/// The tail of `Z` is `z` itself, so `quotient(Z) = z` holds bit for bit.
pub fn lift_geodesic(
    p: &QuotientElement,
    z: &QuotientElement,
    lift: &BlockOperator,
) -> Result<BlockOperator, CalkinError> {
    let pp = check_projection(p.matrix(), "p")?;
    if z.dim() != p.dim() || !z.matrix().is_square() {
        return Err(CalkinError::BlockDimMismatch(p.dim(), z.dim()));
    }
    let zm = z.matrix();
    let skew = op_norm(&(zm + &zm.adjoint()))?;
    if skew > QUOTIENT_TOL {
        return Err(CalkinError::NotSkew(skew));
    }
    let pc = pp.complement();
    let codiag = op_norm(&(&(pp.matrix() * zm) * pp.matrix()))?.max(op_norm(&(&(pc.matrix() * zm) * pc.matrix()))?);
    if codiag > QUOTIENT_TOL {
        return Err(CalkinError::NotCodiagonal(codiag));
    }
    let norm = op_norm(zm)?;
    if norm > FRAC_PI_2 + NORMALIZED_SLACK {
        return Err(CalkinError::NormTooLarge(norm));
    }
    check_lift(lift, p, "lift P")?;
    let exceptional = lift
        .exceptional()
        .iter()
        .map(|pb| {
            let pbc = pb.shift(1.0).scale_re(-1.0);
            &(&(pb * zm) * &pbc) + &(&(&pbc * zm) * pb)
        })
        .collect();
    BlockOperator::new(lift.block_dim(), exceptional, zm.clone())
}

fn conjugate_by_exp(z: &CMatrix, p: &CMatrix, t: f64, tol: &Tolerance) -> Result<CMatrix, NumError> {
    let e = SkewExp::new(z, tol)?.at(t);
    Ok(&(&e * p) * &e.adjoint())
}

/// `Δ(t) = e^{tZ} P e^{−tZ}`, blockwise.
pub fn block_geodesic_point(
    z: &BlockOperator,
    p: &BlockOperator,
    t: f64,
    tol: &Tolerance,
) -> Result<BlockOperator, CalkinError> {
    if z.block_dim() != p.block_dim() {
        return Err(CalkinError::BlockDimMismatch(z.block_dim(), p.block_dim()));
    }
    let m = z.exceptional().len().max(p.exceptional().len());
    let exceptional = (0..m).map(|i| conjugate_by_exp(z.block(i), p.block(i), t, tol)).collect::<Result<_, _>>()?;
    BlockOperator::new(p.block_dim(), exceptional, conjugate_by_exp(z.tail(), p.tail(), t, tol)?)
}

/// `δ(t) = e^{tz} p e^{−tz}` in the quotient.
pub fn quotient_geodesic_point(
    z: &QuotientElement,
    p: &QuotientElement,
    t: f64,
    tol: &Tolerance,
) -> Result<QuotientElement, CalkinError> {
    Ok(QuotientElement(conjugate_by_exp(z.matrix(), p.matrix(), t, tol)?))
}

/// Random projection over `p` with `m` random exceptional projection blocks.
pub fn random_fiber_projection(p: &QuotientElement, m: usize, rng: &mut impl Rng) -> BlockOperator {
    let d = p.dim();
    let exceptional = (0..m)
        .map(|_| {
            let rank = rng.random_range(0..=d);
            random_projection_with(d, rank, rng).expect("rank within dimension").into_matrix()
        })
        .collect();
    BlockOperator::new(d, exceptional, p.matrix().clone()).expect("blocks share the dimension")
}

/// Random pair of block projections: block dimension `1..=max_d`, up to
/// `max_m` exceptional blocks, every block pair drawn with arbitrary
/// five-space dimensions.
pub fn random_block_pair(max_d: usize, max_m: usize, rng: &mut impl Rng) -> (BlockOperator, BlockOperator) {
    let d = rng.random_range(1..=max_d);
    let m = rng.random_range(0..=max_m);
    let mut ps = Vec::with_capacity(m + 1);
    let mut qs = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        let (p, q) = random_pair(d, false, rng);
        ps.push(p.into_matrix());
        qs.push(q.into_matrix());
    }
    let (pt, qt) = (ps.pop().unwrap(), qs.pop().unwrap());
    (BlockOperator::new(d, ps, pt).unwrap(), BlockOperator::new(d, qs, qt).unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DichotomyCase {
    FiniteFinite,
    InfiniteInfinite,
    Mixed,
}

impl DichotomyCase {
    fn from_infinite(plus: bool, minus: bool) -> Self {
        match (plus, minus) {
            (false, false) => DichotomyCase::FiniteFinite,
            (true, true) => DichotomyCase::InfiniteInfinite,
            _ => DichotomyCase::Mixed,
        }
    }
}

/// Outcome of [`existence_dichotomy`].
#[derive(Clone, Debug)]
pub struct Dichotomy {
    pub exists: bool,
    pub case: DichotomyCase,
    /// Nullities of `p − q − 1` and `p − q + 1`; each tail block contributes
    /// them once, so a positive entry means an infinite-dimensional nullspace.
    pub tail_nullities: IndexPair,
    /// Lifting pair with no exceptional intersection defect.
    pub witnesses: Option<(BlockOperator, BlockOperator)>,
}

/// Decides whether projections over `p` and `q` can be joined by a geodesic.
///
/// `lifts` are starting lifts for the witnesses (defaults: the constant
/// operators `p`, `q`). Each exceptional block of the witness pair has
/// `R(P)∩N(Q)` removed from `P` and `N(P)∩R(Q)` removed from `Q`.
pub fn existence_dichotomy(
    p: &QuotientElement,
    q: &QuotientElement,
    lifts: Option<(&BlockOperator, &BlockOperator)>,
    tol: &Tolerance,
) -> Result<Dichotomy, CalkinError> {
    let pp = check_projection(p.matrix(), "p")?;
    let qq = check_projection(q.matrix(), "q")?;
    if pp.dim() != qq.dim() {
        return Err(CalkinError::BlockDimMismatch(pp.dim(), qq.dim()));
    }
    let tail_nullities = index_pair(&pp, &qq, tol)?;
    let case = DichotomyCase::from_infinite(tail_nullities.d_plus > 0, tail_nullities.d_minus > 0);
    let exists = case != DichotomyCase::Mixed;
    let witnesses = if exists {
        let (lp, lq) = match lifts {
            Some((lp, lq)) => {
                check_lift(lp, p, "lift of p")?;
                check_lift(lq, q, "lift of q")?;
                (lp.clone(), lq.clone())
            }
            None => (BlockOperator::constant(p.matrix().clone())?, BlockOperator::constant(q.matrix().clone())?),
        };
        Some(surgery(&lp, &lq, tol)?)
    } else {
        None
    };
    Ok(Dichotomy { exists, case, tail_nullities, witnesses })
}

fn surgery(lp: &BlockOperator, lq: &BlockOperator, tol: &Tolerance) -> Result<(BlockOperator, BlockOperator), CalkinError> {
    let m = lp.exceptional().len().max(lq.exceptional().len());
    let mut ps = Vec::with_capacity(m);
    let mut qs = Vec::with_capacity(m);
    for i in 0..m {
        let (pb, qb) = (lp.block(i), lq.block(i));
        let a = pb - qb;
        let pi10 = CMatrix::range_projector(&nullspace_scaled(&a.shift(1.0), 1.0, tol)?);
        let pi01 = CMatrix::range_projector(&nullspace_scaled(&a.shift(-1.0), 1.0, tol)?);
        ps.push((pb - &pi10).hermitian_part());
        qs.push((qb - &pi01).hermitian_part());
    }
    Ok((
        BlockOperator::new(lp.block_dim(), ps, lp.tail().clone())?,
        BlockOperator::new(lq.block_dim(), qs, lq.tail().clone())?,
    ))
}

/// Index pairs of dense truncations to `1..=n_blocks` blocks, and the case
/// read off from how each nullity grows.
#[derive(Clone, Debug)]
pub struct TruncationOracle {
    pub indices: Vec<IndexPair>,
    /// `None` when the growth past the exceptional blocks is not linear.
    pub case: Option<DichotomyCase>,
}

pub fn truncation_oracle(
    p: &BlockOperator,
    q: &BlockOperator,
    n_blocks: usize,
    tol: &Tolerance,
) -> Result<TruncationOracle, CalkinError> {
    if p.block_dim() != q.block_dim() {
        return Err(CalkinError::BlockDimMismatch(p.block_dim(), q.block_dim()));
    }
    let mut indices = Vec::with_capacity(n_blocks);
    for n in 1..=n_blocks {
        let a = &p.truncate(n) - &q.truncate(n);
        indices.push(IndexPair {
            d_plus: nullspace_scaled(&a.shift(1.0), 1.0, tol)?.cols(),
            d_minus: nullspace_scaled(&a.shift(-1.0), 1.0, tol)?.cols(),
        });
    }
    let start = p.exceptional().len().max(q.exceptional().len());
    let growth = |f: fn(&IndexPair) -> usize| -> Option<usize> {
        let steps: Vec<isize> =
            indices[start..].windows(2).map(|w| f(&w[1]) as isize - f(&w[0]) as isize).collect();
        let first = *steps.first()?;
        (first >= 0 && steps.iter().all(|&s| s == first)).then_some(first as usize)
    };
    let case = match (growth(|i| i.d_plus), growth(|i| i.d_minus)) {
        (Some(a), Some(b)) => Some(DichotomyCase::from_infinite(a > 0, b > 0)),
        _ => None,
    };
    Ok(TruncationOracle { indices, case })
}

/// Minimal geodesic between quotient projections.
#[derive(Clone, Debug)]
pub struct QuotientGeodesic {
    pub segment: GeodesicSegment,
    pub case: DichotomyCase,
    /// `p + q − 1` invertible: the minimal geodesic is unique.
    pub unique: bool,
    /// Distance between the tail block of the witness exponent and `z`
    /// (finite case only).
    pub lift_residual: Option<f64>,
}

/// Minimal geodesic `e^{tz} p e^{−tz}` from `p` to `q` in the quotient.
///
/// In the finite case the witness lifts are joined on a dense truncation
/// past their exceptional blocks and the last block of that exponent must
/// reproduce `z` within `1e-9`.
pub fn quotient_geodesic(
    p: &QuotientElement,
    q: &QuotientElement,
    lifts: Option<(&BlockOperator, &BlockOperator)>,
    tol: &Tolerance,
) -> Result<QuotientGeodesic, CalkinError> {
    let dich = existence_dichotomy(p, q, lifts, tol)?;
    if !dich.exists {
        return Err(CalkinError::NoGeodesic(dich.tail_nullities));
    }
    let pp = make_projection(p.matrix())?;
    let qq = make_projection(q.matrix())?;
    let segment = match minimal_exponent(&pp, &qq, None, tol) {
        Ok(s) => s,
        Err(GeodesicError::NoGeodesic(idx)) => return Err(CalkinError::Unrepresentable(idx)),
        Err(e) => return Err(e.into()),
    };
    let lift_residual = match (&dich.case, &dich.witnesses) {
        (DichotomyCase::FiniteFinite, Some((wp, wq))) => {
            let d = wp.block_dim();
            let n = wp.exceptional().len().max(wq.exceptional().len()) + 1;
            let dp = make_projection(&wp.truncate(n))?;
            let dq = make_projection(&wq.truncate(n))?;
            let big = minimal_exponent(&dp, &dq, None, tol)?;
            let off = (n - 1) * d;
            let last = CMatrix::from_fn(d, d, |i, j| big.exponent()[(off + i, off + j)]);
            let residual = op_norm(&(&last - segment.exponent()))?;
            if residual > 1e-9 {
                return Err(CalkinError::LiftMismatch(residual));
            }
            Some(residual)
        }
        _ => None,
    };
    let bm1 = (p.matrix() + q.matrix()).shift(1.0);
    let s = singular_values(&bm1)?;
    let (smax, smin) = (s[0], *s.last().unwrap());
    let unique = smax > 0.0 && smin >= tol.rank_rtol * smax;
    Ok(QuotientGeodesic { segment, case: dich.case, unique, lift_residual })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    use super::*;
    use crate::calkin::quotient;
    use crate::numkernel::random::seeded_rng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn diag(d: &[f64]) -> CMatrix {
        CMatrix::from_real_diag(d)
    }

    fn qe(m: CMatrix) -> QuotientElement {
        QuotientElement(m)
    }

    fn line(theta: f64) -> CMatrix {
        let (s, c) = theta.sin_cos();
        CMatrix::from_real_rows(&[&[c * c, c * s], &[c * s, s * s]])
    }

    fn rot(theta: f64) -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).scale_re(theta)
    }

    #[test]
    fn lift_projection_examples() {
        let p = BlockOperator::new(2, vec![diag(&[0.0, 1.0])], diag(&[1.0, 0.0])).unwrap();
        assert_eq!(lift_projection(&p, &tol()).unwrap(), p);
        let t = BlockOperator::new(2, vec![diag(&[0.9, 0.1])], diag(&[1.0, 0.0])).unwrap();
        let lifted = lift_projection(&t, &tol()).unwrap();
        assert!((lifted.block(0) - &diag(&[1.0, 0.0])).max_abs() < 1e-14);
        let t = BlockOperator::new(2, vec![diag(&[0.5, 0.0])], diag(&[1.0, 0.0])).unwrap();
        assert_eq!(
            lift_projection(&t, &tol()),
            Err(CalkinError::NoSpectralGap { block: BlockIndex::Exceptional(0), eigenvalue: 0.5 })
        );
        let nonsym = BlockOperator::new(2, vec![CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])], diag(&[1.0, 0.0]));
        assert!(matches!(lift_projection(&nonsym.unwrap(), &tol()), Err(CalkinError::NotSelfadjoint(_))));
    }

    #[test]
    fn lift_geodesic_example() {
        let p = qe(diag(&[1.0, 0.0]));
        let z = qe(rot(FRAC_PI_3));
        let lift = BlockOperator::new(2, vec![diag(&[0.0, 1.0])], diag(&[1.0, 0.0])).unwrap();
        let big_z = lift_geodesic(&p, &z, &lift).unwrap();
        assert_eq!(quotient(&big_z), z);
        assert!((big_z.norm().unwrap() - FRAC_PI_3).abs() < 1e-12);
        for t in [0.25, 0.5, 1.0] {
            let delta = block_geodesic_point(&big_z, &lift, t, &tol()).unwrap();
            assert_eq!(quotient(&delta), quotient_geodesic_point(&z, &p, t, &tol()).unwrap());
        }
        let zero = lift_geodesic(&p, &qe(CMatrix::zeros(2, 2)), &lift).unwrap();
        assert_eq!(zero.norm().unwrap(), 0.0);
    }

    #[test]
    fn lift_geodesic_errors() {
        let p = qe(diag(&[1.0, 0.0]));
        let lift = BlockOperator::constant(diag(&[1.0, 0.0])).unwrap();
        let diag_skew = qe(CMatrix::from_diag(&[Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)]));
        assert!(matches!(lift_geodesic(&p, &diag_skew, &lift), Err(CalkinError::NotCodiagonal(_))));
        assert!(matches!(lift_geodesic(&p, &qe(rot(2.0)), &lift), Err(CalkinError::NormTooLarge(_))));
        let wrong = BlockOperator::constant(diag(&[0.0, 1.0])).unwrap();
        assert!(matches!(lift_geodesic(&p, &qe(rot(0.3)), &wrong), Err(CalkinError::FiberMismatch(_))));
    }

    #[test]
    fn fiber_freedom() {
        let mut rng = seeded_rng(3);
        let p = qe(diag(&[1.0, 0.0, 1.0]));
        let pp = make_projection(p.matrix()).unwrap();
        let qq = make_projection(&CMatrix::direct_sum(&[&line(0.7), &diag(&[1.0])])).unwrap();
        let z = qe(minimal_exponent(&pp, &qq, None, &tol()).unwrap().exponent().clone());
        for _ in 0..10 {
            let lift = random_fiber_projection(&p, 3, &mut rng);
            let big_z = lift_geodesic(&p, &z, &lift).unwrap();
            assert!((big_z.norm().unwrap() - z.norm().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn dichotomy_examples() {
        let p = qe(diag(&[1.0, 0.0]));
        let d = existence_dichotomy(&p, &p, None, &tol()).unwrap();
        assert_eq!((d.case, d.exists), (DichotomyCase::FiniteFinite, true));
        let d = existence_dichotomy(&p, &qe(diag(&[0.0, 1.0])), None, &tol()).unwrap();
        assert_eq!((d.case, d.exists), (DichotomyCase::InfiniteInfinite, true));
        let d = existence_dichotomy(&qe(diag(&[1.0, 1.0, 0.0])), &qe(diag(&[1.0, 0.0, 0.0])), None, &tol()).unwrap();
        assert_eq!((d.case, d.exists), (DichotomyCase::Mixed, false));
        assert!(d.witnesses.is_none());
        assert_eq!(d.tail_nullities, IndexPair { d_plus: 1, d_minus: 0 });
    }

    #[test]
    fn surgery_balances_exceptional_blocks() {
        let lp = BlockOperator::new(2, vec![diag(&[1.0, 0.0])], diag(&[1.0, 0.0])).unwrap();
        let lq = BlockOperator::new(2, vec![diag(&[0.0, 0.0])], diag(&[1.0, 0.0])).unwrap();
        let d = existence_dichotomy(&quotient(&lp), &quotient(&lq), Some((&lp, &lq)), &tol()).unwrap();
        let (wp, wq) = d.witnesses.unwrap();
        let oracle = truncation_oracle(&wp, &wq, 6, &tol()).unwrap();
        assert!(oracle.indices.iter().all(|i| i.d_plus == 0 && i.d_minus == 0));
        let before = truncation_oracle(&lp, &lq, 6, &tol()).unwrap();
        assert_eq!(before.indices[5], IndexPair { d_plus: 1, d_minus: 0 });
        assert_eq!(before.case, Some(DichotomyCase::FiniteFinite));
    }

    #[test]
    fn oracle_agrees_on_random_instances() {
        let mut rng = seeded_rng(11);
        for _ in 0..20 {
            let (lp, lq) = random_block_pair(3, 3, &mut rng);
            let d = existence_dichotomy(&quotient(&lp), &quotient(&lq), Some((&lp, &lq)), &tol()).unwrap();
            let o = truncation_oracle(&lp, &lq, 8, &tol()).unwrap();
            assert_eq!(o.case, Some(d.case), "{:?} {:?} {:?}", o.indices, d.tail_nullities, lp.exceptional().len());
        }
    }

    #[test]
    fn quotient_geodesic_examples() {
        let p = qe(diag(&[1.0, 0.0]));
        let g = quotient_geodesic(&p, &p, None, &tol()).unwrap();
        assert_eq!(g.segment.norm(), 0.0);
        assert!(g.unique);
        let g = quotient_geodesic(&p, &qe(line(FRAC_PI_4)), None, &tol()).unwrap();
        assert!((g.segment.norm() - FRAC_PI_4).abs() < 1e-12);
        assert!(g.unique && g.lift_residual.unwrap() < 1e-9);
        let g = quotient_geodesic(&p, &qe(diag(&[0.0, 1.0])), None, &tol()).unwrap();
        assert!(!g.unique);
        let err = quotient_geodesic(&qe(diag(&[1.0, 1.0, 0.0])), &qe(diag(&[1.0, 0.0, 0.0])), None, &tol());
        assert!(matches!(err, Err(CalkinError::NoGeodesic(_))));
        let err = quotient_geodesic(&qe(diag(&[1.0, 1.0, 0.0])), &qe(diag(&[0.0, 0.0, 1.0])), None, &tol());
        assert!(matches!(err, Err(CalkinError::Unrepresentable(_))));
    }

    #[test]
    fn witness_exponent_matches_quotient_with_exceptional_blocks() {
        let lp = BlockOperator::new(2, vec![diag(&[1.0, 0.0]), diag(&[1.0, 1.0])], line(0.3)).unwrap();
        let lq = BlockOperator::new(2, vec![diag(&[0.0, 0.0]), diag(&[0.0, 1.0])], line(1.0)).unwrap();
        let g = quotient_geodesic(&quotient(&lp), &quotient(&lq), Some((&lp, &lq)), &tol()).unwrap();
        assert!(g.lift_residual.unwrap() < 1e-9);
        assert!((g.segment.norm() - 0.7).abs() < 1e-12);
    }
}
