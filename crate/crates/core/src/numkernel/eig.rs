//! Cyclic Jacobi eigensolver for Hermitian matrices and the one-sided
//! (Hestenes) variant used for singular values and nullspaces.
//!
//! Both share the same 2×2 rotation: a diagonal phase makes the pivot real,
//! then a real Givens rotation annihilates it.

use num_complex::Complex64;

use super::{CMatrix, NumError, Tolerance};

/// Sweep budget shared by both Jacobi variants.
pub const MAX_SWEEPS: usize = 30;

/// Eigendecomposition `A = U diag(λ) U*` with `λ` ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, unitary.
    pub eigenvectors: CMatrix,
}

impl HermEig {
    /// `U diag(f(λ)) U*`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let d: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        CMatrix::spectral_synthesis(&self.eigenvectors, &d)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(|l| Complex64::new(l, 0.0))
    }
}

/// Rotation `J = [[c, s], [−s·e^{−iφ}, c·e^{−iφ}]]` acting on columns `(p, q)`.
#[derive(Clone, Copy)]
struct Rotation {
    c: f64,
    s: f64,
    phase: Complex64, // e^{-iφ}
}

impl Rotation {
    /// Rotation diagonalizing the Hermitian 2×2 block `[[app, apq], [conj(apq), aqq]]`.
    /// Returns the rotation and `t` so that the new diagonal is `(app − t|apq|, aqq + t|apq|)`.
    fn annihilating(app: f64, aqq: f64, apq: Complex64) -> (Self, f64) {
        let r = apq.norm();
        let phase = (apq / r).conj();
        let theta = (aqq - app) / (2.0 * r);
        let t = if theta.abs() > 1e150 {
            0.5 / theta
        } else {
            let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
            sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
        };
        let c = 1.0 / (t * t + 1.0).sqrt();
        (Self { c, s: t * c, phase }, t * r)
    }

    #[inline]
    fn apply_to_pair(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        (
            x * self.c - y * self.phase * self.s,
            x * self.s + y * self.phase * self.c,
        )
    }
}

fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, rot: Rotation) {
    for k in 0..m.rows() {
        let (x, y) = rot.apply_to_pair(m[(k, p)], m[(k, q)]);
        m[(k, p)] = x;
        m[(k, q)] = y;
    }
}

fn rotate_rows_adjoint(m: &mut CMatrix, p: usize, q: usize, rot: Rotation) {
    let ph = rot.phase.conj();
    for k in 0..m.cols() {
        let x = m[(p, k)];
        let y = m[(q, k)];
        m[(p, k)] = x * rot.c - y * ph * rot.s;
        m[(q, k)] = x * rot.s + y * ph * rot.c;
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi.
///
/// The input must be Hermitian to `recon_rtol` relative to its operator norm;
/// its Hermitian part is what gets diagonalized.
pub fn herm_eig(a: &CMatrix, tol: &Tolerance) -> Result<HermEig, NumError> {
    if !a.is_square() {
        return Err(NumError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    check_hermitian(a, tol)?;
    jacobi_hermitian(a.hermitian_part())
}

pub(crate) fn check_hermitian(a: &CMatrix, tol: &Tolerance) -> Result<(), NumError> {
    let defect = a.hermitian_defect();
    if defect == 0.0 {
        return Ok(());
    }
    let n = a.rows().max(1) as f64;
    // ‖A‖₂ ≥ ‖A‖_F/√n and ‖D‖₂ ≤ ‖D‖_F: cheap sufficient test before the exact one.
    if defect <= tol.recon_rtol * a.frobenius_norm() / n.sqrt() {
        return Ok(());
    }
    let diff = a - &a.adjoint();
    let residual = op_norm(&diff)?;
    if residual <= tol.recon_rtol * op_norm(a)? {
        Ok(())
    } else {
        Err(NumError::NotHermitian { residual })
    }
}

fn jacobi_hermitian(mut a: CMatrix) -> Result<HermEig, NumError> {
    let n = a.rows();
    let mut v = CMatrix::identity(n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }

    let negligible = f64::EPSILON * a.frobenius_norm() / n.max(1) as f64;
    let mut converged = n <= 1;
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm())
            .sum();
        if off == 0.0 {
            converged = true;
            break;
        }
        let thresh = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if r <= negligible || r <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);
                    continue;
                }
                if r <= thresh || r == 0.0 {
                    continue;
                }
                let (rot, shift) = Rotation::annihilating(app, aqq, apq);
                rotate_columns(&mut a, p, q, rot);
                rotate_rows_adjoint(&mut a, p, q, rot);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(app - shift, 0.0);
                a[(q, q)] = Complex64::new(aqq + shift, 0.0);
                rotate_columns(&mut v, p, q, rot);
            }
        }
    }
    if !converged {
        let off_after: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm())
            .sum();
        if off_after != 0.0 {
            return Err(NumError::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    Ok(HermEig {
        eigenvalues: order.iter().map(|&i| a[(i, i)].re).collect(),
        eigenvectors: v.select_columns(&order),
    })
}

/// Thin SVD data from one-sided Jacobi: `A·V = W`, columns of `W` mutually
/// orthogonal with norms equal to the singular values.
#[derive(Clone, Debug)]
pub struct JacobiSvd {
    /// Singular values, one per column of `A`, in the column order of `right`.
    pub singular_values: Vec<f64>,
    /// Right singular vectors (unitary, `cols × cols`).
    pub right: CMatrix,
    /// `A·right`.
    pub scaled_left: CMatrix,
}

pub fn jacobi_svd(a: &CMatrix) -> Result<JacobiSvd, NumError> {
    let n = a.cols();
    let mut w = a.clone();
    let mut v = CMatrix::identity(n);
    let tol = f64::EPSILON * (a.rows().max(1) as f64).sqrt();
    // columns this small are zero for every purpose downstream
    let negligible = f64::EPSILON * a.frobenius_norm();

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, Complex64::new(0.0, 0.0));
                for k in 0..w.rows() {
                    let x = w[(k, p)];
                    let y = w[(k, q)];
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let (na, nb) = (alpha.sqrt(), beta.sqrt());
                if gamma.norm() <= tol * na * nb || gamma.norm() == 0.0 || na.min(nb) <= negligible {
                    continue;
                }
                rotated = true;
                let (rot, _) = Rotation::annihilating(alpha, beta, gamma);
                rotate_columns(&mut w, p, q, rot);
                rotate_columns(&mut v, p, q, rot);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NumError::NoConvergence { sweeps: MAX_SWEEPS });
    }
    let singular_values = (0..n)
        .map(|j| (0..w.rows()).map(|k| w[(k, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(JacobiSvd { singular_values, right: v, scaled_left: w })
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>, NumError> {
    let src = if a.cols() > a.rows() { a.adjoint() } else { a.clone() };
    let mut s = jacobi_svd(&src)?.singular_values;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Operator (spectral) norm: the largest singular value.
pub fn op_norm(a: &CMatrix) -> Result<f64, NumError> {
    if a.rows() == 0 || a.cols() == 0 || a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    Ok(singular_values(a)?[0])
}

/// Orthonormal basis (as columns) of the numerical nullspace of `a`.
///
/// A direction counts as null when its singular value (eigenvalue magnitude,
/// for Hermitian input) is at most `rank_rtol·‖a‖`. A zero matrix has the
/// whole space as nullspace.
pub fn nullspace(a: &CMatrix, tol: &Tolerance) -> Result<CMatrix, NumError> {
    nullspace_scaled(a, 0.0, tol)
}

/// Like [`nullspace`] with threshold `rank_rtol·max(‖a‖, scale)`.
///
/// Use when `a` is a combination of operators of known size, e.g. `P − Q − 1`
/// for projections (`scale = 1`): a tiny `a` is then null rather than
/// full rank relative to itself.
pub fn nullspace_scaled(a: &CMatrix, scale: f64, tol: &Tolerance) -> Result<CMatrix, NumError> {
    let n = a.cols();
    if a.max_abs() == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    if a.is_square() && a.hermitian_defect() <= tol.recon_rtol * a.frobenius_norm() / (n as f64).sqrt() {
        let eig = jacobi_hermitian(a.hermitian_part())?;
        let norm = eig.eigenvalues.iter().fold(scale, |m, l| m.max(l.abs()));
        let idx: Vec<usize> = (0..n)
            .filter(|&i| eig.eigenvalues[i].abs() <= tol.rank_rtol * norm)
            .collect();
        return Ok(eig.eigenvectors.select_columns(&idx));
    }
    let svd = jacobi_svd(a)?;
    let norm = svd.singular_values.iter().fold(scale, |m, &s| m.max(s));
    let idx: Vec<usize> = (0..n)
        .filter(|&j| svd.singular_values[j] <= tol.rank_rtol * norm)
        .collect();
    Ok(svd.right.select_columns(&idx))
}

pub fn nullity(a: &CMatrix, tol: &Tolerance) -> Result<usize, NumError> {
    Ok(nullspace(a, tol)?.cols())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::random::{random_complex, random_hermitian, random_unitary, seeded_rng};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn clustered_projector_converges() {
        let mut rng = seeded_rng(11);
        for k in 2..14 {
            let basis = random_complex(14, k, &mut rng);
            let a = &CMatrix::identity(14) - &CMatrix::range_projector(&basis);
            let e = herm_eig(&a, &tol()).unwrap();
            assert!(op_norm(&(&e.reconstruct() - &a)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn diagonal_input_sorted() {
        let a = CMatrix::from_real_diag(&[2.0, -1.0]);
        let e = herm_eig(&a, &tol()).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0]);
        // columns are the permuted identity
        assert_eq!(e.eigenvectors[(1, 0)].norm(), 1.0);
        assert_eq!(e.eigenvectors[(0, 1)].norm(), 1.0);
    }

    #[test]
    fn swap_matrix() {
        let a = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = herm_eig(&a, &tol()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = seeded_rng(11);
        let a = random_hermitian(8, &mut rng);
        let e = herm_eig(&a, &tol()).unwrap();
        let err = op_norm(&(&e.reconstruct() - &a)).unwrap();
        assert!(err <= 1e-12 * op_norm(&a).unwrap(), "err {err}");
        let u = &e.eigenvectors;
        let ortho = op_norm(&(&(&u.adjoint() * u) - &CMatrix::identity(8))).unwrap();
        assert!(ortho <= 1e-12);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(herm_eig(&a, &tol()), Err(NumError::NotHermitian { .. })));
        let r = CMatrix::zeros(2, 3);
        assert!(matches!(herm_eig(&r, &tol()), Err(NumError::NotSquare { .. })));
    }

    #[test]
    fn op_norm_examples() {
        assert_eq!(op_norm(&CMatrix::zeros(3, 3)).unwrap(), 0.0);
        assert!((op_norm(&CMatrix::from_real_diag(&[3.0, -5.0])).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn op_norm_matches_gram_eigenvalue_oracle() {
        let mut rng = seeded_rng(5);
        let a = random_complex(6, 6, &mut rng);
        let gram = &a.adjoint() * &a;
        let oracle = herm_eig(&gram, &tol()).unwrap().eigenvalues[5].sqrt();
        let got = op_norm(&a).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn op_norm_rectangular_and_unitarily_invariant() {
        let mut rng = seeded_rng(8);
        let a = random_complex(4, 7, &mut rng);
        let u = random_unitary(4, &mut rng);
        let w = random_unitary(7, &mut rng);
        let lhs = op_norm(&(&(&u * &a) * &w)).unwrap();
        assert!((lhs - op_norm(&a).unwrap()).abs() < 1e-12);
        assert!((op_norm(&a).unwrap() - op_norm(&a.adjoint()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn nullspace_examples() {
        let t = tol();
        let a = CMatrix::from_real_diag(&[0.0, -2.0]);
        let ns = nullspace(&a, &t).unwrap();
        assert_eq!(ns.cols(), 1);
        assert!((ns[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert_eq!(nullity(&CMatrix::from_real_diag(&[2.0, 1.0]), &t).unwrap(), 0);
        // P − Q − 1 with P = diag(1,0), Q = diag(0,1)
        let p = CMatrix::from_real_diag(&[1.0, 0.0]);
        let q = CMatrix::from_real_diag(&[0.0, 1.0]);
        assert_eq!(nullity(&(&p - &q).shift(1.0), &t).unwrap(), 1);
        assert_eq!(nullity(&CMatrix::zeros(3, 3), &t).unwrap(), 3);
        let tiny = CMatrix::from_real_diag(&[-2e-16]);
        assert_eq!(nullity(&tiny, &t).unwrap(), 0);
        assert_eq!(nullspace_scaled(&tiny, 1.0, &t).unwrap().cols(), 1);
    }

    #[test]
    fn nullspace_non_hermitian() {
        let t = tol();
        // rank-1 4×3 matrix: nullity 2
        let mut rng = seeded_rng(2);
        let u = random_complex(4, 1, &mut rng);
        let v = random_complex(3, 1, &mut rng);
        let a = &u * &v.adjoint();
        let ns = nullspace(&a, &t).unwrap();
        assert_eq!(ns.cols(), 2);
        assert!(op_norm(&(&a * &ns)).unwrap() < 1e-13);
    }
}
