use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::eig::{herm_eig, jacobi_svd, op_norm, singular_values};
use super::{CMatrix, HermEig, NumError, Tolerance};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Unitary factor `V` of the polar decomposition `A = V·(A*A)^{1/2}`.
///
/// For Hermitian `A` this is the spectral sign `U diag(sign λ) U*`, a
/// symmetry (`V = V* = V⁻¹`). Singular input is rejected.
pub fn polar_unitary(a: &CMatrix, tol: &Tolerance) -> Result<CMatrix, NumError> {
    if !a.is_square() {
        return Err(NumError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if a.hermitian_defect() <= tol.recon_rtol * a.frobenius_norm() / (n.max(1) as f64).sqrt() {
        let eig = herm_eig(a, tol)?;
        let norm = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let nullity = eig
            .eigenvalues
            .iter()
            .filter(|l| l.abs() <= tol.rank_rtol * norm)
            .count();
        if nullity > 0 || norm == 0.0 {
            return Err(NumError::SingularInput { nullity: if norm == 0.0 { n } else { nullity } });
        }
        return Ok(eig.apply_fn(|l| Complex64::new(l.signum(), 0.0)));
    }

    let svd = jacobi_svd(a)?;
    let norm = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let nullity = svd
        .singular_values
        .iter()
        .filter(|&&s| s <= tol.rank_rtol * norm)
        .count();
    if nullity > 0 || norm == 0.0 {
        return Err(NumError::SingularInput { nullity: if norm == 0.0 { n } else { nullity } });
    }
    // A·V = W with orthogonal columns w_j = σ_j u_j, so the polar factor is Σ u_j v_j*.
    let mut left = svd.scaled_left.clone();
    for j in 0..n {
        let s = svd.singular_values[j];
        for i in 0..n {
            left[(i, j)] /= s;
        }
    }
    Ok(&left * &svd.right.adjoint())
}

/// Spectral form of a skew-Hermitian `Z = U diag(iθ) U*`, for evaluating
/// `e^{tZ}` at many `t` from one eigensolve.
#[derive(Clone, Debug)]
pub struct SkewExp {
    eig: HermEig,
}

impl SkewExp {
    pub fn new(z: &CMatrix, tol: &Tolerance) -> Result<Self, NumError> {
        if !z.is_square() {
            return Err(NumError::NotSquare { rows: z.rows(), cols: z.cols() });
        }
        check_skew(z, tol)?;
        // −iZ is Hermitian with eigenvalues θ.
        let h = z.scale(-I);
        let eig = herm_eig(&h, tol)?;
        Ok(Self { eig })
    }

    /// `e^{tZ}`.
    pub fn at(&self, t: f64) -> CMatrix {
        self.eig.apply_fn(|theta| Complex64::from_polar(1.0, t * theta))
    }

    /// Eigenvalues of `−iZ`, ascending.
    pub fn phases(&self) -> &[f64] {
        &self.eig.eigenvalues
    }
}

fn check_skew(z: &CMatrix, tol: &Tolerance) -> Result<(), NumError> {
    let defect = z.skew_defect();
    if defect == 0.0 {
        return Ok(());
    }
    let n = z.rows().max(1) as f64;
    if defect <= tol.recon_rtol * z.frobenius_norm() / n.sqrt() {
        return Ok(());
    }
    let residual = op_norm(&(z + &z.adjoint()))?;
    if residual <= tol.recon_rtol * op_norm(z)? {
        Ok(())
    } else {
        Err(NumError::NotSkew { residual })
    }
}

/// Matrix exponential of a skew-Hermitian matrix (a unitary).
pub fn expm_skew(z: &CMatrix, tol: &Tolerance) -> Result<CMatrix, NumError> {
    Ok(SkewExp::new(z, tol)?.at(1.0))
}

/// Principal logarithm of a unitary, with the facts the geodesic code needs
/// about where its spectrum sits.
#[derive(Clone, Debug)]
pub struct PrincipalLog {
    /// Skew-Hermitian `Z` with `e^Z = W`.
    pub log: CMatrix,
    /// Eigenvalues of `−iZ`, each in `(−π, π]`, in eigenvector order.
    pub phases: Vec<f64>,
    /// Some eigenvalue of `W` was within `rank_rtol` of −1 (phase set to +π).
    pub at_minus_one: bool,
    /// All phases lie in `[−π/2, π/2]` (up to 1e−12).
    pub within_half_pi: bool,
}

/// Principal logarithm of a unitary `W`.
///
/// Eigenvectors come from the Hermitian Cayley transform
/// `H = i(1 − cW)(1 + cW)⁻¹`, which shares them with `W` and separates
/// distinct eigenvalues. The unit scalar `c` keeps `−c̄` away from the
/// spectrum. Phases are the arguments of the Rayleigh quotients `u*Wu`.
///
/// With `strict`, an eigenvalue at −1 is an error instead of being mapped to
/// the closed end `+π` of the branch.
pub fn logm_unitary_principal(w: &CMatrix, tol: &Tolerance, strict: bool) -> Result<PrincipalLog, NumError> {
    if !w.is_square() {
        return Err(NumError::NotSquare { rows: w.rows(), cols: w.cols() });
    }
    let n = w.rows();
    let id = CMatrix::identity(n);
    let gram_defect = &(&w.adjoint() * w) - &id;
    if gram_defect.frobenius_norm() > tol.recon_rtol {
        let residual = op_norm(&gram_defect)?;
        if residual > tol.recon_rtol {
            return Err(NumError::NotUnitary { residual });
        }
    }
    if n == 0 {
        return Ok(PrincipalLog { log: id, phases: vec![], at_minus_one: false, within_half_pi: true });
    }

    let c = cayley_shift(w)?;
    let cw = w.scale(c);
    let plus = &id + &cw;
    let minus = &id - &cw;
    let h = (&minus * &inverse(&plus)?).scale(I).hermitian_part();
    let basis = herm_eig(&h, tol)?.eigenvectors;

    let mut at_minus_one = false;
    let mut phases = Vec::with_capacity(n);
    for j in 0..n {
        let u = basis.column(j);
        let mut lambda = Complex64::new(0.0, 0.0);
        for r in 0..n {
            let mut wu = Complex64::new(0.0, 0.0);
            for k in 0..n {
                wu += w[(r, k)] * u[k];
            }
            lambda += u[r].conj() * wu;
        }
        let theta = if (lambda + ONE).norm() <= tol.rank_rtol {
            if strict {
                return Err(NumError::LogAtMinusOne { re: lambda.re, im: lambda.im });
            }
            at_minus_one = true;
            PI
        } else {
            let t = lambda.im.atan2(lambda.re);
            if t == -PI {
                PI
            } else {
                t
            }
        };
        phases.push(theta);
    }
    let diag: Vec<Complex64> = phases.iter().map(|&t| Complex64::new(0.0, t)).collect();
    let log = CMatrix::spectral_synthesis(&basis, &diag);
    let within_half_pi = phases.iter().all(|t| t.abs() <= FRAC_PI_2 + 1e-12);
    Ok(PrincipalLog { log, phases, at_minus_one, within_half_pi })
}

/// Unit scalar `c` maximizing the distance of `−c̄` from the spectrum of `W`.
/// `c = 1` whenever the spectrum stays clear of −1.
fn cayley_shift(w: &CMatrix) -> Result<Complex64, NumError> {
    let n = w.rows();
    let id = CMatrix::identity(n);
    let clearance = |c: Complex64| -> Result<f64, NumError> {
        let s = singular_values(&(&id + &w.scale(c)))?;
        Ok(*s.last().unwrap_or(&0.0))
    };
    if clearance(ONE)? >= 0.5 {
        return Ok(ONE);
    }
    // n eigenvalues leave an arc of length ≥ 2π/n; 4n+4 candidates land inside one.
    let k = 4 * n + 4;
    let mut best = (ONE, -1.0);
    for j in 0..k {
        let c = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / k as f64);
        let s = clearance(c)?;
        if s > best.1 {
            best = (c, s);
        }
    }
    Ok(best.0)
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn inverse(a: &CMatrix) -> Result<CMatrix, NumError> {
    if !a.is_square() {
        return Err(NumError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut inv = CMatrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
            .unwrap();
        if m[(pivot, col)].norm() == 0.0 {
            return Err(NumError::SingularInput { nullity: 1 });
        }
        if pivot != col {
            for k in 0..n {
                let t = m[(col, k)];
                m[(col, k)] = m[(pivot, k)];
                m[(pivot, k)] = t;
                let t = inv[(col, k)];
                inv[(col, k)] = inv[(pivot, k)];
                inv[(pivot, k)] = t;
            }
        }
        let d = m[(col, col)];
        for k in 0..n {
            m[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f.norm() == 0.0 {
                continue;
            }
            for k in 0..n {
                let mv = m[(col, k)];
                let iv = inv[(col, k)];
                m[(r, k)] -= f * mv;
                inv[(r, k)] -= f * iv;
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::random::{random_complex, random_hermitian, random_skew, random_unitary, seeded_rng};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
        op_norm(&(a - b)).unwrap()
    }

    #[test]
    fn polar_examples() {
        let v = polar_unitary(&CMatrix::from_real_diag(&[3.0, -2.0]), &tol()).unwrap();
        assert!(dist(&v, &CMatrix::from_real_diag(&[1.0, -1.0])) < 1e-15);
        let v = polar_unitary(&CMatrix::identity(3), &tol()).unwrap();
        assert!(dist(&v, &CMatrix::identity(3)) < 1e-15);
        let sing = CMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(polar_unitary(&sing, &tol()), Err(NumError::SingularInput { .. })));
    }

    #[test]
    fn polar_hermitian_matches_spectral_sign_oracle() {
        let mut rng = seeded_rng(21);
        let a = random_hermitian(6, &mut rng);
        let v = polar_unitary(&a, &tol()).unwrap();
        // oracle: sign function through an independent Jacobi solve of A²
        // (|A| = (A²)^{1/2}, V = A·|A|⁻¹)
        let sq = herm_eig(&(&a * &a), &tol()).unwrap();
        let inv_abs = sq.apply_fn(|l| Complex64::new(1.0 / l.sqrt(), 0.0));
        let oracle = &a * &inv_abs;
        assert!(dist(&v, &oracle) < 1e-10, "{}", dist(&v, &oracle));
        assert!(dist(&(&v * &v), &CMatrix::identity(6)) < 1e-12);
    }

    #[test]
    fn polar_general_square() {
        let mut rng = seeded_rng(4);
        let a = random_complex(5, 5, &mut rng);
        let v = polar_unitary(&a, &tol()).unwrap();
        assert!(dist(&(&v.adjoint() * &v), &CMatrix::identity(5)) < 1e-12);
        let abs = herm_eig(&(&a.adjoint() * &a), &tol())
            .unwrap()
            .apply_fn(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
        assert!(dist(&(&v * &abs), &a) < 1e-11 * op_norm(&a).unwrap());
    }

    #[test]
    fn expm_examples() {
        assert!(dist(&expm_skew(&CMatrix::zeros(3, 3), &tol()).unwrap(), &CMatrix::identity(3)) < 1e-15);
        let rot = CMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let e = expm_skew(&rot.scale_re(FRAC_PI_2), &tol()).unwrap();
        assert!(dist(&e, &rot) < 1e-15);
        assert!(matches!(expm_skew(&CMatrix::identity(2), &tol()), Err(NumError::NotSkew { .. })));
    }

    #[test]
    fn expm_inverse_check() {
        let mut rng = seeded_rng(9);
        let z = random_skew(6, &mut rng);
        let e = expm_skew(&z, &tol()).unwrap();
        let einv = expm_skew(&(-&z), &tol()).unwrap();
        assert!(dist(&(&e * &einv), &CMatrix::identity(6)) < 1e-11);
    }

    #[test]
    fn logm_examples() {
        let l = logm_unitary_principal(&CMatrix::identity(3), &tol(), true).unwrap();
        assert!(l.log.max_abs() < 1e-15);
        let w = CMatrix::from_diag(&[I, -I]);
        let l = logm_unitary_principal(&w, &tol(), true).unwrap();
        let expect = CMatrix::from_diag(&[I * FRAC_PI_2, -I * FRAC_PI_2]);
        assert!(dist(&l.log, &expect) < 1e-14);
        assert!(l.within_half_pi);
    }

    #[test]
    fn logm_branch_cut() {
        let w = CMatrix::from_real_diag(&[-1.0, 1.0]);
        assert!(matches!(
            logm_unitary_principal(&w, &tol(), true),
            Err(NumError::LogAtMinusOne { .. })
        ));
        let l = logm_unitary_principal(&w, &tol(), false).unwrap();
        assert!(l.at_minus_one && !l.within_half_pi);
        assert!(l.phases.contains(&PI));
        assert!(dist(&expm_skew(&l.log, &tol()).unwrap(), &w) < 1e-12);
    }

    #[test]
    fn logm_round_trip_small_norm() {
        let mut rng = seeded_rng(17);
        for n in [2, 5, 9] {
            let z = random_skew(n, &mut rng);
            let z0 = z.scale_re((FRAC_PI_2 - 0.01) / op_norm(&z).unwrap());
            let w = expm_skew(&z0, &tol()).unwrap();
            let l = logm_unitary_principal(&w, &tol(), true).unwrap();
            assert!(dist(&l.log, &z0) < 1e-9, "n={n}: {}", dist(&l.log, &z0));
        }
    }

    #[test]
    fn logm_handles_spectrum_near_minus_one() {
        let mut rng = seeded_rng(30);
        let u = random_unitary(4, &mut rng);
        let d = [3.1, -3.0, 0.2, 3.14];
        let w = CMatrix::spectral_synthesis(&u, &d.map(|t| Complex64::from_polar(1.0, t)));
        let l = logm_unitary_principal(&w, &tol(), true).unwrap();
        assert!(dist(&expm_skew(&l.log, &tol()).unwrap(), &w) < 1e-12);
        let mut ph = l.phases.clone();
        ph.sort_by(f64::total_cmp);
        let mut expect = d.to_vec();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ph.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let mut rng = seeded_rng(2);
        let a = random_complex(6, 6, &mut rng);
        let ai = inverse(&a).unwrap();
        assert!(dist(&(&a * &ai), &CMatrix::identity(6)) < 1e-12);
        assert!(inverse(&CMatrix::zeros(2, 2)).is_err());
    }
}
