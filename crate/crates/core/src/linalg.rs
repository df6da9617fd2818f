//! Small dense linear-algebra helpers used by the certificate machinery.
//!
//! Matrices here are tiny (d <= 16), so everything is dense and direct.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

/// Tolerance for definiteness and Hurwitz tests.
pub const EIG_TOL: f64 = 1e-10;

/// Relative tolerance for the symmetry test.
pub const SYM_TOL: f64 = 1e-12;

pub fn ensure_square(m: &DMatrix<f64>, what: &'static str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            what,
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYM_TOL * scale {
                return false;
            }
        }
    }
    true
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Iteration cap for the eigenvalue solvers; NaN is reported past it.
const MAX_EIG_ITER: usize = 10_000;

/// Largest absolute entry, used to rescale before eigenvalue iterations.
fn scale_of(m: &DMatrix<f64>) -> f64 {
    let s = m.amax();
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// Eigenvalues of a symmetric matrix, ascending; all NaN if the iteration fails.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let s = scale_of(m);
    let scaled = symmetrize(m) / s;
    let mut ev: Vec<f64> = match SymmetricEigen::try_new(scaled, f64::EPSILON, MAX_EIG_ITER) {
        Some(e) => e.eigenvalues.iter().map(|v| v * s).collect(),
        None => vec![f64::NAN; m.nrows()],
    };
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::NAN)
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NAN)
}

/// Checks that `m` is square, finite, symmetric and has smallest eigenvalue above [`EIG_TOL`].
pub fn ensure_spd(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    ensure_square(m, what)?;
    if m.iter().any(|x| !x.is_finite()) || !is_symmetric(m) {
        return Err(Error::NotSymmetric(what));
    }
    if m.nrows() == 0 || !(lambda_min(m) > EIG_TOL) {
        return Err(Error::NotPositiveDefinite(what));
    }
    Ok(())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    if a.iter().any(|x| !x.is_finite()) {
        return f64::NAN;
    }
    let s = scale_of(a);
    match Schur::try_new(a / s, f64::EPSILON, MAX_EIG_ITER) {
        Some(schur) => {
            s * schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max)
        }
        None => f64::NAN,
    }
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    spectral_abscissa(a) < -EIG_TOL
}

/// Solves `AᵀP + PA + Q = 0` through the vectorized (Kronecker) system
/// `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = -vec(Q)`, with one step of iterative refinement.
///
/// Only the linear solve lives here; preconditions are checked by the caller.
pub fn lyapunov_kronecker(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let lu = k.clone().lu();
    let mut v = lu.solve(&rhs).ok_or(Error::Singular)?;
    let r = &rhs - &k * &v;
    if let Some(dv) = lu.solve(&r) {
        v += dv;
    }
    let p = DMatrix::from_column_slice(n, n, v.as_slice());
    Ok(symmetrize(&p))
}

/// Frobenius norm of `AᵀP + PA + Q`.
pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (a.transpose() * p + p * a + q).norm()
}

/// Largest generalized eigenvalue of the symmetric-definite pencil `(b, a)`, i.e.
/// `max_x xᵀBx / xᵀAx`, via the Cholesky reduction `L⁻¹ B L⁻ᵀ` with `A = LLᵀ`.
pub fn pencil_max_eigenvalue(b: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("pencil denominator"))?;
    let l = chol.l();
    let linv_b = l
        .solve_lower_triangular(b)
        .ok_or(Error::NotPositiveDefinite("pencil denominator"))?;
    let reduced = l
        .solve_lower_triangular(&linv_b.transpose())
        .ok_or(Error::NotPositiveDefinite("pencil denominator"))?;
    Ok(lambda_max(&reduced))
}

pub fn quad_form(p: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(p * x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_solves_diagonal_case() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let q = DMatrix::identity(2, 2);
        let p = lyapunov_kronecker(&a, &q).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((p[(1, 1)] - 0.25).abs() < 1e-14);
        assert!(p[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn abscissa_of_rotation_is_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(spectral_abscissa(&a).abs() < 1e-12);
        assert!(!is_hurwitz(&a));
    }

    #[test]
    fn pencil_against_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 3.0]));
        assert!((pencil_max_eigenvalue(&b, &a).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn spd_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            ensure_spd(&m, "m"),
            Err(Error::NotPositiveDefinite(_))
        ));
        let ns = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(ensure_spd(&ns, "m"), Err(Error::NotSymmetric(_))));
    }
}
