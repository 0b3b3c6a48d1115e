//! Bartels–Stewart solution of Sylvester and Lyapunov equations.

use nalgebra::{DMatrix, DVector};

use super::{check_finite, real_part, to_complex, CMatrix, SchurForm};
use crate::{Error, Result};

/// Solves A X + X B + C = 0 for X.
///
/// A is n×n, B is r×r, C is n×r. Both coefficient matrices are reduced to
/// complex Schur form and the transformed triangular equation is solved by
/// back substitution, column by column.
pub fn solve_sylvester(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let sa = SchurForm::new(a)?;
    let sb = SchurForm::new(b)?;
    solve_sylvester_with(&sa, &sb, c)
}

/// [`solve_sylvester`] against prefactored coefficients, so that a loop of
/// solves with the same A and varying B or C refactors neither.
pub fn solve_sylvester_with(
    a: &SchurForm,
    b: &SchurForm,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_finite(c, "Sylvester right-hand side")?;
    if c.nrows() != a.dim() || c.ncols() != b.dim() {
        return Err(Error::DimensionMismatch(
            "Sylvester equation needs A n×n, B r×r, C n×r",
        ));
    }

    // A = Qa Ta Qaᴴ, B = Qb Tb Qbᴴ transform the equation into
    // Ta Y + Y Tb + Qaᴴ C Qb = 0 with Y = Qaᴴ X Qb.
    let ct = a.q().adjoint() * to_complex(c) * b.q();
    let y = solve_triangular_sylvester(a.t(), b.t(), &ct, a.t().norm() + b.t().norm())?;
    let x = a.q() * y * b.q().adjoint();
    Ok(real_part(&x))
}

/// Solves A X + X Aᵀ + Q = 0 for X (the Lyapunov special case).
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sa = SchurForm::new(a)?;
    solve_sylvester_with(&sa, &sa.transpose_form(), q)
}

/// Solves Ta Y + Y Tb + C = 0 with Ta, Tb upper triangular.
fn solve_triangular_sylvester(
    ta: &CMatrix,
    tb: &CMatrix,
    c: &CMatrix,
    coeff_scale: f64,
) -> Result<CMatrix> {
    let n = ta.nrows();
    let r = tb.nrows();
    let pivot_tol = 100.0 * f64::EPSILON * coeff_scale.max(f64::MIN_POSITIVE);
    let mut y = CMatrix::zeros(n, r);
    for k in 0..r {
        // (Ta + tb[k,k]·I) y_k = −c_k − Σ_{j<k} y_j tb[j,k]
        let mut rhs = DVector::from_fn(n, |i, _| -c[(i, k)]);
        for j in 0..k {
            let s = tb[(j, k)];
            if s.norm() > 0.0 {
                for i in 0..n {
                    rhs[i] -= y[(i, j)] * s;
                }
            }
        }
        let shift = tb[(k, k)];
        for i in (0..n).rev() {
            let pivot = ta[(i, i)] + shift;
            if pivot.norm() <= pivot_tol {
                return Err(Error::SpectraOverlap);
            }
            let mut s = rhs[i];
            for j in (i + 1)..n {
                s -= ta[(i, j)] * y[(j, k)];
            }
            y[(i, k)] = s / pivot;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn residual(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
        (a * x + x * b + c).norm()
    }

    #[test]
    fn scalar_cases() {
        let x = solve_sylvester(
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::from_element(1, 1, -2.0),
            &DMatrix::from_element(1, 1, 6.0),
        )
        .unwrap();
        assert_relative_eq!(x[(0, 0)], 2.0, max_relative = 1e-12);

        let x = solve_lyapunov(
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert_relative_eq!(x[(0, 0)], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn random_rectangular_instance_has_small_residual() {
        use crate::matfun::test_support::stable;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        let r = 3;
        let a = stable(&mut rng, n);
        let b = stable(&mut rng, r);
        let c = DMatrix::from_fn(n, r, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let x = solve_sylvester(&a, &b, &c).unwrap();
        let tol = 1e-10 * ((a.norm() + b.norm()) * x.norm() + c.norm());
        assert!(residual(&a, &b, &c, &x) <= tol);
    }

    #[test]
    fn prefactored_solve_matches_the_direct_one() {
        use crate::matfun::test_support::stable;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let a = stable(&mut rng, 7);
        let b = stable(&mut rng, 4);
        let c = DMatrix::from_fn(7, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let direct = solve_sylvester(&a, &b, &c).unwrap();
        let sa = SchurForm::new(&a).unwrap();
        let sb = SchurForm::new(&b).unwrap();
        let cached = solve_sylvester_with(&sa, &sb, &c).unwrap();
        assert!((direct - &cached).norm() <= 1e-12 * cached.norm().max(1.0));
    }

    #[test]
    fn lyapunov_solution_is_symmetric_for_symmetric_rhs() {
        use crate::matfun::test_support::stable;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        let a = stable(&mut rng, 6);
        let g = DMatrix::from_fn(6, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let q = &g * g.transpose();
        let x = solve_lyapunov(&a, &q).unwrap();
        assert!(residual(&a, &a.transpose(), &q, &x) <= 1e-10 * (a.norm() * x.norm() + q.norm()));
        assert!((&x - x.transpose()).norm() <= 1e-10 * x.norm());
    }

    #[test]
    fn overlapping_spectra_are_rejected() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let b = DMatrix::from_element(1, 1, 1.0);
        let c = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(
            solve_sylvester(&a, &b, &c),
            Err(Error::SpectraOverlap)
        ));
    }
}
