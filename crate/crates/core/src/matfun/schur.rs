//! Complex Schur decomposition and spectral factorization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{check_finite, to_complex, CMatrix};
use crate::{Error, Result};

const SCHUR_EPS: f64 = 1e-12;
const SCHUR_MAX_ITER: usize = 10_000;

/// Computes the complex Schur form A = Q T Qᴴ with T upper triangular.
pub(crate) fn complex_schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let schur = a
        .clone()
        .try_schur(SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or(Error::SchurFailed)?;
    let (q, t) = schur.unpack();
    Ok((q, t))
}

/// Eigenvalues of a real matrix, sorted by (real part, |imag|, imag).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    check_finite(a, "eigenvalue input")?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues need a square matrix"));
    }
    let (_, t) = complex_schur(&to_complex(a))?;
    let mut lam: Vec<Complex64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    lam.sort_by(|x, y| eigen_order(*x, *y));
    Ok(lam)
}

/// Cached complex Schur factorization A = Q T Qᴴ of a real matrix.
///
/// One O(n³) factorization amortizes every later shifted solve and Sylvester
/// solve against the same coefficient matrix, which is what keeps iterative
/// reduction loops on large models affordable.
#[derive(Debug, Clone)]
pub struct SchurForm {
    q: CMatrix,
    t: CMatrix,
}

impl SchurForm {
    /// Factorizes a real square matrix.
    pub fn new(a: &DMatrix<f64>) -> Result<SchurForm> {
        check_finite(a, "Schur factorization input")?;
        if !a.is_square() {
            return Err(Error::DimensionMismatch(
                "Schur factorization needs a square matrix",
            ));
        }
        let (q, t) = complex_schur(&to_complex(a))?;
        Ok(SchurForm { q, t })
    }

    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Eigenvalues, sorted by (real part, |imag|, imag).
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut lam: Vec<Complex64> = (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect();
        lam.sort_by(|x, y| eigen_order(*x, *y));
        lam
    }

    /// Schur factorization of Aᵀ, derived without a second O(n³) reduction:
    /// with J the index reversal, Aᵀ = (Q̄J)(JTᵀJ)(Q̄J)ᴴ and JTᵀJ is again
    /// upper triangular.
    pub fn transpose_form(&self) -> SchurForm {
        let n = self.t.nrows();
        let q = CMatrix::from_fn(n, n, |i, j| self.q[(i, n - 1 - j)].conj());
        let t = CMatrix::from_fn(n, n, |i, j| self.t[(n - 1 - j, n - 1 - i)]);
        SchurForm { q, t }
    }

    /// Solves (σI − A) X = RHS through the factorization, one triangular
    /// substitution per right-hand side column.
    pub fn shifted_solve(&self, shift: Complex64, rhs: &CMatrix) -> Result<CMatrix> {
        if rhs.nrows() != self.dim() {
            return Err(Error::DimensionMismatch(
                "shifted solve needs right-hand side rows matching the factored matrix",
            ));
        }
        let y = shifted_triangular_solve(&self.t, shift, &(self.q.adjoint() * rhs))?;
        Ok(&self.q * y)
    }

    pub(crate) fn q(&self) -> &CMatrix {
        &self.q
    }

    pub(crate) fn t(&self) -> &CMatrix {
        &self.t
    }
}

/// Solves (σI − T) X = RHS with T upper triangular by back substitution,
/// rejecting shifts that collide with the spectrum.
pub(crate) fn shifted_triangular_solve(
    t: &CMatrix,
    shift: Complex64,
    rhs: &CMatrix,
) -> Result<CMatrix> {
    let n = t.nrows();
    let gaps: Vec<Complex64> = (0..n).map(|i| shift - t[(i, i)]).collect();
    let gap_max = gaps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if gaps
        .iter()
        .any(|z| z.norm() <= 1e-12 * gap_max.max(f64::MIN_POSITIVE))
    {
        return Err(Error::SingularShift);
    }
    let mut x = rhs.clone_owned();
    for i in (0..n).rev() {
        for col in 0..x.ncols() {
            let mut v = x[(i, col)];
            for k in (i + 1)..n {
                v += t[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = v / gaps[i];
        }
    }
    Ok(x)
}

/// Lexicographic eigenvalue order: real part, then |imag|, then imag.
///
/// Conjugate pairs end up adjacent, with the negative-imaginary member first.
pub(crate) fn eigen_order(x: Complex64, y: Complex64) -> std::cmp::Ordering {
    (x.re, x.im.abs(), x.im)
        .partial_cmp(&(y.re, y.im.abs(), y.im))
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Eigenvalue/eigenvector factorization A = R Λ R⁻¹ with simple eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralFactorization {
    /// Eigenvalues, sorted by (real part, |imag|, imag); conjugate pairs are
    /// adjacent.
    pub eigenvalues: DVector<Complex64>,
    /// Right eigenvectors as columns, in the eigenvalue order. Each column
    /// has unit 2-norm and its largest-modulus entry is real positive.
    pub eigenvectors: CMatrix,
    /// 2-norm condition number of the eigenvector matrix.
    pub condition_estimate: f64,
}

/// Factorizes a real matrix as A = R Λ R⁻¹.
///
/// Rejects matrices whose eigenvalues are not pairwise distinct within
/// `1e-8·‖A‖_F`, since every downstream residue formula assumes simple poles.
pub fn spectral_factorization(a: &DMatrix<f64>) -> Result<SpectralFactorization> {
    check_finite(a, "spectral factorization input")?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "spectral factorization needs a square matrix",
        ));
    }
    let n = a.nrows();
    let (q, t) = complex_schur(&to_complex(a))?;
    let lam: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let gap_tol = 1e-8 * a.norm();
    for i in 0..n {
        for j in (i + 1)..n {
            if (lam[i] - lam[j]).norm() < gap_tol {
                return Err(Error::RepeatedPoles);
            }
        }
    }

    let mut vectors = CMatrix::zeros(n, n);
    for i in 0..n {
        let y = triangular_eigenvector(&t, i);
        let v = &q * y;
        let v = normalize_phase(v);
        vectors.set_column(i, &v);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eigen_order(lam[i], lam[j]));

    let mut r = CMatrix::zeros(n, n);
    let mut sorted = DVector::from_element(n, Complex64::new(0.0, 0.0));
    for (k, &i) in order.iter().enumerate() {
        r.set_column(k, &vectors.column(i).into_owned());
        sorted[k] = lam[i];
    }

    let svd = r.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_estimate = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    Ok(SpectralFactorization {
        eigenvalues: sorted,
        eigenvectors: r,
        condition_estimate,
    })
}

/// Eigenvector of an upper-triangular matrix for its i-th diagonal entry,
/// by back substitution with y[i] = 1.
fn triangular_eigenvector(t: &CMatrix, i: usize) -> DVector<Complex64> {
    let n = t.nrows();
    let lam = t[(i, i)];
    let mut y = DVector::from_element(n, Complex64::new(0.0, 0.0));
    y[i] = Complex64::new(1.0, 0.0);
    for j in (0..i).rev() {
        let mut s = Complex64::new(0.0, 0.0);
        for k in (j + 1)..=i {
            s += t[(j, k)] * y[k];
        }
        y[j] = -s / (t[(j, j)] - lam);
    }
    y
}

/// Scales a vector to unit norm with its largest-modulus entry real positive.
fn normalize_phase(mut v: DVector<Complex64>) -> DVector<Complex64> {
    let norm = v.norm();
    if norm > 0.0 {
        v /= Complex64::new(norm, 0.0);
    }
    let mut idx = 0;
    let mut best = -1.0;
    for (k, z) in v.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            idx = k;
        }
    }
    let pivot = v[idx];
    if pivot.norm() > 0.0 {
        let phase = pivot / pivot.norm();
        v /= phase;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_input_sorts_eigenvalues() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -3.0]));
        let f = spectral_factorization(&a).unwrap();
        assert_relative_eq!(f.eigenvalues[0].re, -3.0, max_relative = 1e-12);
        assert_relative_eq!(f.eigenvalues[1].re, -1.0, max_relative = 1e-12);
        for k in 0..2 {
            assert!(f.eigenvalues[k].im.abs() < 1e-12);
        }
        // R must be a permutation of the identity up to column signs.
        let r = &f.eigenvectors;
        assert_relative_eq!(r[(1, 0)].norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(r[(0, 1)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jordan_block_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        assert!(matches!(
            spectral_factorization(&a),
            Err(Error::RepeatedPoles)
        ));
    }

    #[test]
    fn residual_is_small_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = 8;
            let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let f = spectral_factorization(&a).unwrap();
            let ac = to_complex(&a);
            let lam_mat = CMatrix::from_diagonal(&f.eigenvalues);
            let resid = (&ac * &f.eigenvectors - &f.eigenvectors * lam_mat).norm();
            assert!(
                resid <= 1e-10 * a.norm() * f.eigenvectors.norm().max(1.0),
                "residual {resid}"
            );
        }
    }

    #[test]
    fn conjugate_pairs_are_adjacent() {
        // Companion-style matrix with complex spectrum.
        let a = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 0.0, 0.0, //
            -2.0, -1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -5.0, -2.0,
        ]);
        let f = spectral_factorization(&a).unwrap();
        for k in (0..4).step_by(2) {
            let x = f.eigenvalues[k];
            let y = f.eigenvalues[k + 1];
            assert_relative_eq!(x.re, y.re, epsilon = 1e-10);
            assert_relative_eq!(x.im, -y.im, epsilon = 1e-10);
            assert!(x.im <= y.im);
        }
    }

    #[test]
    fn cached_form_reconstructs_the_matrix() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let a = DMatrix::from_fn(7, 7, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let f = SchurForm::new(&a).unwrap();
        let back = f.q() * f.t() * f.q().adjoint();
        assert!((back - to_complex(&a)).norm() <= 1e-12 * a.norm().max(1.0));
        for j in 0..7 {
            for i in (j + 1)..7 {
                assert!(f.t()[(i, j)].norm() <= 1e-13 * a.norm());
            }
        }
    }

    #[test]
    fn transposed_form_factors_the_transpose() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        let a = DMatrix::from_fn(6, 6, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let ft = SchurForm::new(&a).unwrap().transpose_form();
        let back = ft.q() * ft.t() * ft.q().adjoint();
        assert!((back - to_complex(&a.transpose())).norm() <= 1e-12 * a.norm().max(1.0));
        let unit = (ft.q().adjoint() * ft.q() - CMatrix::identity(6, 6)).norm();
        assert!(unit <= 1e-12);
        for j in 0..6 {
            for i in (j + 1)..6 {
                assert!(ft.t()[(i, j)].norm() <= 1e-13 * a.norm());
            }
        }
    }

    #[test]
    fn shifted_solve_matches_a_dense_solve() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let a = DMatrix::from_fn(8, 8, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let f = SchurForm::new(&a).unwrap();
        let rhs = CMatrix::from_fn(8, 2, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let sigma = Complex64::new(0.9, 1.3);
        let x = f.shifted_solve(sigma, &rhs).unwrap();
        let shifted = CMatrix::identity(8, 8) * sigma - to_complex(&a);
        let resid = (&shifted * &x - &rhs).norm();
        assert!(resid <= 1e-10 * rhs.norm().max(x.norm()), "residual {resid}");
    }

    #[test]
    fn shifts_on_the_spectrum_are_rejected() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let f = SchurForm::new(&a).unwrap();
        let rhs = CMatrix::identity(2, 2);
        assert!(matches!(
            f.shifted_solve(Complex64::new(-1.0, 0.0), &rhs),
            Err(Error::SingularShift)
        ));
    }
}
