//! Matrix logarithm, its Fréchet derivative, and the band-limited log gain.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{
    check_finite, complex_identity, complex_schur, imag_norm, real_part, CMatrix, SchurForm,
};
use crate::{Error, Result};

/// 8-point Gauss-Legendre nodes and weights on [0, 1], used for the Padé
/// (partial-fraction) approximant of log(I + X).
const GL8: [(f64, f64); 8] = [
    (0.019_855_071_751_231_87, 0.050_614_268_145_188_13),
    (0.101_666_761_293_186_63, 0.111_190_517_226_687_24),
    (0.237_233_795_041_835_51, 0.156_853_322_938_943_64),
    (0.408_282_678_752_175_10, 0.181_341_891_689_181_0),
    (0.591_717_321_247_824_90, 0.181_341_891_689_181_0),
    (0.762_766_204_958_164_49, 0.156_853_322_938_943_64),
    (0.898_333_238_706_813_37, 0.111_190_517_226_687_24),
    (0.980_144_928_248_768_13, 0.050_614_268_145_188_13),
];

/// Largest ‖T − I‖₁ accepted before another triangular square root is taken.
const LOG_PADE_THETA: f64 = 0.25;

/// Principal matrix logarithm of a complex matrix.
///
/// Uses inverse scaling and squaring: complex Schur form, repeated
/// triangular square roots until the spectrum clusters near 1, then the
/// partial-fraction Padé approximant of log(I + X). Rejects arguments with
/// an eigenvalue within 1e-8 of the closed negative real axis, where the
/// principal branch is untrustworthy.
pub fn logm(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("matrix logarithm needs a square matrix"));
    }
    let (q, t) = complex_schur(m)?;
    let log_t = logm_triangular(t)?;
    Ok(&q * log_t * q.adjoint())
}

/// Principal logarithm of an upper-triangular matrix: the square-root and
/// Padé stages of the logarithm after the Schur reduction is already done.
fn logm_triangular(mut t: CMatrix) -> Result<CMatrix> {
    for i in 0..t.nrows() {
        check_branch(t[(i, i)])?;
    }
    let mut squarings = 0u32;
    while one_norm_minus_identity(&t) > LOG_PADE_THETA && squarings < 60 {
        t = triangular_sqrt(&t);
        squarings += 1;
    }
    Ok(pade_log(&t) * Complex64::new(2f64.powi(squarings as i32), 0.0))
}

/// Fréchet derivative of the matrix logarithm at M in direction E.
///
/// Evaluates the top-right block of log([[M, E], [0, M]]), which equals the
/// derivative exactly up to the accuracy of the logarithm kernel.
pub fn logm_frechet(m: &CMatrix, e: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    if !m.is_square() || e.nrows() != n || e.ncols() != n {
        return Err(Error::DimensionMismatch(
            "Fréchet derivative needs square M and E of equal size",
        ));
    }
    let mut block = CMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(m);
    block.view_mut((0, n), (n, n)).copy_from(e);
    block.view_mut((n, n), (n, n)).copy_from(m);
    let log_block = logm(&block)?;
    Ok(log_block.view((0, n), (n, n)).into_owned())
}

/// Band-limited log gain of a stable matrix over the band [ω₁, ω₂]:
/// the difference of edge terms (j/2π)·log((jωI + A)(−jωI + A)⁻¹), with the
/// ω = 0 edge equal to zero.
///
/// The result is real for real stable A; the imaginary residual of the
/// complex computation must stay below 1e-10 of the result norm and is
/// discarded.
pub fn freq_log_gain(a: &DMatrix<f64>, omega_lo: f64, omega_hi: f64) -> Result<DMatrix<f64>> {
    check_finite(a, "band-limited log gain input")?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch("log gain needs a square matrix"));
    }
    freq_log_gain_with(&SchurForm::new(a)?, omega_lo, omega_hi)
}

/// [`freq_log_gain`] against a prefactored state map. Both edge terms come
/// out of the one factorization: (jωI + A)(−jωI + A)⁻¹ is triangular in the
/// Schur basis of A for every ω, so no edge needs its own reduction.
pub(crate) fn freq_log_gain_with(
    schur: &SchurForm,
    omega_lo: f64,
    omega_hi: f64,
) -> Result<DMatrix<f64>> {
    check_band(omega_lo, omega_hi)?;
    let n = schur.dim();
    if schur.t().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("band-limited log gain input"));
    }
    if (0..n).any(|i| schur.t()[(i, i)].re >= 0.0) {
        return Err(Error::UnstableMatrix);
    }
    let mut f_tri = CMatrix::zeros(n, n);
    if omega_hi > 0.0 {
        f_tri += edge_term_triangular(schur.t(), omega_hi)?;
    }
    if omega_lo > 0.0 {
        f_tri -= edge_term_triangular(schur.t(), omega_lo)?;
    }
    let f = schur.q() * f_tri * schur.q().adjoint();
    let resid = imag_norm(&f);
    let scale = real_part(&f).norm();
    if resid > 1e-10 * scale.max(1e-300) && resid > 1e-14 * n as f64 {
        return Err(Error::BranchCutProximity);
    }
    Ok(real_part(&f))
}

/// Scalar counterpart of [`freq_log_gain`], defined for any complex λ off
/// the imaginary band edges. For a real stable λ = −a it reduces to
/// (arctan(ω₂/a) − arctan(ω₁/a))/π.
pub fn freq_log_gain_scalar(lambda: Complex64, omega_lo: f64, omega_hi: f64) -> Complex64 {
    let j = Complex64::new(0.0, 1.0);
    // (j/2π)·[log((jω₂+λ)/(−jω₂+λ)) − log((jω₁+λ)/(−jω₁+λ))]
    let edge = |omega: f64| -> Complex64 {
        if omega == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            ((j * omega + lambda) / (-j * omega + lambda)).ln()
        }
    };
    j / Complex64::new(2.0 * std::f64::consts::PI, 0.0) * (edge(omega_hi) - edge(omega_lo))
}

pub(crate) fn check_band(omega_lo: f64, omega_hi: f64) -> Result<()> {
    if !(omega_lo.is_finite() && omega_hi.is_finite()) {
        return Err(Error::NonFinite("frequency band"));
    }
    if omega_lo < 0.0 || omega_hi <= omega_lo {
        return Err(Error::InvalidLimit("frequency band needs 0 ≤ ω₁ < ω₂"));
    }
    Ok(())
}

/// (j/2π)·log((T + jωI)(T − jωI)⁻¹) for one band edge, with T the already
/// triangular Schur factor of the state map.
fn edge_term_triangular(t: &CMatrix, omega: f64) -> Result<CMatrix> {
    let n = t.nrows();
    let jw = Complex64::new(0.0, omega);
    let minus = t - complex_identity(n) * jw;
    let inv = upper_triangular_inverse(&minus)?;
    let mobius = triangular_product(&(t + complex_identity(n) * jw), &inv);
    let log_x = logm_triangular(mobius)?;
    Ok(log_x * Complex64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI)))
}

/// Inverse of an upper-triangular matrix by back substitution, column by
/// column, touching only the upper triangle.
fn upper_triangular_inverse(u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    let pivot_floor = 1e-14
        * (0..n)
            .map(|i| u[(i, i)].norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
    if (0..n).any(|i| u[(i, i)].norm() <= pivot_floor) {
        return Err(Error::SingularShift);
    }
    let mut v = CMatrix::zeros(n, n);
    for j in 0..n {
        v[(j, j)] = Complex64::new(1.0, 0.0) / u[(j, j)];
        for i in (0..j).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in (i + 1)..=j {
                s += u[(i, k)] * v[(k, j)];
            }
            v[(i, j)] = -s / u[(i, i)];
        }
    }
    Ok(v)
}

/// Product of two upper-triangular matrices, again touching only the
/// nonzero triangle.
fn triangular_product(x: &CMatrix, y: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let mut z = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let mut s = Complex64::new(0.0, 0.0);
            for k in i..=j {
                s += x[(i, k)] * y[(k, j)];
            }
            z[(i, j)] = s;
        }
    }
    z
}

/// Distance of an eigenvalue to the closed negative real axis.
fn check_branch(lambda: Complex64) -> Result<()> {
    let dist = if lambda.re <= 0.0 {
        lambda.im.abs()
    } else {
        lambda.norm()
    };
    if dist <= 1e-8 * (1.0 + lambda.norm()) {
        return Err(Error::BranchCutProximity);
    }
    Ok(())
}

fn one_norm_minus_identity(t: &CMatrix) -> f64 {
    (0..t.ncols())
        .map(|j| {
            (0..t.nrows())
                .map(|i| {
                    let v = if i == j {
                        t[(i, j)] - Complex64::new(1.0, 0.0)
                    } else {
                        t[(i, j)]
                    };
                    v.norm()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Principal square root of an upper-triangular matrix.
fn triangular_sqrt(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..(n - d) {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Partial-fraction Padé approximant of log(I + X) with X = T − I.
fn pade_log(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let x = t - complex_identity(n);
    let mut acc = CMatrix::zeros(n, n);
    for &(node, weight) in &GL8 {
        let m = complex_identity(n) + &x * Complex64::new(node, 0.0);
        for i in 0..n {
            assert!(
                m[(i, i)].norm() > 0.25,
                "I + xX is nonsingular when the spectrum clusters near 1"
            );
        }
        // M Y = X, both upper triangular, solved in place on the triangle.
        let mut y = CMatrix::zeros(n, n);
        for j in 0..n {
            for i in (0..=j).rev() {
                let mut s = x[(i, j)];
                for k in (i + 1)..=j {
                    s -= m[(i, k)] * y[(k, j)];
                }
                y[(i, j)] = s / m[(i, i)];
            }
        }
        acc += y * Complex64::new(weight, 0.0);
    }
    acc
}
