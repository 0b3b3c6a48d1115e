//! Dense matrix-equation and matrix-function kernels.
//!
//! Everything downstream builds on this module: Bartels–Stewart solves of
//! Sylvester and Lyapunov equations, the scaling-and-squaring matrix
//! exponential, the inverse-scaling-and-squaring matrix logarithm with its
//! Fréchet derivative, the band-limited log gain of a stable matrix, and
//! spectral factorization with simple-pole checking.

mod expm;
mod logm;
mod schur;
mod sylvester;

pub use expm::matrix_exponential;
pub use logm::{freq_log_gain, freq_log_gain_scalar, logm, logm_frechet};
pub use schur::{eigenvalues, spectral_factorization, SchurForm, SpectralFactorization};
pub use sylvester::{solve_lyapunov, solve_sylvester, solve_sylvester_with};

pub(crate) use logm::{check_band, freq_log_gain_with};
pub(crate) use schur::{complex_schur, eigen_order, shifted_triangular_solve};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Complex dense matrix used by the internal kernels.
pub type CMatrix = DMatrix<Complex64>;

pub(crate) fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

pub(crate) fn real_part(a: &CMatrix) -> DMatrix<f64> {
    a.map(|z| z.re)
}

pub(crate) fn imag_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.im * z.im).sum::<f64>().sqrt()
}

pub(crate) fn complex_identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub(crate) fn check_finite(a: &DMatrix<f64>, what: &'static str) -> crate::Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite(what))
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use nalgebra::DMatrix;
    use rand::Rng;

    /// Random dense matrix with a spectrum shifted into the open left
    /// half-plane (spectral abscissa at −0.5).
    pub(crate) fn stable(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let shift = super::eigenvalues(&m)
            .unwrap()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        m - DMatrix::identity(n, n) * (shift + 0.5)
    }
}
