//! State-space model types, transfer-function evaluation, pole-residue
//! forms, augmented input/output maps, and error systems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::matfun::{
    self, check_finite, complex_identity, freq_log_gain, freq_log_gain_scalar, to_complex, CMatrix,
};
use crate::{Error, Result};

/// Real dense state-space triple (A, B, C) with A n×n, B n×m, C p×n.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    stability_checked: bool,
}

impl StateSpaceModel {
    /// State map A.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Input map B.
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Output map C.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Number of states.
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Number of inputs.
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// Number of outputs.
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Whether stability was verified at construction.
    pub fn stability_checked(&self) -> bool {
        self.stability_checked
    }
}

/// Horizon restriction: a frequency band or a time window, both with
/// strictly ordered nonnegative edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitSpec {
    /// Band [ω₁, ω₂] on the positive frequency axis; the symmetric negative
    /// mirror is implicit in all norms and gramians.
    FrequencyBand { omega_lo: f64, omega_hi: f64 },
    /// Window [τ₁, τ₂] on the time axis.
    TimeWindow { t_lo: f64, t_hi: f64 },
}

impl LimitSpec {
    /// Validated frequency band with 0 ≤ ω₁ < ω₂.
    pub fn frequency_band(omega_lo: f64, omega_hi: f64) -> Result<Self> {
        matfun::check_band(omega_lo, omega_hi)?;
        Ok(LimitSpec::FrequencyBand { omega_lo, omega_hi })
    }

    /// Validated time window with 0 ≤ τ₁ < τ₂.
    pub fn time_window(t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(t_lo.is_finite() && t_hi.is_finite()) {
            return Err(Error::NonFinite("time window"));
        }
        if t_lo < 0.0 || t_hi <= t_lo {
            return Err(Error::InvalidLimit("time window needs 0 ≤ τ₁ < τ₂"));
        }
        Ok(LimitSpec::TimeWindow { t_lo, t_hi })
    }

    /// True for the frequency-band variant.
    pub fn is_frequency(&self) -> bool {
        matches!(self, LimitSpec::FrequencyBand { .. })
    }
}

/// Simple-pole decomposition G(s) = Σ lᵢ rᵢᵀ / (s − λᵢ).
#[derive(Debug, Clone)]
pub struct PoleResidueForm {
    /// Poles, closed under conjugation, sorted by (real, |imag|, imag).
    pub poles: Vec<Complex64>,
    /// Left residue directions lᵢ (length p).
    pub left: Vec<DVector<Complex64>>,
    /// Right residue directions rᵢ (length m).
    pub right: Vec<DVector<Complex64>>,
}

impl PoleResidueForm {
    /// Number of terms.
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    /// True when the decomposition is empty.
    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Evaluates Σ lᵢ rᵢᵀ / (s − λᵢ).
    pub fn eval(&self, s: Complex64) -> CMatrix {
        let p = self.left[0].len();
        let m = self.right[0].len();
        let mut g = CMatrix::zeros(p, m);
        for i in 0..self.len() {
            let scale = (s - self.poles[i]).inv();
            for row in 0..p {
                for col in 0..m {
                    g[(row, col)] += self.left[i][row] * self.right[i][col] * scale;
                }
            }
        }
        g
    }
}

/// Input/output maps augmented with their horizon-weighted companions.
///
/// Frequency case: `b_aug` = [B, F·B] and `c_aug` = [C; C·F] with F the
/// band-limited log gain of A. Time case: `b_aug` = [e^{Aτ₁}B, −e^{Aτ₂}B]
/// and `c_aug` = [C e^{Aτ₁}; −C e^{Aτ₂}].
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedIO {
    /// n×2m augmented input map.
    pub b_aug: DMatrix<f64>,
    /// 2p×n augmented output map.
    pub c_aug: DMatrix<f64>,
}

/// Validates a state-space triple, optionally verifying stability.
pub fn make_model(
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    require_stable: bool,
) -> Result<StateSpaceModel> {
    check_finite(&a, "state map")?;
    check_finite(&b, "input map")?;
    check_finite(&c, "output map")?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch("state map must be square"));
    }
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch("input map rows must match states"));
    }
    if c.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch("output map columns must match states"));
    }
    if require_stable {
        let lam = matfun::eigenvalues(&a)?;
        if lam.iter().any(|z| z.re >= 0.0) {
            return Err(Error::UnstableMatrix);
        }
    }
    Ok(StateSpaceModel {
        a,
        b,
        c,
        stability_checked: require_stable,
    })
}

/// Wraps a triple whose stability the caller has already verified.
pub(crate) fn trusted_stable_model(
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
) -> StateSpaceModel {
    StateSpaceModel {
        a,
        b,
        c,
        stability_checked: true,
    }
}

/// Random stable model with states shifted to spectral abscissa −0.5,
/// deterministic in the seed.
pub fn random_stable_model(n: usize, m: usize, p: usize, seed: u64) -> StateSpaceModel {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let abscissa = matfun::eigenvalues(&raw)
        .expect("eigenvalues of a finite random matrix")
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let a = raw - DMatrix::identity(n, n) * (abscissa + 0.5);
    let b = DMatrix::from_fn(n, m, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let c = DMatrix::from_fn(p, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    StateSpaceModel {
        a,
        b,
        c,
        stability_checked: true,
    }
}

/// Evaluates the transfer function C(sI − A)⁻¹B by a linear solve.
pub fn eval_transfer(model: &StateSpaceModel, s: Complex64) -> Result<CMatrix> {
    let n = model.order();
    let shifted = complex_identity(n) * s - to_complex(model.a());
    let x = solve_shifted(&shifted, &to_complex(model.b()))?;
    Ok(to_complex(model.c()) * x)
}

/// Solves (sI − A) X = RHS, rejecting numerically singular shifts.
pub(crate) fn solve_shifted(shifted: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    let lu = shifted.clone().full_piv_lu();
    let u = lu.u();
    let n = u.nrows();
    if n > 0 {
        let umax = (0..n).map(|i| u[(i, i)].norm()).fold(0.0, f64::max);
        let ulast = u[(n - 1, n - 1)].norm();
        if ulast <= 1e-12 * umax.max(f64::MIN_POSITIVE) {
            return Err(Error::SingularShift);
        }
    }
    lu.solve(rhs).ok_or(Error::SingularShift)
}

/// Schur-cached transfer evaluator for dense sweeps over many shifts.
///
/// Factorizes A = Q T Qᴴ once so that each sample costs one triangular
/// solve instead of a fresh LU of sI − A.
#[derive(Debug, Clone)]
pub struct TransferSampler {
    t: CMatrix,
    cq: CMatrix,
    qhb: CMatrix,
}

impl TransferSampler {
    /// Factorizes the state map of a model for repeated evaluation.
    pub fn new(model: &StateSpaceModel) -> Result<TransferSampler> {
        check_finite(model.a(), "transfer sampler state map")?;
        let (q, t) = matfun::complex_schur(&to_complex(model.a()))?;
        let cq = to_complex(model.c()) * &q;
        let qhb = q.adjoint() * to_complex(model.b());
        Ok(TransferSampler { t, cq, qhb })
    }

    /// Evaluates C(sI − A)⁻¹B through the cached factorization.
    pub fn eval(&self, s: Complex64) -> Result<CMatrix> {
        let x = matfun::shifted_triangular_solve(&self.t, s, &self.qhb)?;
        Ok(&self.cq * x)
    }
}

/// Pole-residue decomposition of a model with simple poles.
///
/// With A = R Λ R⁻¹, the right directions are the rows of R⁻¹B and the left
/// directions the columns of CR, so that G(s) = Σ lᵢ rᵢᵀ/(s − λᵢ).
pub fn pole_residue(model: &StateSpaceModel) -> Result<PoleResidueForm> {
    let fac = matfun::spectral_factorization(model.a())?;
    let r = &fac.eigenvectors;
    let rb = r
        .clone()
        .full_piv_lu()
        .solve(&to_complex(model.b()))
        .ok_or(Error::RepeatedPoles)?;
    let cr = to_complex(model.c()) * r;
    let n = model.order();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        right.push(rb.row(i).transpose().into_owned());
        left.push(cr.column(i).into_owned());
    }
    Ok(PoleResidueForm {
        poles: fac.eigenvalues.iter().copied().collect(),
        left,
        right,
    })
}

/// Builds the horizon-augmented input/output maps of a model.
pub fn augmented_io(model: &StateSpaceModel, limit: &LimitSpec) -> Result<AugmentedIO> {
    let n = model.order();
    let m = model.inputs();
    let p = model.outputs();
    match *limit {
        LimitSpec::FrequencyBand { omega_lo, omega_hi } => {
            let f = freq_log_gain(model.a(), omega_lo, omega_hi)?;
            let mut b_aug = DMatrix::zeros(n, 2 * m);
            b_aug.view_mut((0, 0), (n, m)).copy_from(model.b());
            b_aug.view_mut((0, m), (n, m)).copy_from(&(&f * model.b()));
            let mut c_aug = DMatrix::zeros(2 * p, n);
            c_aug.view_mut((0, 0), (p, n)).copy_from(model.c());
            c_aug.view_mut((p, 0), (p, n)).copy_from(&(model.c() * &f));
            Ok(AugmentedIO { b_aug, c_aug })
        }
        LimitSpec::TimeWindow { t_lo, t_hi } => {
            let e_lo = window_edge(model.a(), t_lo)?;
            let e_hi = window_edge(model.a(), t_hi)?;
            let b_lo = match &e_lo {
                Some(e) => e * model.b(),
                None => model.b().clone(),
            };
            let b_hi = match &e_hi {
                Some(e) => e * model.b(),
                None => model.b().clone(),
            };
            let c_lo = match &e_lo {
                Some(e) => model.c() * e,
                None => model.c().clone(),
            };
            let c_hi = match &e_hi {
                Some(e) => model.c() * e,
                None => model.c().clone(),
            };
            let mut b_aug = DMatrix::zeros(n, 2 * m);
            b_aug.view_mut((0, 0), (n, m)).copy_from(&b_lo);
            b_aug.view_mut((0, m), (n, m)).copy_from(&(-b_hi));
            let mut c_aug = DMatrix::zeros(2 * p, n);
            c_aug.view_mut((0, 0), (p, n)).copy_from(&c_lo);
            c_aug.view_mut((p, 0), (p, n)).copy_from(&(-c_hi));
            Ok(AugmentedIO { b_aug, c_aug })
        }
    }
}

/// e^{At} for a window edge, with None standing for the exact identity at
/// t = 0 so the original maps are copied bitwise.
fn window_edge(a: &DMatrix<f64>, t: f64) -> Result<Option<DMatrix<f64>>> {
    if t == 0.0 {
        Ok(None)
    } else {
        Ok(Some(matfun::matrix_exponential(a, t)?))
    }
}

/// Block-diagonal error realization of model minus reduced model.
pub fn error_system(model: &StateSpaceModel, rom: &StateSpaceModel) -> Result<StateSpaceModel> {
    if model.inputs() != rom.inputs() || model.outputs() != rom.outputs() {
        return Err(Error::DimensionMismatch(
            "error system needs matching input/output counts",
        ));
    }
    let n = model.order();
    let r = rom.order();
    let mut a = DMatrix::zeros(n + r, n + r);
    a.view_mut((0, 0), (n, n)).copy_from(model.a());
    a.view_mut((n, n), (r, r)).copy_from(rom.a());
    let mut b = DMatrix::zeros(n + r, model.inputs());
    b.view_mut((0, 0), (n, model.inputs())).copy_from(model.b());
    b.view_mut((n, 0), (r, model.inputs())).copy_from(rom.b());
    let mut c = DMatrix::zeros(model.outputs(), n + r);
    c.view_mut((0, 0), (model.outputs(), n)).copy_from(model.c());
    c.view_mut((0, n), (model.outputs(), r))
        .copy_from(&(-rom.c()));
    Ok(StateSpaceModel {
        a,
        b,
        c,
        stability_checked: model.stability_checked && rom.stability_checked,
    })
}

/// Evaluates the horizon surrogate transfer function and its derivative.
///
/// Frequency case: T(s) = Σ F[λᵢ]·lᵢrᵢᵀ/(s − λᵢ) + G(s)·F[−s], where F is
/// the scalar band weight. Time case over [τ₁, τ₂]:
/// T(s) = e^{−sτ₁}C(sI−A)⁻¹e^{Aτ₁}B − e^{−sτ₂}C(sI−A)⁻¹e^{Aτ₂}B evaluated
/// through the pole-residue form. Derivatives are analytic.
pub fn surrogate_eval(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    s: Complex64,
) -> Result<(CMatrix, CMatrix)> {
    let pr = pole_residue(model)?;
    surrogate_eval_pr(&pr, limit, s)
}

/// Same as [`surrogate_eval`], reusing a precomputed pole-residue form.
pub fn surrogate_eval_pr(
    pr: &PoleResidueForm,
    limit: &LimitSpec,
    s: Complex64,
) -> Result<(CMatrix, CMatrix)> {
    for &lam in &pr.poles {
        if (s - lam).norm() <= 1e-10 * (1.0 + lam.norm()) {
            return Err(Error::SingularShift);
        }
    }
    let p = pr.left[0].len();
    let m = pr.right[0].len();
    let mut value = CMatrix::zeros(p, m);
    let mut deriv = CMatrix::zeros(p, m);
    match *limit {
        LimitSpec::FrequencyBand { omega_lo, omega_hi } => {
            let weight_s = freq_log_gain_scalar(-s, omega_lo, omega_hi);
            // d/ds F[−s] = −((ω₂/π)/(s² + ω₂²) − (ω₁/π)/(s² + ω₁²))
            let pi = std::f64::consts::PI;
            let s2 = s * s;
            let mut dweight = Complex64::new(0.0, 0.0);
            if omega_hi > 0.0 {
                dweight -= Complex64::new(omega_hi / pi, 0.0) / (s2 + omega_hi * omega_hi);
            }
            if omega_lo > 0.0 {
                dweight += Complex64::new(omega_lo / pi, 0.0) / (s2 + omega_lo * omega_lo);
            }
            for i in 0..pr.len() {
                let wi = freq_log_gain_scalar(pr.poles[i], omega_lo, omega_hi);
                let res = (s - pr.poles[i]).inv();
                let res2 = res * res;
                for row in 0..p {
                    for col in 0..m {
                        let lr = pr.left[i][row] * pr.right[i][col];
                        value[(row, col)] += lr * res * (wi + weight_s);
                        deriv[(row, col)] += lr * (-res2 * (wi + weight_s) + res * dweight);
                    }
                }
            }
        }
        LimitSpec::TimeWindow { t_lo, t_hi } => {
            for (t, sign) in [(t_lo, 1.0), (t_hi, -1.0)] {
                for i in 0..pr.len() {
                    let shift = ((pr.poles[i] - s) * t).exp();
                    let res = (s - pr.poles[i]).inv();
                    let res2 = res * res;
                    for row in 0..p {
                        for col in 0..m {
                            let lr = pr.left[i][row] * pr.right[i][col] * shift;
                            value[(row, col)] += sign * lr * res;
                            deriv[(row, col)] +=
                                sign * lr * (-Complex64::new(t, 0.0) * res - res2);
                        }
                    }
                }
            }
        }
    }
    Ok((value, deriv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn siso(a: f64) -> StateSpaceModel {
        make_model(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            true,
        )
        .unwrap()
    }

    #[test]
    fn make_model_validates_stability() {
        assert!(matches!(
            make_model(
                DMatrix::from_element(1, 1, 0.1),
                DMatrix::from_element(1, 1, 1.0),
                DMatrix::from_element(1, 1, 1.0),
                true,
            ),
            Err(Error::UnstableMatrix)
        ));
    }

    #[test]
    fn transfer_scalar_values() {
        let model = siso(-1.0);
        let g0 = eval_transfer(&model, Complex64::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(g0[(0, 0)].re, 1.0, max_relative = 1e-14);
        let gj = eval_transfer(&model, Complex64::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(gj[(0, 0)].re, 0.5, max_relative = 1e-14);
        assert_relative_eq!(gj[(0, 0)].im, -0.5, max_relative = 1e-14);
    }

    #[test]
    fn transfer_at_pole_fails() {
        let model = siso(-1.0);
        assert!(matches!(
            eval_transfer(&model, Complex64::new(-1.0, 0.0)),
            Err(Error::SingularShift)
        ));
    }

    #[test]
    fn pole_residue_scalar_and_diagonal() {
        let pr = pole_residue(&siso(-1.0)).unwrap();
        assert_relative_eq!(pr.poles[0].re, -1.0, max_relative = 1e-14);
        let prod = pr.left[0][0] * pr.right[0][0];
        assert_relative_eq!(prod.re, 1.0, max_relative = 1e-12);

        let model = make_model(
            DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0])),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            true,
        )
        .unwrap();
        let pr = pole_residue(&model).unwrap();
        assert_relative_eq!(pr.poles[0].re, -2.0, max_relative = 1e-14);
        assert_relative_eq!(pr.poles[1].re, -1.0, max_relative = 1e-14);
        for i in 0..2 {
            let prod = pr.left[i][0] * pr.right[i][0];
            assert_relative_eq!(prod.re, 1.0, max_relative = 1e-10);
            assert!(prod.im.abs() < 1e-12);
        }
    }

    #[test]
    fn sampler_matches_direct_transfer_evaluation() {
        let model = random_stable_model(9, 2, 3, 19);
        let sampler = TransferSampler::new(&model).unwrap();
        for k in 0..6 {
            let s = Complex64::new(0.1 * k as f64, 1.5 * k as f64 - 2.0);
            let g = eval_transfer(&model, s).unwrap();
            let gs = sampler.eval(s).unwrap();
            assert!((g.clone() - gs).norm() <= 1e-10 * g.norm().max(1.0));
        }
    }

    #[test]
    fn sampler_rejects_eigenvalue_shifts() {
        let sampler = TransferSampler::new(&siso(-1.0)).unwrap();
        assert!(matches!(
            sampler.eval(Complex64::new(-1.0, 0.0)),
            Err(Error::SingularShift)
        ));
    }

    #[test]
    fn pole_residue_reconstructs_transfer() {
        let model = random_stable_model(8, 2, 2, 42);
        let pr = pole_residue(&model).unwrap();
        for k in 0..5 {
            let s = Complex64::new(0.3 + k as f64, 0.7 * k as f64);
            let g = eval_transfer(&model, s).unwrap();
            let gr = pr.eval(s);
            assert!((g.clone() - gr).norm() <= 1e-8 * g.norm());
        }
    }

    #[test]
    fn augmented_first_block_is_b() {
        let model = random_stable_model(5, 2, 1, 1);
        let limit = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let aug = augmented_io(&model, &limit).unwrap();
        assert_eq!(aug.b_aug.view((0, 0), (5, 2)), model.b().view((0, 0), (5, 2)));
        assert_eq!(aug.c_aug.view((0, 0), (1, 5)), model.c().view((0, 0), (1, 5)));

        let window = LimitSpec::time_window(0.0, 1.0).unwrap();
        let aug = augmented_io(&model, &window).unwrap();
        assert_eq!(aug.b_aug.view((0, 0), (5, 2)), model.b().view((0, 0), (5, 2)));
    }

    #[test]
    fn scalar_augmented_weight() {
        let model = siso(-1.0);
        let limit = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let aug = augmented_io(&model, &limit).unwrap();
        assert_relative_eq!(aug.b_aug[(0, 1)], 0.25, max_relative = 1e-12);
    }

    #[test]
    fn error_system_of_equal_models_vanishes() {
        let model = random_stable_model(4, 1, 1, 3);
        let err = error_system(&model, &model).unwrap();
        for k in 0..4 {
            let s = Complex64::new(0.5, 0.3 * k as f64);
            let e = eval_transfer(&err, s).unwrap();
            assert!(e.norm() < 1e-12);
        }
    }

    #[test]
    fn error_system_scalar_dc_gain() {
        let e = error_system(&siso(-1.0), &siso(-2.0)).unwrap();
        let g = eval_transfer(&e, Complex64::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(g[(0, 0)].re, 0.5, max_relative = 1e-13);
    }

    #[test]
    fn time_surrogate_vanishes_for_degenerate_window() {
        // As the window shrinks toward [0, 0] the surrogate goes to zero.
        let model = siso(-1.0);
        let limit = LimitSpec::time_window(0.0, 1e-9).unwrap();
        let (t, _) = surrogate_eval(&model, &limit, Complex64::new(1.0, 0.5)).unwrap();
        assert!(t.norm() < 1e-8);
    }

    #[test]
    fn frequency_surrogate_scalar_weight_term() {
        // For (−1, 1, 1) with band [0, 1] the weighted pole term is
        // 0.25/(s+1); check at s = 0 after removing the tail G(s)F[−s].
        let model = siso(-1.0);
        let limit = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let s = Complex64::new(2.0, 0.0);
        let (t, _) = surrogate_eval(&model, &limit, s).unwrap();
        let g = eval_transfer(&model, s).unwrap();
        let tail = g[(0, 0)] * freq_log_gain_scalar(-s, 0.0, 1.0);
        let weighted = t[(0, 0)] - tail;
        assert_relative_eq!(weighted.re, 0.25 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn surrogate_derivative_matches_finite_difference() {
        let model = random_stable_model(6, 2, 2, 7);
        let s = Complex64::new(1.0, 0.5);
        let h = 1e-5;
        for limit in [
            LimitSpec::frequency_band(0.2, 2.0).unwrap(),
            LimitSpec::time_window(0.0, 1.0).unwrap(),
            LimitSpec::time_window(0.4, 1.3).unwrap(),
        ] {
            let (_, d) = surrogate_eval(&model, &limit, s).unwrap();
            let (tp, _) = surrogate_eval(&model, &limit, s + Complex64::new(h, 0.0)).unwrap();
            let (tm, _) = surrogate_eval(&model, &limit, s - Complex64::new(h, 0.0)).unwrap();
            let fd = (tp - tm) / Complex64::new(2.0 * h, 0.0);
            assert!((d.clone() - fd).norm() <= 1e-6 * d.norm().max(1e-6));
        }
    }
}
