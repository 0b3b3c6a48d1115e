//! Limited controllability/observability gramians (full, cross, reduced),
//! limited H2 error norms by trace formula, and an independent quadrature
//! oracle for those norms.

use nalgebra::DMatrix;

use crate::lti::{self, LimitSpec, StateSpaceModel};
use crate::matfun::{self, solve_sylvester_with, SchurForm};
use crate::{Error, Result};

/// Gramians coupling a model to a reduced model over one horizon.
#[derive(Debug, Clone)]
pub struct GramianBundle {
    /// Cross controllability gramian, n×r, limited.
    pub p_cross: DMatrix<f64>,
    /// Cross observability gramian, n×r, limited.
    pub q_cross: DMatrix<f64>,
    /// Reduced controllability gramian, r×r, limited.
    pub p_rom: DMatrix<f64>,
    /// Reduced observability gramian, r×r, limited.
    pub q_rom: DMatrix<f64>,
    /// Unlimited cross observability gramian, for stationarity audits.
    pub q_cross_unlimited: Option<DMatrix<f64>>,
    /// Unlimited reduced observability gramian.
    pub q_rom_unlimited: Option<DMatrix<f64>>,
    /// Horizon the limited gramians refer to.
    pub limit: LimitSpec,
}

impl GramianBundle {
    /// Solves the coupled cross and reduced gramian equations for a
    /// model/reduced-model pair, optionally adding the unlimited
    /// observability gramians used by stationarity audits.
    pub fn assemble(
        model: &StateSpaceModel,
        rom: &StateSpaceModel,
        limit: &LimitSpec,
        with_unlimited: bool,
    ) -> Result<GramianBundle> {
        ModelHorizon::new(model, limit)?.bundle(rom, with_unlimited)
    }
}

/// Every reusable O(n³) artifact of one (model, horizon) pair: the Schur
/// factorizations of the state map and its transpose, the horizon-weighted
/// input/output maps, the horizon-augmented realization, and the full
/// limited gramians.
///
/// Iterative reductions and order sweeps over the same model build this
/// once; each later step then costs O(n²·r) instead of a fresh O(n³)
/// factorization and weight evaluation.
#[derive(Debug, Clone)]
pub struct ModelHorizon {
    model: StateSpaceModel,
    limit: LimitSpec,
    a_schur: SchurForm,
    at_schur: SchurForm,
    data: HorizonData,
    aug: lti::AugmentedIO,
    p_full: DMatrix<f64>,
    q_full: DMatrix<f64>,
}

impl ModelHorizon {
    /// Factorizes and weights a stable model over one horizon.
    pub fn new(model: &StateSpaceModel, limit: &LimitSpec) -> Result<ModelHorizon> {
        let a_schur = SchurForm::new(model.a())?;
        if a_schur.eigenvalues().iter().any(|z| z.re >= 0.0) {
            return Err(Error::UnstableMatrix);
        }
        let at_schur = a_schur.transpose_form();
        let (data, aug) = weighted_maps(model, &a_schur, limit)?;
        let p_full = symmetrized(solve_sylvester_with(
            &a_schur,
            &at_schur,
            &ctrl_rhs(&data, &data, limit),
        )?);
        let q_full = symmetrized(solve_sylvester_with(
            &at_schur,
            &a_schur,
            &obs_rhs(&data, &data, limit),
        )?);
        Ok(ModelHorizon {
            model: model.clone(),
            limit: *limit,
            a_schur,
            at_schur,
            data,
            aug,
            p_full,
            q_full,
        })
    }

    /// Model the cached artifacts belong to.
    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }

    /// Horizon the weights refer to.
    pub fn limit(&self) -> &LimitSpec {
        &self.limit
    }

    /// Full limited controllability and observability gramians.
    pub fn full_gramians(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.p_full, &self.q_full)
    }

    /// Cross and reduced gramians against one reduced model, optionally
    /// with the unlimited observability companions.
    pub fn bundle(&self, rom: &StateSpaceModel, with_unlimited: bool) -> Result<GramianBundle> {
        if self.model.inputs() != rom.inputs() || self.model.outputs() != rom.outputs() {
            return Err(Error::DimensionMismatch(
                "gramian bundle needs matching input/output counts",
            ));
        }
        let rom_schur = SchurForm::new(rom.a())?;
        if !rom.stability_checked() && rom_schur.eigenvalues().iter().any(|z| z.re >= 0.0) {
            return Err(Error::UnstableMatrix);
        }
        let rom_t_schur = rom_schur.transpose_form();
        let rom_data = HorizonData::build(rom, &self.limit)?;
        let p_cross = solve_sylvester_with(
            &self.a_schur,
            &rom_t_schur,
            &ctrl_rhs(&self.data, &rom_data, &self.limit),
        )?;
        let q_cross = solve_sylvester_with(
            &self.at_schur,
            &rom_schur,
            &obs_rhs(&self.data, &rom_data, &self.limit),
        )?;
        let p_rom = symmetrized(solve_sylvester_with(
            &rom_schur,
            &rom_t_schur,
            &ctrl_rhs(&rom_data, &rom_data, &self.limit),
        )?);
        let q_rom = symmetrized(solve_sylvester_with(
            &rom_t_schur,
            &rom_schur,
            &obs_rhs(&rom_data, &rom_data, &self.limit),
        )?);
        let (q_cross_unlimited, q_rom_unlimited) = if with_unlimited {
            let qc = solve_sylvester_with(
                &self.at_schur,
                &rom_schur,
                &(self.model.c().transpose() * rom.c()),
            )?;
            let qr = symmetrized(solve_sylvester_with(
                &rom_t_schur,
                &rom_schur,
                &(rom.c().transpose() * rom.c()),
            )?);
            (Some(qc), Some(qr))
        } else {
            (None, None)
        };
        Ok(GramianBundle {
            p_cross,
            q_cross,
            p_rom,
            q_rom,
            q_cross_unlimited,
            q_rom_unlimited,
            limit: self.limit,
        })
    }

    /// Limited H2 norm of the mismatch against one reduced model.
    pub fn limited_h2_error(&self, rom: &StateSpaceModel) -> Result<f64> {
        let bundle = self.bundle(rom, false)?;
        error_from_traces(&self.model, rom, &self.p_full, &self.q_full, &bundle)
    }

    pub(crate) fn augmented(&self) -> &lti::AugmentedIO {
        &self.aug
    }

    pub(crate) fn a_schur(&self) -> &SchurForm {
        &self.a_schur
    }

    pub(crate) fn at_schur(&self) -> &SchurForm {
        &self.at_schur
    }
}

/// Horizon-weighted maps and the augmented realization from one shared
/// weight evaluation, so the log gain or window exponentials are computed
/// once per model.
fn weighted_maps(
    model: &StateSpaceModel,
    a_schur: &SchurForm,
    limit: &LimitSpec,
) -> Result<(HorizonData, lti::AugmentedIO)> {
    let n = model.order();
    let m = model.inputs();
    let p = model.outputs();
    match *limit {
        LimitSpec::FrequencyBand { omega_lo, omega_hi } => {
            let f = matfun::freq_log_gain_with(a_schur, omega_lo, omega_hi)?;
            let fb = &f * model.b();
            let cf = model.c() * &f;
            let mut b_aug = DMatrix::zeros(n, 2 * m);
            b_aug.view_mut((0, 0), (n, m)).copy_from(model.b());
            b_aug.view_mut((0, m), (n, m)).copy_from(&fb);
            let mut c_aug = DMatrix::zeros(2 * p, n);
            c_aug.view_mut((0, 0), (p, n)).copy_from(model.c());
            c_aug.view_mut((p, 0), (p, n)).copy_from(&cf);
            let data = HorizonData {
                in0: model.b().clone(),
                in1: fb,
                out0: model.c().clone(),
                out1: cf,
            };
            Ok((data, lti::AugmentedIO { b_aug, c_aug }))
        }
        LimitSpec::TimeWindow { t_lo, t_hi } => {
            let edge = |t: f64| -> Result<Option<DMatrix<f64>>> {
                if t == 0.0 {
                    Ok(None)
                } else {
                    Ok(Some(matfun::matrix_exponential(model.a(), t)?))
                }
            };
            let e_lo = edge(t_lo)?;
            let e_hi = edge(t_hi)?;
            let apply_b = |e: &Option<DMatrix<f64>>| match e {
                Some(e) => e * model.b(),
                None => model.b().clone(),
            };
            let apply_c = |e: &Option<DMatrix<f64>>| match e {
                Some(e) => model.c() * e,
                None => model.c().clone(),
            };
            let (b_lo, b_hi) = (apply_b(&e_lo), apply_b(&e_hi));
            let (c_lo, c_hi) = (apply_c(&e_lo), apply_c(&e_hi));
            let mut b_aug = DMatrix::zeros(n, 2 * m);
            b_aug.view_mut((0, 0), (n, m)).copy_from(&b_lo);
            b_aug.view_mut((0, m), (n, m)).copy_from(&(-&b_hi));
            let mut c_aug = DMatrix::zeros(2 * p, n);
            c_aug.view_mut((0, 0), (p, n)).copy_from(&c_lo);
            c_aug.view_mut((p, 0), (p, n)).copy_from(&(-&c_hi));
            let data = HorizonData {
                in0: b_lo,
                in1: b_hi,
                out0: c_lo,
                out1: c_hi,
            };
            Ok((data, lti::AugmentedIO { b_aug, c_aug }))
        }
    }
}

/// Horizon-weighted input/output map pairs from which every limited
/// gramian right-hand side is assembled.
struct HorizonData {
    in0: DMatrix<f64>,
    in1: DMatrix<f64>,
    out0: DMatrix<f64>,
    out1: DMatrix<f64>,
}

impl HorizonData {
    fn build(model: &StateSpaceModel, limit: &LimitSpec) -> Result<HorizonData> {
        match *limit {
            LimitSpec::FrequencyBand { omega_lo, omega_hi } => {
                let f = matfun::freq_log_gain(model.a(), omega_lo, omega_hi)?;
                Ok(HorizonData {
                    in0: model.b().clone(),
                    in1: &f * model.b(),
                    out0: model.c().clone(),
                    out1: model.c() * &f,
                })
            }
            LimitSpec::TimeWindow { t_lo, t_hi } => {
                let e_lo = matfun::matrix_exponential(model.a(), t_lo)?;
                let e_hi = matfun::matrix_exponential(model.a(), t_hi)?;
                Ok(HorizonData {
                    in0: &e_lo * model.b(),
                    in1: &e_hi * model.b(),
                    out0: model.c() * &e_lo,
                    out1: model.c() * &e_hi,
                })
            }
        }
    }
}

/// Controllability right-hand side coupling two weighted input pairs.
fn ctrl_rhs(x: &HorizonData, y: &HorizonData, limit: &LimitSpec) -> DMatrix<f64> {
    if limit.is_frequency() {
        &x.in0 * y.in1.transpose() + &x.in1 * y.in0.transpose()
    } else {
        &x.in0 * y.in0.transpose() - &x.in1 * y.in1.transpose()
    }
}

/// Observability right-hand side coupling two weighted output pairs.
fn obs_rhs(x: &HorizonData, y: &HorizonData, limit: &LimitSpec) -> DMatrix<f64> {
    if limit.is_frequency() {
        x.out0.transpose() * &y.out1 + x.out1.transpose() * &y.out0
    } else {
        x.out0.transpose() * &y.out0 - x.out1.transpose() * &y.out1
    }
}

fn symmetrized(x: DMatrix<f64>) -> DMatrix<f64> {
    let xt = x.transpose();
    (x + xt) * 0.5
}

fn ensure_stable(model: &StateSpaceModel) -> Result<()> {
    if model.stability_checked() {
        return Ok(());
    }
    let lam = matfun::eigenvalues(model.a())?;
    if lam.iter().any(|z| z.re >= 0.0) {
        return Err(Error::UnstableMatrix);
    }
    Ok(())
}

/// Limited controllability and observability gramians of one model.
pub fn limited_gramians(
    model: &StateSpaceModel,
    limit: &LimitSpec,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let horizon = ModelHorizon::new(model, limit)?;
    Ok((horizon.p_full, horizon.q_full))
}

/// Limited cross gramians coupling a model and a reduced model.
pub fn cross_gramians(
    model: &StateSpaceModel,
    rom: &StateSpaceModel,
    limit: &LimitSpec,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let bundle = GramianBundle::assemble(model, rom, limit, false)?;
    Ok((bundle.p_cross, bundle.q_cross))
}

/// Limited gramians of the reduced model alone.
pub fn rom_gramians(
    rom: &StateSpaceModel,
    limit: &LimitSpec,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    limited_gramians(rom, limit)
}

/// Unlimited cross controllability/observability gramians of a pair.
pub fn unlimited_cross_gramians(
    model: &StateSpaceModel,
    rom: &StateSpaceModel,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    ensure_stable(model)?;
    ensure_stable(rom)?;
    let p = matfun::solve_sylvester(
        model.a(),
        &rom.a().transpose(),
        &(model.b() * rom.b().transpose()),
    )?;
    let q = matfun::solve_sylvester(
        &model.a().transpose(),
        rom.a(),
        &(model.c().transpose() * rom.c()),
    )?;
    Ok((p, q))
}

/// Lifts reduced gramians back to full dimension through projection bases.
pub fn approx_gramians(
    p_rom: &DMatrix<f64>,
    q_rom: &DMatrix<f64>,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if v.ncols() != p_rom.nrows() || w.ncols() != q_rom.nrows() {
        return Err(Error::DimensionMismatch(
            "basis columns must match reduced gramian dimension",
        ));
    }
    if !p_rom.is_square() || !q_rom.is_square() {
        return Err(Error::DimensionMismatch("reduced gramians must be square"));
    }
    Ok((v * p_rom * v.transpose(), w * q_rom * w.transpose()))
}

/// Limited H2 norm of the mismatch between a model and a reduced model.
///
/// Evaluates both the controllability-side trace formula
/// tr(CPCᵀ − 2CP̄Ĉᵀ + ĈP̂Ĉᵀ) and its observability-side dual, checks their
/// agreement, clamps the tiny negative values roundoff can produce, and
/// returns the square root.
pub fn limited_h2_error(
    model: &StateSpaceModel,
    rom: &StateSpaceModel,
    limit: &LimitSpec,
) -> Result<f64> {
    ModelHorizon::new(model, limit)?.limited_h2_error(rom)
}

/// The trace formulas behind every limited H2 error evaluation: both the
/// controllability and observability forms, their agreement check, and the
/// clamp of the tiny negative values roundoff can produce.
fn error_from_traces(
    model: &StateSpaceModel,
    rom: &StateSpaceModel,
    p_full: &DMatrix<f64>,
    q_full: &DMatrix<f64>,
    bundle: &GramianBundle,
) -> Result<f64> {
    let p_terms = [
        (model.c() * p_full * model.c().transpose()).trace(),
        -2.0 * (model.c() * &bundle.p_cross * rom.c().transpose()).trace(),
        (rom.c() * &bundle.p_rom * rom.c().transpose()).trace(),
    ];
    let q_terms = [
        (model.b().transpose() * q_full * model.b()).trace(),
        -2.0 * (model.b().transpose() * &bundle.q_cross * rom.b()).trace(),
        (rom.b().transpose() * &bundle.q_rom * rom.b()).trace(),
    ];
    let p_form: f64 = p_terms.iter().sum();
    let q_form: f64 = q_terms.iter().sum();
    let scale: f64 = p_terms.iter().chain(&q_terms).map(|t| t.abs()).sum();
    let agreement_floor = 1e3 * f64::EPSILON * scale;
    assert!(
        (p_form - q_form).abs() <= 1e-8 * p_form.abs().max(q_form.abs()) + agreement_floor,
        "dual trace formulas disagree: {p_form} vs {q_form}"
    );
    if p_form < -1e-10 * scale.max(1.0) {
        return Err(Error::NegativeTrace);
    }
    Ok(p_form.max(0.0).sqrt())
}

/// Limited H2 error computed by direct quadrature of the error system,
/// independent of the gramian trace formulas.
///
/// `resolution` counts quadrature panels; the value is accepted only if
/// doubling the panel count leaves it unchanged to eight digits.
pub fn limited_h2_error_oracle(
    model: &StateSpaceModel,
    rom: &StateSpaceModel,
    limit: &LimitSpec,
    resolution: usize,
) -> Result<f64> {
    let err = lti::error_system(model, rom)?;
    let coarse = quadrature_norm(&err, limit, resolution.max(1))?;
    let fine = quadrature_norm(&err, limit, 2 * resolution.max(1))?;
    if (fine - coarse).abs() > 1e-8 * fine.max(1e-12) {
        return Err(Error::ResolutionTooCoarse);
    }
    Ok(fine)
}

fn quadrature_norm(err: &StateSpaceModel, limit: &LimitSpec, panels: usize) -> Result<f64> {
    let (nodes, weights) = gauss_legendre_16();
    let (lo, hi, freq) = match *limit {
        LimitSpec::FrequencyBand { omega_lo, omega_hi } => (omega_lo, omega_hi, true),
        LimitSpec::TimeWindow { t_lo, t_hi } => (t_lo, t_hi, false),
    };
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let left = lo + k as f64 * width;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let point = left + 0.5 * width * (x + 1.0);
            let integrand = if freq {
                let g = lti::eval_transfer(err, num_complex::Complex64::new(0.0, point))?;
                g.norm_squared()
            } else {
                let state = matfun::matrix_exponential(err.a(), point)? * err.b();
                (err.c() * state).norm_squared()
            };
            total += w * 0.5 * width * integrand;
        }
    }
    if freq {
        total /= std::f64::consts::PI;
    }
    Ok(total.max(0.0).sqrt())
}

/// 16-point Gauss-Legendre rule on [−1, 1], from the Jacobi matrix
/// eigendecomposition.
fn gauss_legendre_16() -> (Vec<f64>, Vec<f64>) {
    let order = 16;
    let mut jacobi = DMatrix::zeros(order, order);
    for k in 1..order {
        let kf = k as f64;
        let beta = kf / (4.0 * kf * kf - 1.0).sqrt();
        jacobi[(k - 1, k)] = beta;
        jacobi[(k, k - 1)] = beta;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let first = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * first * first)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{make_model, random_stable_model};
    use approx::assert_relative_eq;

    fn siso(a: f64, b: f64, c: f64) -> StateSpaceModel {
        make_model(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            true,
        )
        .unwrap()
    }

    #[test]
    fn scalar_band_gramian_closed_form() {
        let model = siso(-1.0, 1.0, 1.0);
        let limit = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let (p, q) = limited_gramians(&model, &limit).unwrap();
        assert_relative_eq!(p[(0, 0)], 0.25, max_relative = 1e-12);
        assert_relative_eq!(q[(0, 0)], 0.25, max_relative = 1e-12);
    }

    #[test]
    fn scalar_window_gramian_closed_form() {
        let model = siso(-1.0, 1.0, 1.0);
        let limit = LimitSpec::time_window(0.0, 1.0).unwrap();
        let (p, _) = limited_gramians(&model, &limit).unwrap();
        assert_relative_eq!(p[(0, 0)], (1.0 - (-2.0f64).exp()) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(p[(0, 0)], 0.43233235838169365, max_relative = 1e-10);
    }

    #[test]
    fn large_horizons_recover_unlimited_gramian() {
        let model = siso(-1.0, 1.0, 1.0);
        let band = LimitSpec::frequency_band(0.0, 1e6).unwrap();
        let (p, _) = limited_gramians(&model, &band).unwrap();
        assert_relative_eq!(p[(0, 0)], 0.5, max_relative = 1e-3);
        let window = LimitSpec::time_window(0.0, 1e3).unwrap();
        let (p, _) = limited_gramians(&model, &window).unwrap();
        assert_relative_eq!(p[(0, 0)], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn cross_of_identical_models_matches_full() {
        let model = random_stable_model(6, 2, 2, 11);
        for limit in [
            LimitSpec::frequency_band(0.2, 1.7).unwrap(),
            LimitSpec::time_window(0.1, 2.0).unwrap(),
        ] {
            let (p, q) = limited_gramians(&model, &limit).unwrap();
            let (pc, qc) = cross_gramians(&model, &model, &limit).unwrap();
            assert!((p.clone() - pc).norm() <= 1e-10 * p.norm());
            assert!((q.clone() - qc).norm() <= 1e-10 * q.norm());
        }
    }

    #[test]
    fn nested_horizons_give_monotone_gramians() {
        let model = random_stable_model(7, 2, 1, 23);
        let pairs = [
            (
                LimitSpec::frequency_band(0.0, 0.8).unwrap(),
                LimitSpec::frequency_band(0.0, 2.5).unwrap(),
            ),
            (
                LimitSpec::time_window(0.0, 0.5).unwrap(),
                LimitSpec::time_window(0.0, 1.5).unwrap(),
            ),
        ];
        for (small, big) in pairs {
            let (ps, _) = limited_gramians(&model, &small).unwrap();
            let (pb, _) = limited_gramians(&model, &big).unwrap();
            let diff = pb.clone() - ps;
            let eig = nalgebra::SymmetricEigen::new(symmetrized(diff));
            let min = eig.eigenvalues.min();
            assert!(min >= -1e-10 * pb.trace().abs().max(1.0));
        }
    }

    #[test]
    fn error_norm_of_identical_models_is_zero() {
        let model = random_stable_model(5, 2, 2, 3);
        for limit in [
            LimitSpec::frequency_band(0.0, 1.0).unwrap(),
            LimitSpec::time_window(0.0, 1.0).unwrap(),
        ] {
            let e = limited_h2_error(&model, &model, &limit).unwrap();
            assert!(e < 1e-7);
        }
    }

    #[test]
    fn scalar_error_norm_against_silent_rom() {
        let model = siso(-1.0, 1.0, 1.0);
        let silent = siso(-1.0, 1.0, 0.0);
        let limit = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let e = limited_h2_error(&model, &silent, &limit).unwrap();
        assert_relative_eq!(e, 0.5, max_relative = 1e-10);
    }

    #[test]
    fn oracle_matches_scalar_closed_forms() {
        let model = siso(-1.0, 1.0, 1.0);
        let silent = siso(-1.0, 1.0, 0.0);
        let band = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let v = limited_h2_error_oracle(&model, &silent, &band, 40).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-8);
        let window = LimitSpec::time_window(0.0, 1.0).unwrap();
        let v = limited_h2_error_oracle(&model, &silent, &window, 40).unwrap();
        assert_relative_eq!(v, 0.43233235838169365f64.sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn oracle_matches_trace_formula() {
        let model = random_stable_model(8, 2, 2, 17);
        let rom = random_stable_model(3, 2, 2, 91);
        let band = LimitSpec::frequency_band(0.3, 2.5).unwrap();
        let trace = limited_h2_error(&model, &rom, &band).unwrap();
        let orac = limited_h2_error_oracle(&model, &rom, &band, 60).unwrap();
        assert_relative_eq!(trace, orac, max_relative = 1e-6);
        let window = LimitSpec::time_window(0.2, 1.5).unwrap();
        let trace = limited_h2_error(&model, &rom, &window).unwrap();
        let orac = limited_h2_error_oracle(&model, &rom, &window, 60).unwrap();
        assert_relative_eq!(trace, orac, max_relative = 1e-4);
    }

    #[test]
    fn approx_gramians_with_identity_bases() {
        let rom = random_stable_model(4, 1, 1, 5);
        let limit = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let (p, q) = rom_gramians(&rom, &limit).unwrap();
        let eye = DMatrix::identity(4, 4);
        let (pt, qt) = approx_gramians(&p, &q, &eye, &eye).unwrap();
        assert!((pt - p).norm() < 1e-14);
        assert!((qt - q).norm() < 1e-14);
    }

    #[test]
    fn bundle_assembles_unlimited_companions() {
        let model = random_stable_model(6, 1, 1, 13);
        let limit = LimitSpec::frequency_band(0.1, 1.4).unwrap();
        let bundle = GramianBundle::assemble(&model, &model, &limit, true).unwrap();
        let q_unlim = bundle.q_cross_unlimited.as_ref().unwrap();
        let q_rom_unlim = bundle.q_rom_unlimited.as_ref().unwrap();
        assert!((q_unlim - q_rom_unlim).norm() <= 1e-10 * q_unlim.norm());
        assert!((bundle.p_rom.clone() - bundle.p_rom.transpose()).norm() <= 1e-10);
        assert!((bundle.p_cross.clone() - bundle.p_rom.clone()).norm() <= 1e-8 * bundle.p_rom.norm());
    }
}
