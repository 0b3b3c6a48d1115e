//! Reduction algorithms: iterative tangential interpolation, the
//! gramian-based stationary point iteration, pseudo-optimal rational Krylov
//! (both sides, both horizons), heuristic projection iterations, and
//! limited balanced truncation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::gramians::{cross_gramians, limited_gramians, rom_gramians};
use crate::lti::{self, LimitSpec, StateSpaceModel};
use crate::matfun::{self, eigen_order, real_part, to_complex};
use crate::projection::{
    biorth_gram_schmidt, project, realify, tangential_basis_with, InterpolationData,
    ProjectionPair,
    Side,
};
use crate::{Error, Result};

/// Condition number above which reduced gramians and correction matrices
/// are treated as singular.
const CONDITION_LIMIT: f64 = 1e12;

/// Iteration budget and stopping thresholds for the iterative reducers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceControl {
    /// Hard iteration cap.
    pub max_iterations: usize,
    /// Maximum relative change of the sorted shift set that counts as
    /// converged; zero disables early stopping and runs the full budget.
    pub shift_tolerance: f64,
    /// How many past shift sets are scanned for cycling.
    pub stagnation_window: usize,
}

impl Default for ConvergenceControl {
    fn default() -> Self {
        ConvergenceControl {
            max_iterations: 200,
            shift_tolerance: 1e-6,
            stagnation_window: 10,
        }
    }
}

impl ConvergenceControl {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.stagnation_window == 0 {
            return Err(Error::InvalidLimit(
                "iteration budget and stagnation window must be positive",
            ));
        }
        if !self.shift_tolerance.is_finite() || self.shift_tolerance < 0.0 {
            return Err(Error::NonFinite("shift tolerance"));
        }
        Ok(())
    }
}

/// Outcome of an iterative reduction run.
#[derive(Debug, Clone)]
pub struct ReductionResult {
    /// Final reduced model.
    pub rom: StateSpaceModel,
    /// Basis pair of the final projection step.
    pub pair: ProjectionPair,
    /// Whether the shift set settled within tolerance.
    pub converged: bool,
    /// Iterations actually performed.
    pub iterations: usize,
    /// Sorted shift set (mirrored iterate poles) per iteration.
    pub shift_history: Vec<Vec<Complex64>>,
    /// Relative shift change at the last comparison; infinite when only a
    /// single iteration ran.
    pub final_shift_change: f64,
}

enum TrackStep {
    Continue,
    Converged,
    Cycling,
}

/// Shift-set history with convergence and cycle detection.
struct ShiftTracker {
    history: Vec<Vec<Complex64>>,
    window: usize,
    tol: f64,
    last_change: f64,
}

impl ShiftTracker {
    fn new(ctrl: &ConvergenceControl) -> ShiftTracker {
        ShiftTracker {
            history: Vec::new(),
            window: ctrl.stagnation_window,
            tol: ctrl.shift_tolerance,
            last_change: f64::INFINITY,
        }
    }

    fn push(&mut self, set: Vec<Complex64>) -> TrackStep {
        let mut step = TrackStep::Continue;
        if let Some(prev) = self.history.last() {
            let change = set_change(&set, prev);
            self.last_change = change;
            if change < self.tol {
                step = TrackStep::Converged;
            } else {
                let depth = self.history.len();
                for back in 2..=self.window.min(depth) {
                    if set_change(&set, &self.history[depth - back]) < self.tol {
                        step = TrackStep::Cycling;
                        break;
                    }
                }
            }
        }
        self.history.push(set);
        step
    }
}

/// Maximum relative displacement under greedy nearest matching. Matching
/// instead of positional comparison keeps the metric stable when the sort
/// order of a conjugate pair flips on roundoff-level real-part ties.
fn set_change(current: &[Complex64], previous: &[Complex64]) -> f64 {
    let mut used = vec![false; previous.len()];
    let mut worst: f64 = 0.0;
    for c in current {
        let mut best: Option<(usize, f64)> = None;
        for (j, p) in previous.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (c - p).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, d) = best.expect("shift sets share a length");
        used[j] = true;
        worst = worst.max(d / previous[j].norm().max(1e-300));
    }
    worst
}

/// Iterate poles mirrored into the right half-plane, in the canonical
/// eigenvalue order, used as the convergence signature of an iterate.
fn mirrored_sorted_poles(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    Ok(matfun::eigenvalues(a)?.iter().map(|z| -z).collect())
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// X·M⁻¹ through a factorization of Mᵀ, failing with `err` when M is
/// numerically singular.
fn right_divide(x: &DMatrix<f64>, m: &DMatrix<f64>, err: Error) -> Result<DMatrix<f64>> {
    let solved = m
        .transpose()
        .full_piv_lu()
        .solve(&x.transpose())
        .ok_or(err)?;
    Ok(solved.transpose())
}

/// Marks a model stability-checked when its spectrum is verified stable.
fn promote_stability(rom: StateSpaceModel) -> StateSpaceModel {
    if rom.stability_checked() {
        return rom;
    }
    match matfun::eigenvalues(rom.a()) {
        Ok(lam) if lam.iter().all(|z| z.re < 0.0) => {
            lti::trusted_stable_model(rom.a().clone(), rom.b().clone(), rom.c().clone())
        }
        _ => rom,
    }
}

/// Replaces unstable iterate poles by their left-half-plane reflections,
/// keeping the input/output maps.
fn reflect_to_stable(rom: &StateSpaceModel) -> Result<StateSpaceModel> {
    let fac = matfun::spectral_factorization(rom.a())?;
    if fac.eigenvalues.iter().all(|z| z.re < 0.0) {
        return Ok(lti::trusted_stable_model(
            rom.a().clone(),
            rom.b().clone(),
            rom.c().clone(),
        ));
    }
    let reflected = fac.eigenvalues.map(|z| {
        if z.re >= 0.0 {
            Complex64::new(-z.re.abs() - 1e-8, z.im)
        } else {
            z
        }
    });
    let scaled = &fac.eigenvectors * nalgebra::DMatrix::from_diagonal(&reflected);
    let solved = fac
        .eigenvectors
        .transpose()
        .full_piv_lu()
        .solve(&scaled.transpose())
        .ok_or(Error::RepeatedPoles)?;
    let a = real_part(&solved.transpose());
    lti::make_model(a, rom.b().clone(), rom.c().clone(), true)
}

/// Iterative tangential interpolation: rebuild both tangential bases at the
/// current shifts, project, and replace the shifts and directions by the
/// mirrored poles and residue directions of the iterate.
pub fn itia(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    r: usize,
    init: &InterpolationData,
    ctrl: &ConvergenceControl,
) -> Result<ReductionResult> {
    ctrl.validate()?;
    if r == 0 || r > model.order() {
        return Err(Error::DimensionMismatch(
            "reduced order must lie in 1..=n",
        ));
    }
    if init.len() != r {
        return Err(Error::DimensionMismatch(
            "initial interpolation data must carry r points",
        ));
    }
    let aug = lti::augmented_io(model, limit)?;
    let mut data = init.clone();
    let mut tracker = ShiftTracker::new(ctrl);
    let mut converged = false;
    let mut iterations = 0;
    let mut outcome: Option<(StateSpaceModel, ProjectionPair)> = None;
    for it in 1..=ctrl.max_iterations {
        let vc = tangential_basis_with(&aug, model, limit, &data, Side::Input)?;
        let wc = tangential_basis_with(&aug, model, limit, &data, Side::Output)?;
        let pair = biorth_gram_schmidt(&realify(&vc)?, &realify(&wc)?)?;
        let rom = project(model, &pair)?;

        let fac = matfun::spectral_factorization(rom.a())?;
        let right_all = fac
            .eigenvectors
            .clone()
            .full_piv_lu()
            .solve(&to_complex(rom.b()))
            .ok_or(Error::RepeatedPoles)?;
        let left_all = to_complex(rom.c()) * &fac.eigenvectors;
        let reflected: Vec<Complex64> = fac
            .eigenvalues
            .iter()
            .map(|z| {
                if z.re >= 0.0 {
                    Complex64::new(-z.re.abs() - 1e-8, z.im)
                } else {
                    *z
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&i, &j| eigen_order(reflected[i], reflected[j]));
        let shifts: Vec<Complex64> = order.iter().map(|&i| -reflected[i]).collect();
        let right: Vec<DVector<Complex64>> = order
            .iter()
            .map(|&i| right_all.row(i).transpose().into_owned())
            .collect();
        let left: Vec<DVector<Complex64>> = order
            .iter()
            .map(|&i| left_all.column(i).into_owned())
            .collect();
        data = InterpolationData {
            shifts: shifts.clone(),
            right,
            left,
        };

        iterations = it;
        outcome = Some((rom, pair));
        match tracker.push(shifts) {
            TrackStep::Converged => {
                converged = true;
                break;
            }
            TrackStep::Cycling => break,
            TrackStep::Continue => {}
        }
    }
    let (rom, pair) = outcome.expect("at least one iteration ran");
    Ok(ReductionResult {
        rom: promote_stability(rom),
        pair,
        converged,
        iterations,
        shift_history: tracker.history,
        final_shift_change: tracker.last_change,
    })
}

/// Shared driver for the reduced-model fixed-point iterations.
fn fixed_point_loop<F>(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    r: usize,
    init_rom: &StateSpaceModel,
    ctrl: &ConvergenceControl,
    step: F,
) -> Result<ReductionResult>
where
    F: Fn(&StateSpaceModel, &LimitSpec, &StateSpaceModel) -> Result<(StateSpaceModel, ProjectionPair)>,
{
    ctrl.validate()?;
    if r == 0 || r > model.order() || init_rom.order() != r {
        return Err(Error::DimensionMismatch(
            "initial reduced model must have order r in 1..=n",
        ));
    }
    if model.inputs() != init_rom.inputs() || model.outputs() != init_rom.outputs() {
        return Err(Error::DimensionMismatch(
            "initial reduced model must match input/output counts",
        ));
    }
    let mut rom = init_rom.clone();
    let mut tracker = ShiftTracker::new(ctrl);
    let mut converged = false;
    let mut iterations = 0;
    let mut pair: Option<ProjectionPair> = None;
    for it in 1..=ctrl.max_iterations {
        let stable_rom = reflect_to_stable(&rom)?;
        let (next, p) = step(model, limit, &stable_rom)?;
        rom = next;
        pair = Some(p);
        iterations = it;
        match tracker.push(mirrored_sorted_poles(rom.a())?) {
            TrackStep::Converged => {
                converged = true;
                break;
            }
            TrackStep::Cycling => break,
            TrackStep::Continue => {}
        }
    }
    Ok(ReductionResult {
        rom: promote_stability(rom),
        pair: pair.expect("at least one iteration ran"),
        converged,
        iterations,
        shift_history: tracker.history,
        final_shift_change: tracker.last_change,
    })
}

/// Stationary point iteration on the coupled gramian equations: bases
/// V̂ = P̄P̂⁻¹ and Ŵ = Q̄Q̂⁻¹, bi-orthogonalized, then an oblique projection.
pub fn hmor(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    r: usize,
    init_rom: &StateSpaceModel,
    ctrl: &ConvergenceControl,
) -> Result<ReductionResult> {
    fixed_point_loop(model, limit, r, init_rom, ctrl, |model, limit, rom| {
        let (p_cross, q_cross) = cross_gramians(model, rom, limit)?;
        let (p_rom, q_rom) = rom_gramians(rom, limit)?;
        if condition_number(&p_rom) > CONDITION_LIMIT || condition_number(&q_rom) > CONDITION_LIMIT
        {
            return Err(Error::SingularReducedGramian);
        }
        let v = right_divide(&p_cross, &p_rom, Error::SingularReducedGramian)?;
        let w = right_divide(&q_cross, &q_rom, Error::SingularReducedGramian)?;
        let pair = biorth_gram_schmidt(&v, &w)?;
        let next = project(model, &pair)?;
        Ok((next, pair))
    })
}

/// Heuristic projection iterations: the gramian-correction update for
/// frequency horizons, the spectrally weighted cross-gramian update for
/// time horizons. No optimality claim; audit separately.
pub fn heuristic_iter(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    r: usize,
    init_rom: &StateSpaceModel,
    ctrl: &ConvergenceControl,
) -> Result<ReductionResult> {
    fixed_point_loop(model, limit, r, init_rom, ctrl, |model, limit, rom| {
        let (p_cross, q_cross) = cross_gramians(model, rom, limit)?;
        let pair = if limit.is_frequency() {
            let v = p_cross;
            let corr = v.transpose() * &q_cross;
            if condition_number(&corr) > CONDITION_LIMIT {
                return Err(Error::SingularCorrection);
            }
            let w = right_divide(&q_cross, &corr, Error::SingularCorrection)?;
            ProjectionPair { v, w }
        } else {
            let fac = matfun::spectral_factorization(rom.a())?;
            let rinv = fac
                .eigenvectors
                .clone()
                .full_piv_lu()
                .try_inverse()
                .ok_or(Error::RepeatedPoles)?;
            let v_raw = realify(&(to_complex(&p_cross) * rinv.adjoint()))?;
            let w_raw = realify(&(to_complex(&q_cross) * &fac.eigenvectors))?;
            let v = orthonormal_columns(&v_raw)?;
            let w_orth = orthonormal_columns(&w_raw)?;
            let corr = v.transpose() * &w_orth;
            if condition_number(&corr) > CONDITION_LIMIT {
                return Err(Error::SingularCorrection);
            }
            let w = right_divide(&w_orth, &corr, Error::SingularCorrection)?;
            ProjectionPair { v, w }
        };
        let next = project(model, &pair)?;
        Ok((next, pair))
    })
}

fn orthonormal_columns(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = x.ncols();
    if condition_number(x) > CONDITION_LIMIT {
        return Err(Error::RankDeficient);
    }
    let qr = x.clone().qr();
    Ok(qr.q().columns(0, r).into_owned())
}

/// Pseudo-optimal rational Krylov reduction. The input side returns a ROM
/// that matches the model's weighted output map against the cross gramian
/// exactly; the output side matches the weighted input map. Poles land on
/// the mirrored shifts.
pub fn pork(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    data: &InterpolationData,
    side: Side,
) -> Result<StateSpaceModel> {
    if data.is_empty() {
        return Err(Error::DimensionMismatch("no interpolation points"));
    }
    if data.shifts.iter().any(|s| s.re <= 0.0) {
        return Err(Error::ShiftOutsideRightHalfPlane);
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&i, &j| eigen_order(data.shifts[i], data.shifts[j]));
    let data = InterpolationData {
        shifts: order.iter().map(|&i| data.shifts[i]).collect(),
        right: order.iter().map(|&i| data.right[i].clone()).collect(),
        left: order.iter().map(|&i| data.left[i].clone()).collect(),
    };
    let m = model.inputs();
    let p = model.outputs();
    let aug = lti::augmented_io(model, limit)?;
    match side {
        Side::Input => {
            let v = realify(&tangential_basis_with(&aug, model, limit, &data, Side::Input)?)?;
            let gram = v.transpose() * &v;
            if condition_number(&gram) > CONDITION_LIMIT {
                return Err(Error::RankDeficient);
            }
            let w = right_divide(&v, &gram, Error::RankDeficient)?;
            let pi = &v * w.transpose();
            let b_perp = &aug.b_aug - &pi * &aug.b_aug;
            let av = model.a() * &v;
            let av_defl = &av - &pi * &av;
            let normal = b_perp.transpose() * &b_perp;
            if condition_number(&normal) > CONDITION_LIMIT {
                return Err(Error::IllConditionedNormalEquations);
            }
            let l_bar = normal
                .clone()
                .full_piv_lu()
                .solve(&(b_perp.transpose() * &av_defl))
                .ok_or(Error::IllConditionedNormalEquations)?;
            let s_mat = w.transpose() * (&av - &aug.b_aug * &l_bar);
            let (l_hat, rhs) = match *limit {
                LimitSpec::FrequencyBand { omega_lo, omega_hi } => {
                    let l_hat = l_bar.rows(m, m).into_owned();
                    let lw = &l_hat * matfun::freq_log_gain(&(-&s_mat), omega_lo, omega_hi)?;
                    let rhs = l_hat.transpose() * &lw + lw.transpose() * &l_hat;
                    (l_hat, rhs)
                }
                LimitSpec::TimeWindow { t_lo, t_hi } => {
                    let l_hat =
                        l_bar.rows(0, m).into_owned() * matfun::matrix_exponential(&s_mat, t_lo)?;
                    let l1 = &l_hat * matfun::matrix_exponential(&s_mat, -t_lo)?;
                    let l2 = &l_hat * matfun::matrix_exponential(&s_mat, -t_hi)?;
                    let rhs = l1.transpose() * &l1 - l2.transpose() * &l2;
                    (l_hat, rhs)
                }
            };
            let q = matfun::solve_lyapunov(&(-s_mat.transpose()), &rhs)?;
            let q = (q.transpose() + &q) * 0.5;
            if condition_number(&q) > CONDITION_LIMIT {
                return Err(Error::SingularReducedGramian);
            }
            let lu = q.clone().full_piv_lu();
            let a_hat = -lu
                .solve(&(s_mat.transpose() * &q))
                .ok_or(Error::SingularReducedGramian)?;
            let b_hat = -lu
                .solve(&l_hat.transpose())
                .ok_or(Error::SingularReducedGramian)?;
            let c_hat = model.c() * &v;
            lti::make_model(a_hat, b_hat, c_hat, true)
        }
        Side::Output => {
            let w = realify(&tangential_basis_with(&aug, model, limit, &data, Side::Output)?)?;
            let gram = w.transpose() * &w;
            if condition_number(&gram) > CONDITION_LIMIT {
                return Err(Error::RankDeficient);
            }
            let v = right_divide(&w, &gram, Error::RankDeficient)?;
            let pi = &v * w.transpose();
            let c_perp = &aug.c_aug - &aug.c_aug * &pi;
            let cp_t = c_perp.transpose();
            let defl = &cp_t - &pi * &cp_t;
            let lhs = w.transpose() * (model.a() * &defl);
            let normal = &c_perp * c_perp.transpose();
            if condition_number(&normal) > CONDITION_LIMIT {
                return Err(Error::IllConditionedNormalEquations);
            }
            let l_bar = right_divide(&lhs, &normal, Error::IllConditionedNormalEquations)?;
            let s_mat = (w.transpose() * model.a() - &l_bar * &aug.c_aug) * &v;
            let (l_hat, rhs) = match *limit {
                LimitSpec::FrequencyBand { omega_lo, omega_hi } => {
                    let l_hat = l_bar.columns(p, p).into_owned();
                    let lw = matfun::freq_log_gain(&(-&s_mat), omega_lo, omega_hi)? * &l_hat;
                    let rhs = &lw * l_hat.transpose() + &l_hat * lw.transpose();
                    (l_hat, rhs)
                }
                LimitSpec::TimeWindow { t_lo, t_hi } => {
                    let l_hat = matfun::matrix_exponential(&s_mat, t_lo)?
                        * l_bar.columns(0, p).into_owned();
                    let l1 = matfun::matrix_exponential(&s_mat, -t_lo)? * &l_hat;
                    let l2 = matfun::matrix_exponential(&s_mat, -t_hi)? * &l_hat;
                    let rhs = &l1 * l1.transpose() - &l2 * l2.transpose();
                    (l_hat, rhs)
                }
            };
            let p_mat = matfun::solve_lyapunov(&(-&s_mat), &rhs)?;
            let p_mat = (p_mat.transpose() + &p_mat) * 0.5;
            if condition_number(&p_mat) > CONDITION_LIMIT {
                return Err(Error::SingularReducedGramian);
            }
            let lu = p_mat.clone().full_piv_lu();
            let a_hat = -lu
                .solve(&(&s_mat * &p_mat))
                .ok_or(Error::SingularReducedGramian)?
                .transpose();
            let b_hat = w.transpose() * model.b();
            let c_hat = -lu
                .solve(&l_hat)
                .ok_or(Error::SingularReducedGramian)?
                .transpose();
            lti::make_model(a_hat, b_hat, c_hat, true)
        }
    }
}

/// Square-root balanced truncation on the limited gramians.
pub fn limited_bt(model: &StateSpaceModel, limit: &LimitSpec, r: usize) -> Result<StateSpaceModel> {
    let n = model.order();
    if r == 0 || r > n {
        return Err(Error::DimensionMismatch("reduced order must lie in 1..=n"));
    }
    let (p, q) = limited_gramians(model, limit)?;
    let zp = psd_sqrt(&p)?;
    let zq = psd_sqrt(&q)?;
    let prod = zq.transpose() * &zp;
    let svd = prod.svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let smax = svd.singular_values[idx[0]];
    let positive = idx
        .iter()
        .take_while(|&&i| svd.singular_values[i] > 1e-12 * smax.max(f64::MIN_POSITIVE))
        .count();
    if positive < r {
        return Err(Error::RankCollapse);
    }
    let mut t = DMatrix::zeros(n, r);
    let mut l = DMatrix::zeros(n, r);
    for (k, &i) in idx.iter().take(r).enumerate() {
        let scale = svd.singular_values[i].sqrt().recip();
        let tv = &zp * (vt.row(i).transpose() * scale);
        let lv = &zq * (u.column(i) * scale);
        t.set_column(k, &tv.column(0));
        l.set_column(k, &lv.column(0));
    }
    let rom = lti::make_model(
        l.transpose() * model.a() * &t,
        l.transpose() * model.b(),
        model.c() * &t,
        false,
    )?;
    Ok(promote_stability(rom))
}

/// Symmetric PSD square root with clipping of roundoff-negative
/// eigenvalues.
fn psd_sqrt(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (x.transpose() + x) * 0.5;
    let trace = sym.trace();
    let eig = nalgebra::SymmetricEigen::new(sym);
    if eig.eigenvalues.min() < -1e-12 * trace.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NegativeTrace);
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}
