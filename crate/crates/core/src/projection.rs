//! Tangential basis construction, realification, bi-orthogonalization, and
//! assembly of projected reduced models.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::lti::{self, LimitSpec, StateSpaceModel};
use crate::matfun::{complex_identity, freq_log_gain_scalar, to_complex, CMatrix};
use crate::{Error, Result};

/// Shifts with right/left tangential directions, closed under conjugation.
#[derive(Debug, Clone)]
pub struct InterpolationData {
    /// Interpolation shifts σᵢ.
    pub shifts: Vec<Complex64>,
    /// Right directions bᵢ (length m).
    pub right: Vec<DVector<Complex64>>,
    /// Left directions cᵢ (length p).
    pub left: Vec<DVector<Complex64>>,
}

/// Which side of the system a tangential basis resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Columns span shifted solves against the augmented input map.
    Input,
    /// Columns span shifted solves against the augmented output map.
    Output,
}

impl InterpolationData {
    /// Validates lengths and conjugate closure.
    pub fn new(
        shifts: Vec<Complex64>,
        right: Vec<DVector<Complex64>>,
        left: Vec<DVector<Complex64>>,
    ) -> Result<InterpolationData> {
        if shifts.len() != right.len() || shifts.len() != left.len() {
            return Err(Error::DimensionMismatch(
                "shift and direction counts must agree",
            ));
        }
        let data = InterpolationData {
            shifts,
            right,
            left,
        };
        data.check_conjugate_closure()?;
        Ok(data)
    }

    /// Number of interpolation points.
    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    /// True when no interpolation points are present.
    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// Mirror image of a reduced model: shifts −λ̂ᵢ with the model's own
    /// residue directions, the usual warm start for interpolatory loops.
    pub fn from_rom_mirror(rom: &StateSpaceModel) -> Result<InterpolationData> {
        let pr = lti::pole_residue(rom)?;
        Ok(InterpolationData {
            shifts: pr.poles.iter().map(|z| -z).collect(),
            right: pr.right,
            left: pr.left,
        })
    }

    fn check_conjugate_closure(&self) -> Result<()> {
        let n = self.len();
        let mut matched = vec![false; n];
        for i in 0..n {
            if matched[i] {
                continue;
            }
            let scale = 1.0 + self.shifts[i].norm();
            if self.shifts[i].im.abs() <= 1e-12 * scale {
                matched[i] = true;
                continue;
            }
            let partner = (0..n).find(|&j| {
                !matched[j]
                    && j != i
                    && (self.shifts[j] - self.shifts[i].conj()).norm() <= 1e-8 * scale
                    && pair_conj_close(&self.right[j], &self.right[i])
                    && pair_conj_close(&self.left[j], &self.left[i])
            });
            match partner {
                Some(j) => {
                    matched[i] = true;
                    matched[j] = true;
                }
                None => return Err(Error::NotConjugateClosed),
            }
        }
        Ok(())
    }
}

fn pair_conj_close(x: &DVector<Complex64>, y: &DVector<Complex64>) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let scale = x.norm().max(y.norm()).max(1e-300);
    (x - y.map(|z| z.conj())).norm() <= 1e-8 * scale
}

/// Bi-orthogonal basis pair with ŴᵀV̂ = I.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    /// Right (state) basis, n×r.
    pub v: DMatrix<f64>,
    /// Left (test) basis, n×r.
    pub w: DMatrix<f64>,
}

/// Stacked direction multiplying the augmented input or output map for one
/// shift: frequency case [F[−σ]b; b], time case [e^{−στ₁}b; e^{−στ₂}b].
pub(crate) fn stacked_direction(
    shift: Complex64,
    dir: &DVector<Complex64>,
    limit: &LimitSpec,
) -> DVector<Complex64> {
    let k = dir.len();
    let mut out = DVector::zeros(2 * k);
    let (top, bottom) = match *limit {
        LimitSpec::FrequencyBand { omega_lo, omega_hi } => (
            freq_log_gain_scalar(-shift, omega_lo, omega_hi),
            Complex64::new(1.0, 0.0),
        ),
        LimitSpec::TimeWindow { t_lo, t_hi } => {
            ((-shift * t_lo).exp(), (-shift * t_hi).exp())
        }
    };
    for i in 0..k {
        out[i] = top * dir[i];
        out[k + i] = bottom * dir[i];
    }
    out
}

/// Builds the complex tangential basis whose columns solve the shifted
/// systems against the horizon-augmented input or output map.
pub fn tangential_basis(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    data: &InterpolationData,
    side: Side,
) -> Result<CMatrix> {
    let aug = lti::augmented_io(model, limit)?;
    tangential_basis_with(&aug, model, limit, data, side)
}

/// Variant of [`tangential_basis`] reusing precomputed augmented maps, so
/// iteration loops pay for the horizon weights of the full model only once.
pub(crate) fn tangential_basis_with(
    aug: &lti::AugmentedIO,
    model: &StateSpaceModel,
    limit: &LimitSpec,
    data: &InterpolationData,
    side: Side,
) -> Result<CMatrix> {
    let n = model.order();
    let r = data.len();
    if r == 0 {
        return Err(Error::DimensionMismatch("no interpolation points"));
    }
    let a_c = to_complex(model.a());
    let mut basis = CMatrix::zeros(n, r);
    for i in 0..r {
        let sigma = data.shifts[i];
        let (rhs, shifted) = match side {
            Side::Input => {
                let stacked = stacked_direction(sigma, &data.right[i], limit);
                (
                    to_complex(&aug.b_aug) * stacked,
                    complex_identity(n) * sigma - &a_c,
                )
            }
            Side::Output => {
                let stacked = stacked_direction(sigma, &data.left[i], limit);
                (
                    to_complex(&aug.c_aug).transpose() * stacked,
                    complex_identity(n) * sigma - a_c.transpose(),
                )
            }
        };
        let column =
            lti::solve_shifted(&shifted, &CMatrix::from_column_slice(n, 1, rhs.as_slice()))?;
        basis.set_column(i, &column.column(0));
    }
    let svd = basis.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax.max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficient);
    }
    Ok(basis)
}

/// Replaces conjugate column pairs by their real and imaginary parts,
/// preserving the column span.
pub fn realify(basis: &CMatrix) -> Result<DMatrix<f64>> {
    let n = basis.nrows();
    let r = basis.ncols();
    let mut out = DMatrix::zeros(n, r);
    let mut i = 0;
    while i < r {
        let col = basis.column(i);
        let scale = col.norm().max(1e-300);
        let imag: f64 = col.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        if imag <= 1e-10 * scale {
            for k in 0..n {
                out[(k, i)] = col[k].re;
            }
            i += 1;
            continue;
        }
        if i + 1 >= r {
            return Err(Error::NotConjugateClosed);
        }
        let next = basis.column(i + 1);
        let mismatch: f64 = (0..n)
            .map(|k| (next[k] - col[k].conj()).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if mismatch > 1e-8 * scale {
            return Err(Error::NotConjugateClosed);
        }
        for k in 0..n {
            out[(k, i)] = col[k].re;
            out[(k, i + 1)] = col[k].im;
        }
        i += 2;
    }
    Ok(out)
}

/// Two-sided Gram-Schmidt driving ŴᵀV̂ to the identity while keeping both
/// column spans.
pub fn biorth_gram_schmidt(v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<ProjectionPair> {
    if v.shape() != w.shape() {
        return Err(Error::DimensionMismatch("basis pair shapes must agree"));
    }
    let r = v.ncols();
    let mut vq = v.clone();
    let mut wq = w.clone();
    for j in 0..r {
        let mut vj = vq.column(j).into_owned();
        let mut wj = wq.column(j).into_owned();
        for i in 0..j {
            let vi = vq.column(i);
            let wi = wq.column(i);
            let proj_v = wi.dot(&vj);
            vj -= vi * proj_v;
            let proj_w = vi.dot(&wj);
            wj -= wi * proj_w;
        }
        let denom = wj.dot(&vj);
        if denom.abs() < 1e-12 * vj.norm() * wj.norm() {
            return Err(Error::BreakdownNearZero);
        }
        let root = denom.abs().sqrt();
        vj /= root;
        wj *= denom.signum() / root;
        vq.set_column(j, &vj);
        wq.set_column(j, &wj);
    }
    Ok(ProjectionPair { v: vq, w: wq })
}

/// Projects a model through a basis pair: Â = ŴᵀAV̂, B̂ = ŴᵀB, Ĉ = CV̂.
pub fn project(model: &StateSpaceModel, pair: &ProjectionPair) -> Result<StateSpaceModel> {
    if pair.v.nrows() != model.order() || pair.w.nrows() != model.order() {
        return Err(Error::DimensionMismatch("basis rows must match model order"));
    }
    let a = pair.w.transpose() * model.a() * &pair.v;
    let b = pair.w.transpose() * model.b();
    let c = model.c() * &pair.v;
    lti::make_model(a, b, c, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{augmented_io, eval_transfer, make_model, random_stable_model};
    use approx::assert_relative_eq;

    fn unit(k: usize, i: usize) -> DVector<Complex64> {
        DVector::from_fn(k, |j, _| {
            Complex64::new(if j == i { 1.0 } else { 0.0 }, 0.0)
        })
    }

    fn span_angle_cos(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let qx = x.clone().qr().q();
        let qy = y.clone().qr().q();
        let svd = (qx.transpose() * qy).svd(false, false);
        svd.singular_values.min()
    }

    #[test]
    fn scalar_band_column_value() {
        let model = make_model(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            true,
        )
        .unwrap();
        let limit = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let data = InterpolationData::new(
            vec![Complex64::new(1.0, 0.0)],
            vec![unit(1, 0)],
            vec![unit(1, 0)],
        )
        .unwrap();
        let basis = tangential_basis(&model, &limit, &data, Side::Input).unwrap();
        assert_relative_eq!(basis[(0, 0)].re, 0.25, max_relative = 1e-12);
        assert!(basis[(0, 0)].im.abs() < 1e-14);
    }

    #[test]
    fn conjugate_shifts_give_conjugate_columns() {
        let model = random_stable_model(6, 2, 2, 8);
        let limit = LimitSpec::time_window(0.0, 1.0).unwrap();
        let b0 = DVector::from_vec(vec![
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 0.2),
        ]);
        let data = InterpolationData::new(
            vec![Complex64::new(1.0, 1.0), Complex64::new(1.0, -1.0)],
            vec![b0.clone(), b0.map(|z| z.conj())],
            vec![unit(2, 0), unit(2, 0)],
        )
        .unwrap();
        for side in [Side::Input, Side::Output] {
            let basis = tangential_basis(&model, &limit, &data, side).unwrap();
            for k in 0..6 {
                assert!((basis[(k, 1)] - basis[(k, 0)].conj()).norm() < 1e-10);
            }
            let real = realify(&basis).unwrap();
            assert!(span_angle_cos(&real, &crate::matfun::real_part(&basis)) <= 1.0);
        }
    }

    #[test]
    fn duplicate_shift_directions_are_rank_deficient() {
        let model = random_stable_model(5, 1, 1, 2);
        let limit = LimitSpec::frequency_band(0.0, 1.0).unwrap();
        let data = InterpolationData::new(
            vec![Complex64::new(0.7, 0.0), Complex64::new(0.7, 0.0)],
            vec![unit(1, 0), unit(1, 0)],
            vec![unit(1, 0), unit(1, 0)],
        )
        .unwrap();
        assert!(matches!(
            tangential_basis(&model, &limit, &data, Side::Input),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn unmatched_complex_shift_is_rejected() {
        assert!(matches!(
            InterpolationData::new(
                vec![Complex64::new(1.0, 1.0)],
                vec![unit(1, 0)],
                vec![unit(1, 0)],
            ),
            Err(Error::NotConjugateClosed)
        ));
    }

    #[test]
    fn realify_keeps_real_input_and_pair_spans() {
        let real_basis = CMatrix::from_fn(4, 2, |i, j| Complex64::new((i + j) as f64, 0.0));
        let out = realify(&real_basis).unwrap();
        assert_eq!(out[(2, 1)], 3.0);

        let v = DVector::from_vec(vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(0.5, -1.0),
            Complex64::new(-0.25, 0.75),
        ]);
        let mut basis = CMatrix::zeros(3, 2);
        basis.set_column(0, &v);
        basis.set_column(1, &v.map(|z| z.conj()));
        let real = realify(&basis).unwrap();
        let re_im = DMatrix::from_fn(3, 2, |i, j| if j == 0 { v[i].re } else { v[i].im });
        assert!((real.clone() - re_im).norm() < 1e-14);
    }

    #[test]
    fn biorth_identity_and_breakdown() {
        let mut v = DMatrix::zeros(4, 2);
        v[(0, 0)] = 1.0;
        v[(1, 1)] = 1.0;
        let pair = biorth_gram_schmidt(&v, &v).unwrap();
        let prod = pair.w.transpose() * &pair.v;
        assert!((prod - DMatrix::identity(2, 2)).norm() < 1e-12);

        let mut w = DMatrix::zeros(4, 2);
        w[(2, 0)] = 1.0;
        w[(3, 1)] = 1.0;
        assert!(matches!(
            biorth_gram_schmidt(&v, &w),
            Err(Error::BreakdownNearZero)
        ));
    }

    #[test]
    fn biorth_preserves_spans_on_random_pair() {
        let model = random_stable_model(20, 4, 4, 31);
        let v = model.b().clone();
        let w = model.c().transpose();
        let pair = biorth_gram_schmidt(&v, &w).unwrap();
        let prod = pair.w.transpose() * &pair.v;
        assert!((prod - DMatrix::identity(4, 4)).norm() < 1e-8);
        assert!(span_angle_cos(&pair.v, &v) >= 1.0 - 1e-10);
        assert!(span_angle_cos(&pair.w, &w) >= 1.0 - 1e-10);
    }

    #[test]
    fn projection_with_identity_reproduces_model() {
        let model = random_stable_model(4, 2, 1, 9);
        let eye = DMatrix::identity(4, 4);
        let pair = ProjectionPair {
            v: eye.clone(),
            w: eye,
        };
        let rom = project(&model, &pair).unwrap();
        assert!((rom.a() - model.a()).norm() < 1e-14);
        assert!((rom.b() - model.b()).norm() < 1e-14);
        assert!((rom.c() - model.c()).norm() < 1e-14);
    }

    #[test]
    fn coordinate_projection_selects_block() {
        let model = make_model(
            DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0])),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            true,
        )
        .unwrap();
        let sel = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let pair = ProjectionPair {
            v: sel.clone(),
            w: sel,
        };
        let rom = project(&model, &pair).unwrap();
        assert_relative_eq!(rom.a()[(0, 0)], -1.0, max_relative = 1e-14);
        assert_relative_eq!(rom.b()[(0, 0)], 1.0, max_relative = 1e-14);
        assert_relative_eq!(rom.c()[(0, 0)], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn two_sided_krylov_projection_interpolates() {
        let model = random_stable_model(8, 2, 2, 44);
        let sigma = Complex64::new(0.8, 0.0);
        let b = DVector::from_vec(vec![1.0, -0.5]);
        let c = DVector::from_vec(vec![0.3, 1.0]);
        let shifted = DMatrix::identity(8, 8) * 0.8 - model.a();
        let lu = shifted.clone().lu();
        let v = lu.solve(&(model.b() * &b)).unwrap();
        let lut = shifted.transpose().lu();
        let w = lut.solve(&(model.c().transpose() * &c)).unwrap();
        let pair = biorth_gram_schmidt(
            &DMatrix::from_column_slice(8, 1, v.as_slice()),
            &DMatrix::from_column_slice(8, 1, w.as_slice()),
        )
        .unwrap();
        let rom = project(&model, &pair).unwrap();
        let g = eval_transfer(&model, sigma).unwrap();
        let gr = eval_transfer(&rom, sigma).unwrap();
        let bc = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(-0.5, 0.0)]);
        let gb = &g * &bc;
        let grb = &gr * &bc;
        assert!((gb.clone() - grb).norm() <= 1e-8 * gb.norm());
    }

    #[test]
    fn tangential_basis_interpolates_augmented_system() {
        let model = random_stable_model(10, 2, 2, 55);
        let limit = LimitSpec::frequency_band(0.5, 2.0).unwrap();
        let b0 = DVector::from_vec(vec![
            Complex64::new(0.6, 0.1),
            Complex64::new(-0.2, 0.9),
        ]);
        let b1 = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.4, 0.0)]);
        let data = InterpolationData::new(
            vec![
                Complex64::new(0.9, 0.7),
                Complex64::new(0.9, -0.7),
                Complex64::new(1.5, 0.0),
            ],
            vec![b0.clone(), b0.map(|z| z.conj()), b1.clone()],
            vec![unit(2, 0), unit(2, 0), unit(2, 1)],
        )
        .unwrap();
        let basis = tangential_basis(&model, &limit, &data, Side::Input).unwrap();
        let real = realify(&basis).unwrap();
        let pair = biorth_gram_schmidt(&real, &real).unwrap();
        let aug = augmented_io(&model, &limit).unwrap();
        let aug_model = make_model(model.a().clone(), aug.b_aug.clone(), aug.c_aug.clone(), false)
            .unwrap();
        let aug_rom = project(&aug_model, &pair).unwrap();
        for i in 0..data.len() {
            let stacked = stacked_direction(data.shifts[i], &data.right[i], &limit);
            let g = eval_transfer(&aug_model, data.shifts[i]).unwrap() * &stacked;
            let gr = eval_transfer(&aug_rom, data.shifts[i]).unwrap() * &stacked;
            assert!((g.clone() - gr).norm() <= 1e-8 * g.norm());
        }
    }
}
