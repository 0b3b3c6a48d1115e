//! Matrix exponential by scaling and squaring with Padé approximants.

use nalgebra::DMatrix;

use super::check_finite;
use crate::{Error, Result};

const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Computes e^{At} for a real square matrix A and t ≥ 0.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    check_finite(a, "matrix exponential input")?;
    if !t.is_finite() {
        return Err(Error::NonFinite("matrix exponential time"));
    }
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "matrix exponential needs a square matrix",
        ));
    }
    Ok(expm(&(a * t)))
}

/// Scaling-and-squaring matrix exponential with degree-{3,5,7,9,13} Padé
/// approximants selected by the 1-norm of the argument.
pub(crate) fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = one_norm(a);
    for &(degree, theta) in &THETA[..4] {
        if norm <= theta {
            return pade(a, degree);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s);
    let mut e = pade(&scaled, 13);
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade(a: &DMatrix<f64>, degree: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let eye = DMatrix::identity(n, n);
    let a2 = a * a;
    let (u, v) = match degree {
        3 => pade_low(a, &a2, &eye, &B3),
        5 => pade_low(a, &a2, &eye, &B5),
        7 => pade_low(a, &a2, &eye, &B7),
        9 => pade_low(a, &a2, &eye, &B9),
        13 => {
            let a4 = &a2 * &a2;
            let a6 = &a2 * &a4;
            let u_inner = &a6 * (B13[13] * &a6 + B13[11] * &a4 + B13[9] * &a2)
                + B13[7] * &a6
                + B13[5] * &a4
                + B13[3] * &a2
                + B13[1] * &eye;
            let u = a * u_inner;
            let v = &a6 * (B13[12] * &a6 + B13[10] * &a4 + B13[8] * &a2)
                + B13[6] * &a6
                + B13[4] * &a4
                + B13[2] * &a2
                + B13[0] * &eye;
            (u, v)
        }
        _ => unreachable!("unsupported Padé degree"),
    };
    let numer = &v + &u;
    let denom = &v - &u;
    denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular for norms below the degree threshold")
}

fn pade_low(
    a: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    eye: &DMatrix<f64>,
    b: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut even = DMatrix::zeros(n, n);
    let mut odd = DMatrix::zeros(n, n);
    let mut power = eye.clone();
    // power walks through I, A², A⁴, ... collecting both parity sums.
    let mut k = 0;
    while k < b.len() {
        even += b[k] * &power;
        if k + 1 < b.len() {
            odd += b[k + 1] * &power;
        }
        power = &power * a2;
        k += 2;
    }
    (a * odd, even)
}
