//! Error type shared by all numerical modules.

use std::fmt;

/// Errors raised by the reduction library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Matrix dimensions are inconsistent for the requested operation.
    DimensionMismatch(&'static str),
    /// An input contains a NaN or infinite entry.
    NonFinite(&'static str),
    /// A frequency band or time window violates its ordering constraints.
    InvalidLimit(&'static str),
    /// A matrix required to be Hurwitz-stable has an eigenvalue with
    /// nonnegative real part.
    UnstableMatrix,
    /// The Schur iteration did not converge.
    SchurFailed,
    /// A Sylvester equation has no unique solution because an eigenvalue of
    /// the left coefficient coincides with an eigenvalue of the negated
    /// right coefficient.
    SpectraOverlap,
    /// An eigenvalue of a matrix-logarithm argument lies too close to the
    /// closed negative real axis for the principal branch to be trusted.
    BranchCutProximity,
    /// Two eigenvalues coincide within tolerance where simple poles are
    /// required.
    RepeatedPoles,
    /// An evaluation or interpolation shift coincides with a system pole.
    SingularShift,
    /// A complex basis is not closed under conjugation, so it cannot be
    /// turned into a real basis.
    NotConjugateClosed,
    /// Bi-orthogonalization hit a near-zero inner product between a column
    /// pair.
    BreakdownNearZero,
    /// A computed basis does not have full column rank.
    RankDeficient,
    /// The normal-equation matrix of a least-squares step is too
    /// ill-conditioned to invert.
    IllConditionedNormalEquations,
    /// A reduced gramian is numerically singular, so the stationary-point
    /// update cannot be formed.
    SingularReducedGramian,
    /// The oblique correction matrix of a heuristic iteration is singular.
    SingularCorrection,
    /// An interpolation shift lies outside the open right half-plane.
    ShiftOutsideRightHalfPlane,
    /// A squared norm or gramian eigenvalue is negative beyond the roundoff
    /// threshold.
    NegativeTrace,
    /// The quadrature oracle did not self-verify at the requested resolution.
    ResolutionTooCoarse,
    /// Fewer positive singular values exist than states requested by
    /// balanced truncation.
    RankCollapse,
    /// The band-limited log gain of the reduced state map is numerically
    /// rank deficient, so the stationarity rewrite is unavailable.
    RankDeficientF,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            Error::NonFinite(what) => write!(f, "non-finite entries: {what}"),
            Error::InvalidLimit(what) => write!(f, "invalid limit specification: {what}"),
            Error::UnstableMatrix => write!(f, "matrix is not Hurwitz stable"),
            Error::SchurFailed => write!(f, "Schur decomposition did not converge"),
            Error::SpectraOverlap => {
                write!(f, "spectra overlap: Sylvester equation has no unique solution")
            }
            Error::BranchCutProximity => {
                write!(f, "eigenvalue too close to the logarithm branch cut")
            }
            Error::RepeatedPoles => write!(f, "repeated eigenvalues where simple poles required"),
            Error::SingularShift => write!(f, "shift coincides with a system pole"),
            Error::NotConjugateClosed => {
                write!(f, "complex basis is not closed under conjugation")
            }
            Error::BreakdownNearZero => {
                write!(f, "bi-orthogonalization breakdown: near-zero inner product")
            }
            Error::RankDeficient => write!(f, "basis is rank deficient"),
            Error::IllConditionedNormalEquations => {
                write!(f, "normal equations too ill-conditioned")
            }
            Error::SingularReducedGramian => write!(f, "reduced gramian numerically singular"),
            Error::SingularCorrection => write!(f, "oblique correction matrix singular"),
            Error::ShiftOutsideRightHalfPlane => {
                write!(f, "interpolation shift outside the open right half-plane")
            }
            Error::NegativeTrace => {
                write!(f, "negative squared norm or gramian eigenvalue beyond roundoff")
            }
            Error::ResolutionTooCoarse => {
                write!(f, "quadrature resolution too coarse to self-verify")
            }
            Error::RankCollapse => write!(f, "fewer positive singular values than states requested"),
            Error::RankDeficientF => {
                write!(f, "band-limited log gain of the reduced state map is rank deficient")
            }
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
