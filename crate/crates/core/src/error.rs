// SPDX-License-Identifier: Apache-2.0

use crate::grid::Representation;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("width must be strictly positive, got {0}")]
    NonPositiveWidth(f64),

    #[error("wave functions live on different grids")]
    GridMismatch,

    #[error("expected {expected:?} representation, got {found:?}")]
    RepMismatch { expected: Representation, found: Representation },

    #[error("probability mass {mass:.3e} near p = 0 exceeds the threshold {threshold:.1e}")]
    LowMomentumMass { mass: f64, threshold: f64 },

    #[error("starting point {0} lies outside the field domain")]
    OutOfDomain(f64),

    #[error(
        "inconclusive classification (lost = {lost_mass_fraction:.4}, gap = {gap_measure:.4}, \
         components = {invariant_components})"
    )]
    InconclusiveClassification { lost_mass_fraction: f64, gap_measure: f64, invariant_components: usize },

    #[error("vector field vanishes at {0} inside the integration range")]
    ZeroFieldValue(f64),

    #[error("the flow of `{0}` is not complete")]
    NotComplete(String),

    #[error("input is not resolved by the grid (spectral tail {tail:.2e})")]
    RoughInput { tail: f64 },

    #[error("field `{0}` has no plug construction")]
    NotPluggable(String),

    #[error("oscillatory quadrature did not converge at T = {at}: relative error {rel_error:.2e}")]
    QuadratureNonConvergence { at: f64, rel_error: f64 },

    #[error("interval [{a}, {b}] is not inside the grid span")]
    IntervalOutOfRange { a: f64, b: f64 },

    #[error("selected component carries weight {0:.3e}, too small for moments")]
    ZeroWeightComponent(f64),

    #[error("negative-momentum probability {0:.3e} exceeds 1e-10")]
    NegativeMomentumLeak(f64),

    #[error("sample at {0} falls outside the histogram range")]
    BinRangeTooSmall(f64),

    #[error("evolved packet does not fit a box of {0} points")]
    BoxOverflow(usize),

    #[error("sample with |p| = {0:.3e} below the momentum floor")]
    MomentumFloorViolated(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
