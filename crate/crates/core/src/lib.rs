// SPDX-License-Identifier: Apache-2.0

//! Free-particle wave packets on uniform 1-D grids, flow quantization of
//! observables linear in momentum, arrival-time distributions and classical
//! ensemble cross-checks.
//!
//! Units are carried by [`PhysicalParams`]; nothing assumes `ħ = m = 1`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrival;
pub mod classical;
pub mod error;
pub mod flow;
pub mod grid;
pub mod interp;
pub mod ode;
#[allow(clippy::excessive_precision)]
pub mod quad;
pub mod spectral;
pub mod sum;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{
    gaussian_packet, inner_product, norm_squared, probability_current, CurrentField, Grid1D, PhysicalParams,
    Representation, WaveFunction,
};
pub use num_complex::Complex64;
pub use transforms::TransformReport;
