// SPDX-License-Identifier: Apache-2.0

//! Lie derivative of half-densities, `£_X ψ = ½ (X ψ' + (X ψ)')`.

use num_complex::Complex64;

use super::field::VectorField1D;
use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::spectral::{derivative, spectral_tail};

pub const ROUGHNESS_LIMIT: f64 = 1e-8;

/// Samples of `X` on the grid of `psi`, zero off the domain.
fn field_samples(psi: &WaveFunction, field: &VectorField1D) -> Vec<f64> {
    psi.grid()
        .points()
        .map(|x| {
            let v = field.value(x);
            if field.domain().contains(x) && v.is_finite() {
                v
            } else {
                0.0
            }
        })
        .collect()
}

/// `£_X ψ` with spectral derivatives. The discrete operator is exactly
/// anti-Hermitian for real `X`.
pub fn lie_derivative(psi: &WaveFunction, field: &VectorField1D) -> Result<WaveFunction> {
    let tail = spectral_tail(psi.values());
    if tail > ROUGHNESS_LIMIT {
        return Err(Error::RoughInput { tail });
    }
    let h = psi.grid().step();
    let xs = field_samples(psi, field);
    let d_psi = derivative(psi.values(), h);
    let x_psi: Vec<Complex64> = psi.values().iter().zip(&xs).map(|(v, x)| v * x).collect();
    let d_x_psi = derivative(&x_psi, h);
    let values = d_psi.iter().zip(&d_x_psi).zip(&xs).map(|((a, b), x)| 0.5 * (a * x + b)).collect();
    Ok(psi.with_values(values))
}

/// `f̂ ψ = (ħ/i) £_X ψ`.
pub fn quantized_observable(psi: &WaveFunction, field: &VectorField1D) -> Result<WaveFunction> {
    let lie = lie_derivative(psi, field)?;
    Ok(lie.scaled(Complex64::new(0.0, -psi.params().hbar())))
}
