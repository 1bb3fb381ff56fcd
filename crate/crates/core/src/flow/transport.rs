// SPDX-License-Identifier: Apache-2.0

//! Unitary lift of a complete flow to half-densities:
//! `(Ĝ_t ψ)(x) = ψ(G_{-t}(x)) · √|G'_{-t}(x)|`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::classify::{classify_flow, FlowVerdict, ProbeSpec};
use super::field::VectorField1D;
use super::integrate::flow_with_jacobian;
use crate::error::{Error, Result};
use crate::grid::{norm_squared, WaveFunction};
use crate::ode::Tolerances;
use crate::spectral::{BandLimited, KernelSign};
use crate::transforms::TransformReport;

/// A field whose flow has been classified complete.
#[derive(Debug, Clone)]
pub struct CompleteField(VectorField1D);

impl CompleteField {
    pub fn certify(field: &VectorField1D, spec: &ProbeSpec) -> Result<Self> {
        match classify_flow(field, spec) {
            Ok(c) if c.verdict == FlowVerdict::Complete => Ok(Self(field.clone())),
            Ok(_) | Err(Error::InconclusiveClassification { .. }) => Err(Error::NotComplete(field.label().to_string())),
            Err(e) => Err(e),
        }
    }

    pub fn field(&self) -> &VectorField1D {
        &self.0
    }
}

/// Transports `psi` along `field` for time `t` after certifying
/// completeness with the default probes.
pub fn transport(psi: &WaveFunction, field: &VectorField1D, t: f64) -> Result<(WaveFunction, TransformReport)> {
    let cf = CompleteField::certify(field, &ProbeSpec::default())?;
    Ok(transport_complete(psi, &cf, t))
}

/// Transport along an already certified field. Off-grid values of `psi`
/// come from its band-limited interpolant; points whose preimage leaves the
/// grid receive zero.
pub fn transport_complete(psi: &WaveFunction, field: &CompleteField, t: f64) -> (WaveFunction, TransformReport) {
    let f = field.field();
    let bl = BandLimited::new(psi.values(), psi.grid(), psi.params().hbar(), KernelSign::Plus, None);
    let tol = Tolerances { rel: 1e-12, abs: 1e-14, ..Default::default() };
    let values: Vec<Complex64> = psi
        .grid()
        .points()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&x| match flow_with_jacobian(f, x, -t, tol) {
            Some((y, j)) => bl.eval(y) * j.abs().sqrt(),
            None => Complex64::new(0.0, 0.0),
        })
        .collect();
    let out = psi.with_values(values);
    let report = TransformReport::new(norm_squared(psi), norm_squared(&out), 0.0);
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, Grid1D, PhysicalParams};

    fn packet() -> WaveFunction {
        let grid = Grid1D::spanning(-40.0, 40.0, 1024).unwrap();
        gaussian_packet(grid, PhysicalParams::natural(), 1.5, 0.8, 0.5).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_field_shifts() {
        let psi = packet();
        let (out, rep) = transport(&psi, &VectorField1D::constant(1.0), 2.5).unwrap();
        // Packet phases are referenced to the center, so ψ(x - 2.5) is the
        // same packet centered at 4.
        let shifted = gaussian_packet(*psi.grid(), *psi.params(), 4.0, 0.8, 0.5).unwrap();
        assert!(max_diff(out.values(), shifted.values()) < 1e-10);
        assert!(rep.unitarity_defect <= 1e-10);
    }

    #[test]
    fn homothety_matches_closed_form() {
        let psi = packet();
        let (out, rep) = transport(&psi, &VectorField1D::linear(1.0), 2f64.ln()).unwrap();
        let bl = BandLimited::new(psi.values(), psi.grid(), 1.0, KernelSign::Plus, None);
        let expected: Vec<Complex64> = psi.grid().points().map(|x| bl.eval(x / 2.0) / 2f64.sqrt()).collect();
        assert!(max_diff(out.values(), &expected) <= 1e-8);
        assert!(rep.unitarity_defect <= 1e-8, "{rep:?}");
    }

    #[test]
    fn incomplete_fields_are_rejected() {
        let psi = packet();
        assert!(matches!(transport(&psi, &VectorField1D::quadratic(1.0), 0.1), Err(Error::NotComplete(_))));
        assert!(matches!(transport(&psi, &VectorField1D::arrival(1.0), 0.1), Err(Error::NotComplete(_))));
    }
}
