// SPDX-License-Identifier: Apache-2.0

//! Plugged transport for `X = a x²`.
//!
//! `G_t(x) = x / (1 - a t x)` is a bijection of the projective line. Mass
//! that escapes to infinity re-enters from the other end, and the states
//! landing in the gap `{y : 1 + a t y < 0}` carry an extra constant phase.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::field::{FieldKind, VectorField1D};
use crate::error::{Error, Result};
use crate::grid::{norm_squared, WaveFunction};
use crate::spectral::{BandLimited, KernelSign};
use crate::transforms::TransformReport;

pub fn pluggable_transport(
    psi: &WaveFunction,
    field: &VectorField1D,
    t: f64,
    plug_phase: f64,
) -> Result<(WaveFunction, TransformReport)> {
    let a = match field.kind() {
        FieldKind::Quadratic(a) if a != 0.0 => a,
        _ => return Err(Error::NotPluggable(field.label().to_string())),
    };
    if !(0.0..2.0 * PI).contains(&plug_phase) {
        return Err(Error::InvalidParameter(format!("plug phase {plug_phase} outside [0, 2π)")));
    }
    let bl = BandLimited::new(psi.values(), psi.grid(), psi.params().hbar(), KernelSign::Plus, None);
    let plug = Complex64::from_polar(1.0, plug_phase * t.signum());
    let values: Vec<Complex64> = psi
        .grid()
        .points()
        .map(|y| {
            let d = 1.0 + a * t * y;
            if d == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let v = bl.eval(y / d) / d.abs();
            if d < 0.0 {
                v * plug
            } else {
                v
            }
        })
        .collect();
    let out = psi.with_values(values);
    let report = TransformReport::new(norm_squared(psi), norm_squared(&out), 0.0);
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, inner_product, Grid1D, PhysicalParams};

    fn grid() -> Grid1D {
        Grid1D::spanning(-100.0, 100.0, 16384).unwrap()
    }

    #[test]
    fn norm_and_phase_dependence() {
        let psi = gaussian_packet(grid(), PhysicalParams::natural(), 0.0, 1.0, 0.5).unwrap();
        let f = VectorField1D::quadratic(1.0);
        let (a, ra) = pluggable_transport(&psi, &f, 0.2, 0.0).unwrap();
        let (b, rb) = pluggable_transport(&psi, &f, 0.2, 2.0).unwrap();
        assert!(ra.unitarity_defect <= 1e-5, "{ra:?}");
        assert!(rb.unitarity_defect <= 1e-5, "{rb:?}");
        let ma = inner_product(&a, &a).unwrap();
        let mb = inner_product(&a, &b).unwrap();
        assert!((ma - mb).norm() > 0.0);
    }

    #[test]
    fn plug_unused_when_nothing_escapes() {
        // Support far on the left: 1 + t y stays positive.
        let psi = gaussian_packet(grid(), PhysicalParams::natural(), -20.0, 0.0, 0.5).unwrap();
        let f = VectorField1D::quadratic(1.0);
        let (a, _) = pluggable_transport(&psi, &f, 0.02, 0.0).unwrap();
        let (b, _) = pluggable_transport(&psi, &f, 0.02, 4.0).unwrap();
        let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-10);
    }

    #[test]
    fn rejects_other_fields() {
        let psi = gaussian_packet(grid(), PhysicalParams::natural(), 0.0, 0.0, 0.5).unwrap();
        assert!(matches!(pluggable_transport(&psi, &VectorField1D::cubic(1.0), 0.1, 0.0), Err(Error::NotPluggable(_))));
        assert!(matches!(
            pluggable_transport(&psi, &VectorField1D::quadratic(1.0), 0.1, 7.0),
            Err(Error::InvalidParameter(_))
        ));
    }
}
