// SPDX-License-Identifier: Apache-2.0

//! Off-grid evaluation of complex samples by separate cubic interpolation of
//! modulus and unwrapped phase.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::grid::Grid1D;

/// Phase jumps larger than this between neighbours are treated as
/// ambiguous.
const MAX_PHASE_STEP: f64 = 0.9 * PI;
/// Below this modulus ratio inside a stencil the phase is not trusted.
const MIN_MODULUS_RATIO: f64 = 1e-3;

fn wrap(a: f64) -> f64 {
    let mut d = a % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

fn linear(values: &[Complex64], k: usize, t: f64) -> Complex64 {
    values[k] * (1.0 - t) + values[k + 1] * t
}

/// Value at `x`, zero outside the sampled span.
///
/// Uses 4-point Lagrange interpolation of `|v|` and of the unwrapped phase,
/// falling back to linear interpolation of the complex samples at the grid
/// ends, near nodes, and wherever unwrapping is ambiguous.
pub fn amp_phase_cubic(values: &[Complex64], grid: &Grid1D, x: f64) -> Complex64 {
    let n = values.len();
    let f = grid.locate(x);
    if !(f >= 0.0 && f <= (n - 1) as f64) {
        return Complex64::new(0.0, 0.0);
    }
    let k = (f.floor() as usize).min(n - 2);
    let t = f - k as f64;
    if t == 0.0 {
        return values[k];
    }
    if k == 0 || k + 2 >= n {
        return linear(values, k, t);
    }
    let stencil = &values[k - 1..k + 3];
    let amps = [stencil[0].norm(), stencil[1].norm(), stencil[2].norm(), stencil[3].norm()];
    let amax = amps.iter().copied().fold(0.0, f64::max);
    if amax == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if amps.iter().any(|&a| a < MIN_MODULUS_RATIO * amax) {
        return linear(values, k, t);
    }
    let mut phases = [0.0; 4];
    phases[0] = stencil[0].arg();
    for i in 1..4 {
        let step = wrap(stencil[i].arg() - stencil[i - 1].arg());
        if step.abs() > MAX_PHASE_STEP {
            return linear(values, k, t);
        }
        phases[i] = phases[i - 1] + step;
    }
    let w = lagrange4(t);
    let amp: f64 = (0..4).map(|i| w[i] * amps[i]).sum();
    let phase: f64 = (0..4).map(|i| w[i] * phases[i]).sum();
    Complex64::from_polar(amp.max(0.0), phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_gaussian_times_quadratic_phase_at_nodes() {
        let grid = Grid1D::new(-5.0, 0.1, 101).unwrap();
        let f = |x: f64| Complex64::from_polar((-x * x).exp(), 3.0 * x + 0.4 * x * x);
        let vals: Vec<Complex64> = grid.points().map(f).collect();
        assert_eq!(amp_phase_cubic(&vals, &grid, grid.point(40)), vals[40]);
        let x = 0.234;
        // Phase is reproduced exactly; the modulus to cubic order.
        let got = amp_phase_cubic(&vals, &grid, x);
        assert!((got.arg() - f(x).arg()).abs() < 1e-12);
        assert!((got.norm() - f(x).norm()).abs() < 1e-4);
    }

    #[test]
    fn outside_is_zero() {
        let grid = Grid1D::new(0.0, 1.0, 10).unwrap();
        let vals = vec![Complex64::new(1.0, 0.0); 10];
        assert_eq!(amp_phase_cubic(&vals, &grid, -0.5), Complex64::new(0.0, 0.0));
        assert_eq!(amp_phase_cubic(&vals, &grid, 9.5), Complex64::new(0.0, 0.0));
        assert_eq!(amp_phase_cubic(&vals, &grid, 9.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn falls_back_near_a_node() {
        let grid = Grid1D::new(-2.0, 0.5, 9).unwrap();
        let vals: Vec<Complex64> = grid.points().map(|x| Complex64::new(x, 0.0)).collect();
        // Sign change of a real function: linear interpolation is exact.
        let got = amp_phase_cubic(&vals, &grid, 0.1);
        assert!((got - Complex64::new(0.1, 0.0)).norm() < 1e-15);
    }
}
