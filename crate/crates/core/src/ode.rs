// SPDX-License-Identifier: Apache-2.0

//! Dormand–Prince 5(4) steps for small autonomous systems.

/// Tolerances and step-size limits for [`Dopri5`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    /// Steps below this magnitude are refused.
    pub min_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-10, abs: 1e-12, min_step: 1e-14 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Outcome of one attempted step.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub y: [f64; N],
    /// Scaled error norm; the step is acceptable when `<= 1`.
    pub error: f64,
}

/// Step-size factor suggested by an error norm.
pub fn step_factor(error: f64) -> f64 {
    if error == 0.0 {
        5.0
    } else if !error.is_finite() {
        0.1
    } else {
        (0.9 * error.powf(-0.2)).clamp(0.1, 5.0)
    }
}

pub struct Dopri5<F, const N: usize> {
    rhs: F,
    pub tol: Tolerances,
}

impl<F, const N: usize> Dopri5<F, N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, tol: Tolerances) -> Self {
        Self { rhs, tol }
    }

    pub fn rhs(&self, y: &[f64; N]) -> [f64; N] {
        (self.rhs)(y)
    }

    /// One step of size `h` (either sign). Non-finite stages give an infinite
    /// error.
    pub fn step(&self, y: &[f64; N], h: f64) -> Step<N> {
        let mut k = [[0.0; N]; 7];
        k[0] = (self.rhs)(y);
        for s in 1..7 {
            let mut ys = *y;
            for (i, v) in ys.iter_mut().enumerate() {
                for j in 0..s {
                    *v += h * A[s][j] * k[j][i];
                }
            }
            debug_assert!(C[s] >= 0.0);
            k[s] = (self.rhs)(&ys);
        }
        let mut out = *y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut acc = 0.0;
            let mut e = 0.0;
            for s in 0..7 {
                acc += B[s] * k[s][i];
                e += E[s] * k[s][i];
            }
            out[i] += h * acc;
            let scale = self.tol.abs + self.tol.rel * y[i].abs().max(out[i].abs());
            err = err.max((h * e).abs() / scale);
        }
        if out.iter().any(|v| !v.is_finite()) || !err.is_finite() {
            err = f64::INFINITY;
        }
        Step { y: out, error: err }
    }

    /// Initial step magnitude guess (Hairer–Nørsett–Wanner).
    pub fn initial_step(&self, y: &[f64; N], span: f64) -> f64 {
        let f0 = (self.rhs)(y);
        let d0 = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let d1 = f0.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span.abs()).max(self.tol.min_step)
    }

    /// Integrates to `t` (any sign). Returns `None` if the step size
    /// collapses below the floor.
    pub fn integrate(&self, y0: [f64; N], t: f64) -> Option<[f64; N]> {
        let mut y = y0;
        let mut done = 0.0f64;
        let dir = t.signum();
        let mut h = self.initial_step(&y, t);
        while done < t.abs() {
            let remaining = t.abs() - done;
            let last = h >= remaining;
            let hh = if last { remaining } else { h };
            let st = self.step(&y, dir * hh);
            if st.error <= 1.0 {
                y = st.y;
                done = if last { t.abs() } else { done + hh };
            }
            h = hh * step_factor(st.error);
            if h < self.tol.min_step && done < t.abs() {
                return None;
            }
        }
        Some(y)
    }
}
