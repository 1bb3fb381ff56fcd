// SPDX-License-Identifier: Apache-2.0

//! Straightening coordinates `s(x) = ∫ dξ / X(ξ)` in which a field becomes
//! `∂/∂s`.

use super::classify::golden_min;
use super::field::{Domain, VectorField1D};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

/// Largest magnitude explored when looking for the ends of a component.
const REACH: f64 = 1e12;
/// Increment ratio at or above which an end integral is taken as divergent.
const DIVERGENCE_RATIO: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct Straightening {
    field: VectorField1D,
    x_ref: f64,
    /// Ends of the component of `x_ref` (possibly infinite).
    lo: f64,
    hi: f64,
    /// Puncture bridged by the coordinate, if any.
    glued: Option<f64>,
    global: bool,
    quad: QuadOptions,
}

fn reciprocal(field: &VectorField1D, x: f64) -> f64 {
    let v = field.value(x);
    if v.is_infinite() {
        0.0
    } else {
        1.0 / v
    }
}

/// Builds the straightening coordinate of `field` on the component of
/// `x_ref`. `x_ref` may sit on a puncture that the coordinate bridges.
pub fn straighten(field: &VectorField1D, x_ref: f64) -> Result<Straightening> {
    let quad = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 };
    let dom = field.domain();
    let v = field.value(x_ref);
    let on_puncture = matches!(dom, Domain::Punctured { at } if at == x_ref);
    if !on_puncture && (!dom.contains(x_ref) || !v.is_finite()) {
        return Err(Error::OutOfDomain(x_ref));
    }
    if v == 0.0 {
        return Err(Error::ZeroFieldValue(x_ref));
    }

    let mut glued = None;
    let (lo_raw, hi_raw) = match dom {
        Domain::Line => (f64::NEG_INFINITY, f64::INFINITY),
        Domain::Interval { lo, hi } => (lo, hi),
        Domain::Punctured { at } => {
            if gluable(field, at) {
                glued = Some(at);
                (f64::NEG_INFINITY, f64::INFINITY)
            } else if on_puncture {
                return Err(Error::OutOfDomain(x_ref));
            } else if x_ref > at {
                (at, f64::INFINITY)
            } else {
                (f64::NEG_INFINITY, at)
            }
        }
    };
    let lo = find_end(field, x_ref, lo_raw, -1.0, glued);
    let hi = find_end(field, x_ref, hi_raw, 1.0, glued);
    let mut st = Straightening { field: field.clone(), x_ref, lo, hi, glued, global: false, quad };
    st.global = st.end_diverges(-1.0) && st.end_diverges(1.0);
    Ok(st)
}

/// A puncture can be bridged when `1/X` is integrable up to it from both
/// sides and `X` keeps its sign across it.
fn gluable(field: &VectorField1D, at: f64) -> bool {
    let l = field.value(at - 1e-3);
    let r = field.value(at + 1e-3);
    if !(l.is_finite() && r.is_finite()) || l.signum() != r.signum() {
        return false;
    }
    [-1.0, 1.0].iter().all(|&side| {
        let incs: Vec<f64> = (0..40)
            .map(|k| {
                let a = at + side * 2f64.powi(-k - 1);
                let b = at + side * 2f64.powi(-k);
                integrate(|x| reciprocal(field, x), a, b, &QuadOptions::default()).value.abs()
            })
            .collect();
        !diverges(&incs)
    })
}

/// Ratio test on successive increments of an improper integral.
fn diverges(incs: &[f64]) -> bool {
    let tail = &incs[incs.len() - 4..];
    tail.windows(2).all(|w| w[0] > 0.0 && w[1] >= DIVERGENCE_RATIO * w[0])
}

/// First zero of `X` between `x_ref` and `bound` in direction `dir`,
/// or `bound`. Zeros are sign changes or minima of `|X|` that vanish to
/// roundoff.
fn find_end(field: &VectorField1D, x_ref: f64, bound: f64, dir: f64, glued: Option<f64>) -> f64 {
    let sign0 = field.value(x_ref).signum();
    let mut scale = 0.0f64;
    let mut back = x_ref;
    let mut prev = x_ref;
    let mut step = 1e-3 * x_ref.abs().max(1.0);
    loop {
        let mut next = prev + dir * step;
        if let Some(at) = glued {
            // Walk across the bridged puncture without evaluating on it.
            if (prev - at) * (next - at) <= 0.0 && prev != at {
                next = at + dir * 1e-9 * step.max(1.0);
            }
        }
        if (dir > 0.0 && next >= bound) || (dir < 0.0 && next <= bound) || next.abs() > REACH {
            return bound;
        }
        let v = field.value(next);
        if v == 0.0 {
            return next;
        }
        if v.is_finite() && v.signum() != sign0 {
            let (mut a, mut b) = (prev, next);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                if field.value(m).signum() == sign0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return 0.5 * (a + b);
        }
        let (vb, vp) = (field.value(back).abs(), field.value(prev).abs());
        if back != prev && vp.is_finite() && vb.is_finite() && vp < vb && vp <= v.abs() {
            let m = golden_min(&|x| field.value(x).abs(), back.min(next), back.max(next));
            if field.value(m).abs() <= 1e-12 * scale {
                return m;
            }
        }
        if v.is_finite() {
            scale = scale.max(v.abs());
        }
        back = prev;
        prev = next;
        step *= 1.25;
    }
}

impl Straightening {
    pub fn field(&self) -> &VectorField1D {
        &self.field
    }

    pub fn x_ref(&self) -> f64 {
        self.x_ref
    }

    /// Ends of the component (possibly infinite).
    pub fn component(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `s` maps the component onto all of ℝ.
    pub fn is_global(&self) -> bool {
        self.global
    }

    fn inside(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    fn piece(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let r = integrate(|x| reciprocal(&self.field, x), a, b, &self.quad);
        if !r.value.is_finite() {
            return Err(Error::ZeroFieldValue(b));
        }
        Ok(r.value)
    }

    /// `s(x) = ∫_{x_ref}^{x} dξ / X(ξ)`.
    pub fn s_of_x(&self, x: f64) -> Result<f64> {
        if !self.inside(x) && !(Some(x) == self.glued) {
            let zero = if x >= self.hi { self.hi } else { self.lo };
            return Err(if zero.is_finite() && !self.field.domain().boundaries().contains(&zero) {
                Error::ZeroFieldValue(zero)
            } else {
                Error::OutOfDomain(x)
            });
        }
        match self.glued {
            Some(at) if (self.x_ref - at) * (x - at) < 0.0 => Ok(self.piece(self.x_ref, at)? + self.piece(at, x)?),
            _ => self.piece(self.x_ref, x),
        }
    }

    /// Inverse of [`Self::s_of_x`] by bracketing and bisection.
    pub fn x_of_s(&self, s: f64) -> Result<f64> {
        let sign = self.field.value(self.x_ref + 1e-9 * self.x_ref.abs().max(1.0)).signum();
        // s increases with x where X > 0.
        let dir = if s * sign >= 0.0 { 1.0 } else { -1.0 };
        let end = if dir > 0.0 { self.hi } else { self.lo };
        let mut near = self.x_ref;
        let mut step = 1e-2 * self.x_ref.abs().max(1.0);
        let reached = |x: f64| -> Result<bool> { Ok((self.s_of_x(x)? - s) * dir * sign >= 0.0) };
        if s == 0.0 {
            return Ok(self.x_ref);
        }
        let mut far;
        loop {
            far = near + dir * step;
            if (dir > 0.0 && far >= end) || (dir < 0.0 && far <= end) {
                far = 0.5 * (near + end);
                if !end.is_finite() || (far - near).abs() <= 1e-15 * far.abs().max(1.0) {
                    return Err(Error::OutOfDomain(s));
                }
            }
            if reached(far)? {
                break;
            }
            near = far;
            step *= 2.0;
        }
        let (mut a, mut b) = (near, far);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if reached(m)? {
                b = m;
            } else {
                a = m;
            }
        }
        Ok(0.5 * (a + b))
    }

    fn end_diverges(&self, dir: f64) -> bool {
        let end = if dir > 0.0 { self.hi } else { self.lo };
        let incs: Vec<f64> = if end.is_infinite() {
            let base = self.x_ref.abs().max(1.0) * 2.0;
            (0..30)
                .map(|k| {
                    let a = dir * base * 2f64.powi(k);
                    let b = dir * base * 2f64.powi(k + 1);
                    integrate(|x| reciprocal(&self.field, x), a, b, &QuadOptions::default()).value.abs()
                })
                .collect()
        } else {
            let d0 = (end - self.x_ref).abs();
            (0..40)
                .map(|k| {
                    let a = end - dir * d0 * 2f64.powi(-k);
                    let b = end - dir * d0 * 2f64.powi(-k - 1);
                    integrate(|x| reciprocal(&self.field, x), a, b, &QuadOptions::default()).value.abs()
                })
                .collect()
        };
        diverges(&incs)
    }

    /// The field in its straightening coordinate: `∂/∂s` on ℝ. Only
    /// available when the coordinate is global.
    pub fn straightened(&self) -> Result<VectorField1D> {
        if !self.global {
            return Err(Error::NotComplete(format!("straightened {}", self.field.label())));
        }
        Ok(VectorField1D::constant(1.0).relabeled(format!("d/ds [{}]", self.field.label())))
    }
}
