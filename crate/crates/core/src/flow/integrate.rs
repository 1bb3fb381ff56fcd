// SPDX-License-Identifier: Apache-2.0

//! Flow maps `x ↦ G_t(x)` of `dx/dt = X(x)` with escape detection.

use serde::Serialize;

use super::field::VectorField1D;
use crate::error::{Error, Result};
use crate::ode::{step_factor, Dopri5, Tolerances};

pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EscapeKind {
    /// `|x|` reached the escape radius.
    Infinity,
    /// The trajectory ran into a finite boundary point or puncture.
    Boundary { at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Endpoint {
    At { x: f64 },
    Escaped(EscapeKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowResult {
    pub start: f64,
    pub t_requested: f64,
    /// Signed time actually integrated.
    pub t_reached: f64,
    pub endpoint: Endpoint,
    pub escaped: bool,
    /// Extrapolated signed escape time.
    pub escape_time_estimate: Option<f64>,
}

impl FlowResult {
    pub fn position(&self) -> Option<f64> {
        match self.endpoint {
            Endpoint::At { x } => Some(x),
            Endpoint::Escaped(_) => None,
        }
    }

    pub fn escape_kind(&self) -> Option<EscapeKind> {
        match self.endpoint {
            Endpoint::At { .. } => None,
            Endpoint::Escaped(k) => Some(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub escape_radius: f64,
    pub tol: Tolerances,
    pub estimate_escape_time: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { escape_radius: DEFAULT_ESCAPE_RADIUS, tol: Tolerances::default(), estimate_escape_time: true }
    }
}

pub fn integrate_flow(field: &VectorField1D, x0: f64, t: f64, escape_radius: f64) -> Result<FlowResult> {
    integrate_flow_with(field, x0, t, &FlowOptions { escape_radius, ..Default::default() })
}

/// Distance-like gauge that grows towards escape: `|x|` for escape to
/// infinity, `1/d` for a boundary at distance `d`.
fn gauges(field: &VectorField1D, x: f64) -> (f64, f64) {
    let d = field.domain().boundary_distance(x);
    (x.abs(), if d > 0.0 { 1.0 / d } else { f64::INFINITY })
}

fn nearest_boundary(field: &VectorField1D, x: f64) -> Option<f64> {
    field.domain().boundaries().into_iter().min_by(|a, b| (x - a).abs().total_cmp(&(x - b).abs()))
}

/// Aitken extrapolation of crossing times at geometrically spaced levels;
/// exact when the approach is a power law.
fn aitken(t: [f64; 3]) -> f64 {
    let d1 = t[1] - t[0];
    let d2 = t[2] - t[1];
    let den = d2 - d1;
    if den == 0.0 || !den.is_finite() {
        t[2]
    } else {
        t[2] - d2 * d2 / den
    }
}

pub fn integrate_flow_with(field: &VectorField1D, x0: f64, t: f64, opts: &FlowOptions) -> Result<FlowResult> {
    let dom = field.domain();
    if !dom.contains(x0) || !field.value(x0).is_finite() {
        return Err(Error::OutOfDomain(x0));
    }
    let radius = opts.escape_radius;
    if !(radius > x0.abs()) {
        return Err(Error::InvalidParameter(format!("escape radius {radius} must exceed |x0| = {}", x0.abs())));
    }
    let solver = Dopri5::new(|y: &[f64; 1]| [field.value(y[0])], opts.tol);
    let dir = if t < 0.0 { -1.0 } else { 1.0 };
    let total = t.abs();
    let mut x = x0;
    let mut done = 0.0f64;
    let mut h = solver.initial_step(&[x], total);
    // Crossing times at levels R/4, R/2, R of each gauge.
    let levels = [radius / 4.0, radius / 2.0, radius];
    let mut cross = [[f64::NAN; 3]; 2];

    let escape = loop {
        if done >= total {
            break None;
        }
        let remaining = total - done;
        let last = h >= remaining;
        let hh = if last { remaining } else { h };
        let st = solver.step(&[x], dir * hh);
        let mut err = st.error;
        let xn = st.y[0];
        if err <= 1.0 && !(dom.same_piece(x, xn) && field.value(xn).is_finite()) {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            if opts.estimate_escape_time {
                let (g0, g1) = (gauges(field, x), gauges(field, xn));
                for (gi, (a, b)) in [(g0.0, g1.0), (g0.1, g1.1)].into_iter().enumerate() {
                    for (li, &lvl) in levels.iter().enumerate() {
                        if cross[gi][li].is_nan() && a < lvl && b >= lvl {
                            let sub = locate_crossing(&solver, field, x, dir, hh, lvl, gi);
                            cross[gi][li] = done + sub;
                        }
                    }
                }
            }
            x = xn;
            done = if last { total } else { done + hh };
            let (gx, gb) = gauges(field, x);
            if gx >= radius {
                break Some((EscapeKind::Infinity, 0));
            }
            if gb >= radius {
                let at = nearest_boundary(field, x).expect("finite gauge implies a boundary");
                break Some((EscapeKind::Boundary { at }, 1));
            }
        }
        h = hh * step_factor(err);
        if h < opts.tol.min_step && done < total {
            // Step-size collapse: a singularity in finite time.
            let near = nearest_boundary(field, x).filter(|b| (x - b).abs() < 1e-3 * x.abs().max(1.0));
            break Some(match near {
                Some(at) => (EscapeKind::Boundary { at }, 1),
                None => (EscapeKind::Infinity, 0),
            });
        }
    };

    Ok(match escape {
        None => FlowResult {
            start: x0,
            t_requested: t,
            t_reached: t,
            endpoint: Endpoint::At { x },
            escaped: false,
            escape_time_estimate: None,
        },
        Some((kind, gi)) => {
            let c = cross[gi];
            let est = if !opts.estimate_escape_time {
                None
            } else if c.iter().all(|v| v.is_finite()) {
                Some(dir * aitken(c))
            } else {
                Some(dir * done)
            };
            FlowResult {
                start: x0,
                t_requested: t,
                t_reached: dir * done,
                endpoint: Endpoint::Escaped(kind),
                escaped: true,
                escape_time_estimate: est,
            }
        }
    })
}

/// Sub-step length at which gauge `gi` reaches `level`, by bisection on
/// single steps from the pre-crossing state.
fn locate_crossing<F>(
    solver: &Dopri5<F, 1>,
    field: &VectorField1D,
    x: f64,
    dir: f64,
    h: f64,
    level: f64,
    gi: usize,
) -> f64
where
    F: Fn(&[f64; 1]) -> [f64; 1],
{
    let gauge = |s: f64| {
        let y = solver.step(&[x], dir * s).y[0];
        let g = gauges(field, y);
        if gi == 0 {
            g.0
        } else {
            g.1
        }
    };
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gauge(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integrates `dx/dt = X`, `dJ/dt = X'(x) J` from `(x0, 1)`; returns
/// `(G_t(x0), G_t'(x0))` or `None` if the trajectory leaves the domain.
pub fn flow_with_jacobian(field: &VectorField1D, x0: f64, t: f64, tol: Tolerances) -> Option<(f64, f64)> {
    if !field.domain().contains(x0) {
        return None;
    }
    if t == 0.0 {
        return Some((x0, 1.0));
    }
    let solver = Dopri5::new(|y: &[f64; 2]| [field.value(y[0]), field.derivative(y[0]) * y[1]], tol);
    let y = solver.integrate([x0, 1.0], t)?;
    if field.domain().same_piece(x0, y[0]) && y[1].is_finite() {
        Some((y[0], y[1]))
    } else {
        None
    }
}
