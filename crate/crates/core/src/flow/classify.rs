// SPDX-License-Identifier: Apache-2.0

//! Completeness diagnostics for 1-D flows from a fixed set of probes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{Domain, VectorField1D};
use super::integrate::{integrate_flow_with, EscapeKind, FlowOptions, FlowResult, DEFAULT_ESCAPE_RADIUS};
use crate::error::{Error, Result};

/// Probe layout for [`classify_flow`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSpec {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub t_probe: f64,
    pub escape_radius: f64,
    pub tol: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { lo: -10.0, hi: 10.0, samples: 2048, t_probe: 1.0, escape_radius: DEFAULT_ESCAPE_RADIUS, tol: 1e-3 }
    }
}

impl ProbeSpec {
    fn validate(&self) -> Result<()> {
        if !(self.hi > self.lo) || self.samples < 2 || !(self.t_probe > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("bad probe spec {self:?}")));
        }
        if !(self.escape_radius > self.lo.abs().max(self.hi.abs())) {
            return Err(Error::InvalidParameter("escape radius must exceed the probe interval".into()));
        }
        Ok(())
    }

    /// Cell midpoints of the probe interval.
    pub fn probes(&self) -> impl Iterator<Item = f64> + '_ {
        let w = (self.hi - self.lo) / self.samples as f64;
        (0..self.samples).map(move |i| self.lo + (i as f64 + 0.5) * w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowVerdict {
    Complete,
    PluggableIncomplete,
    Incurable,
    HalfLineIncomplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowDiagnostics {
    /// Fraction of probes whose trajectory escapes within the probe time,
    /// in the time direction with more escapes.
    pub lost_mass_fraction: f64,
    /// Fraction of probe targets that have no preimage, i.e. escape under
    /// the opposite time direction.
    pub gap_measure: f64,
    pub invariant_components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowClass {
    pub verdict: FlowVerdict,
    pub diagnostics: FlowDiagnostics,
    /// A few escaped trajectories, with extrapolated escape times.
    pub escape_samples: Vec<FlowResult>,
}

const ESCAPE_SAMPLES: usize = 8;
/// Relative lost/gap mismatch accepted as a plug; values within a factor
/// two of it are reported as inconclusive.
const PLUG_MISMATCH: f64 = 0.05;

struct Probe {
    x0: f64,
    forward: FlowResult,
    backward: FlowResult,
}

pub fn classify_flow(field: &VectorField1D, spec: &ProbeSpec) -> Result<FlowClass> {
    spec.validate()?;
    let opts = FlowOptions { escape_radius: spec.escape_radius, estimate_escape_time: false, ..Default::default() };
    let starts: Vec<f64> = spec
        .probes()
        .filter(|&x| field.domain().contains(x) && field.value(x).is_finite() && field.value(x) != 0.0)
        .collect();
    let probes: Vec<Probe> = starts
        .par_iter()
        .map(|&x0| -> Result<Probe> {
            Ok(Probe {
                x0,
                forward: integrate_flow_with(field, x0, spec.t_probe, &opts)?,
                backward: integrate_flow_with(field, x0, -spec.t_probe, &opts)?,
            })
        })
        .collect::<Result<_>>()?;
    // Zero probes sit at fixed points and never escape.
    let n = spec.samples as f64;
    let fwd = probes.iter().filter(|p| p.forward.escaped).count() as f64 / n;
    let bwd = probes.iter().filter(|p| p.backward.escaped).count() as f64 / n;
    let (lost, gap) = if fwd >= bwd { (fwd, bwd) } else { (bwd, fwd) };

    let cuts = split_points(field, spec);
    let components = cuts.len() + 1;
    let diagnostics = FlowDiagnostics { lost_mass_fraction: lost, gap_measure: gap, invariant_components: components };

    let tol = spec.tol;
    let inconclusive = || Error::InconclusiveClassification {
        lost_mass_fraction: lost,
        gap_measure: gap,
        invariant_components: components,
    };
    if [lost, gap].iter().any(|&v| v > 0.5 * tol && v < 2.0 * tol) {
        return Err(inconclusive());
    }

    let verdict = if lost <= tol && gap <= tol {
        FlowVerdict::Complete
    } else if lost > tol && gap > tol {
        let mismatch = (lost - gap) / lost;
        if mismatch <= PLUG_MISMATCH / 2.0 {
            FlowVerdict::PluggableIncomplete
        } else if half_line(&probes, &cuts) {
            FlowVerdict::HalfLineIncomplete
        } else {
            return Err(inconclusive());
        }
    } else if half_line(&probes, &cuts) {
        FlowVerdict::HalfLineIncomplete
    } else {
        FlowVerdict::Incurable
    };

    let escaped: Vec<&Probe> = probes.iter().filter(|p| p.forward.escaped || p.backward.escaped).collect();
    let stride = (escaped.len() / ESCAPE_SAMPLES).max(1);
    let full = FlowOptions { escape_radius: spec.escape_radius, ..Default::default() };
    let escape_samples = escaped
        .iter()
        .step_by(stride)
        .take(ESCAPE_SAMPLES)
        .map(|p| {
            let t = if p.forward.escaped { spec.t_probe } else { -spec.t_probe };
            integrate_flow_with(field, p.x0, t, &full)
        })
        .collect::<Result<_>>()?;

    Ok(FlowClass { verdict, diagnostics, escape_samples })
}

/// Every component escapes, in one time direction only, and always into a
/// finite boundary point.
fn half_line(probes: &[Probe], cuts: &[f64]) -> bool {
    if cuts.is_empty() {
        return false;
    }
    let component = |x: f64| cuts.iter().filter(|&&c| x > c).count();
    let mut seen = vec![(false, false); cuts.len() + 1];
    for p in probes {
        let k = component(p.x0);
        for (r, dir) in [(&p.forward, 0), (&p.backward, 1)] {
            match r.escape_kind() {
                None => {}
                Some(EscapeKind::Infinity) => return false,
                Some(EscapeKind::Boundary { .. }) => {
                    if dir == 0 {
                        seen[k].0 = true;
                    } else {
                        seen[k].1 = true;
                    }
                }
            }
        }
    }
    seen.iter().all(|&(f, b)| f ^ b)
}

/// Points inside the probe range that separate invariant pieces: punctures
/// and zeros of `X`. The probe range is first clipped to the domain.
pub(crate) fn split_points(field: &VectorField1D, spec: &ProbeSpec) -> Vec<f64> {
    let (mut lo, mut hi) = (spec.lo, spec.hi);
    let mut cuts = Vec::new();
    match field.domain() {
        Domain::Line => {}
        Domain::Interval { lo: a, hi: b } => {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        Domain::Punctured { at } => {
            if at > lo && at < hi {
                cuts.push(at);
            }
        }
    }
    if !(hi > lo) {
        return cuts;
    }
    let mut ends = vec![lo];
    ends.extend(cuts.iter().copied());
    ends.push(hi);
    let n = spec.samples.max(256) * 2;
    for w in ends.windows(2) {
        let zs = zeros_in(field, w[0], w[1], n);
        cuts.extend(zs);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));
    cuts
}

fn zeros_in(field: &VectorField1D, a: f64, b: f64, n: usize) -> Vec<f64> {
    let w = (b - a) / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * w).collect();
    let vals: Vec<f64> =
        xs.iter().map(|&x| if field.domain().contains(x) { field.value(x) } else { f64::NAN }).collect();
    let scale = vals.iter().filter(|v| v.is_finite()).map(|v| v.abs()).fold(0.0, f64::max);
    let mut zeros = Vec::new();
    if scale == 0.0 {
        return zeros;
    }
    let f = |x: f64| field.value(x);
    for i in 0..n {
        let v = vals[i];
        if !v.is_finite() {
            continue;
        }
        if v == 0.0 {
            zeros.push(xs[i]);
            continue;
        }
        if i + 1 < n && vals[i + 1].is_finite() && vals[i + 1] != 0.0 && v.signum() != vals[i + 1].signum() {
            zeros.push(bisect(&f, xs[i], xs[i + 1]));
            continue;
        }
        if i > 0 && i + 1 < n {
            let (l, r) = (vals[i - 1].abs(), vals[i + 1].abs());
            if v.abs() <= l && v.abs() <= r && (v.abs() < l || v.abs() < r) {
                let m = golden_min(&|x| f(x).abs(), xs[i - 1], xs[i + 1]);
                if f(m).abs() <= 1e-12 * scale {
                    zeros.push(m);
                }
            }
        }
    }
    zeros
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(field: &VectorField1D) -> FlowClass {
        classify_flow(field, &ProbeSpec::default()).unwrap()
    }

    #[test]
    fn translations_and_homothety_are_complete() {
        let c = verdict(&VectorField1D::constant(1.0));
        assert_eq!(c.verdict, FlowVerdict::Complete);
        assert_eq!(c.diagnostics.invariant_components, 1);
        let c = verdict(&VectorField1D::linear(1.0));
        assert_eq!(c.verdict, FlowVerdict::Complete);
        assert_eq!(c.diagnostics.invariant_components, 2);
    }

    #[test]
    fn quadratic_is_pluggable() {
        let c = verdict(&VectorField1D::quadratic(1.0));
        assert_eq!(c.verdict, FlowVerdict::PluggableIncomplete);
        let d = c.diagnostics;
        assert!((d.lost_mass_fraction - 0.45).abs() < 1e-3, "{d:?}");
        assert!((d.lost_mass_fraction - d.gap_measure).abs() < 1e-3);
        assert!(!c.escape_samples.is_empty());
        for s in &c.escape_samples {
            let exact = 1.0 / s.start;
            assert!((s.escape_time_estimate.unwrap() - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn cubic_is_incurable() {
        let c = verdict(&VectorField1D::cubic(1.0));
        assert_eq!(c.verdict, FlowVerdict::Incurable);
        assert_eq!(c.diagnostics.gap_measure, 0.0);
    }

    #[test]
    fn arrival_field_is_half_line_incomplete() {
        let c = verdict(&VectorField1D::arrival(1.0));
        assert_eq!(c.verdict, FlowVerdict::HalfLineIncomplete);
        assert_eq!(c.diagnostics.invariant_components, 2);
        // Backward escape for |p| < √(2mt).
        assert!((c.diagnostics.lost_mass_fraction - 2f64.sqrt() / 10.0).abs() < 2e-3);
    }

    #[test]
    fn near_threshold_is_inconclusive() {
        // X = x² on [-10, 10] with t chosen so about 0.1% escapes.
        let spec = ProbeSpec { t_probe: 1.0 / 9.985, ..Default::default() };
        let r = classify_flow(&VectorField1D::quadratic(1.0), &spec);
        assert!(matches!(r, Err(Error::InconclusiveClassification { .. })), "{r:?}");
    }

    #[test]
    fn deterministic() {
        let f = VectorField1D::arrival(1.0);
        assert_eq!(verdict(&f), verdict(&f));
    }
}
