// SPDX-License-Identifier: Apache-2.0

//! Oriented arrival time `T = -m x / |p|` of a free particle at the plane
//! `x = 0`: spectral amplitude, density, mover decomposition and moments.
//!
//! Right-movers (`p > 0`) occupy `s > 0` and left-movers `s < 0`; the two
//! amplitudes `φ₊`, `φ₋` add, so the density carries an interference term
//! `2 Re(φ₊ φ̄₋)` whose integral vanishes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::{norm_squared, probability_current, Grid1D, PhysicalParams, Representation, WaveFunction};
use crate::quad::{integrate_complex, QuadOptions};
use crate::spectral::{BandLimited, KernelSign};
use crate::sum::{pairwise, trapezoid};
use crate::transforms::{
    check_low_mass, evolve_free, from_arrival_time_on, low_momentum_mass, momentum_of_oriented_energy, oriented_energy,
    oriented_energy_grid_for, to_arrival_time_on, to_momentum, to_oriented_energy_on, to_position_on,
    OrientedEnergyOptions, TransformReport, ARRIVAL_KERNEL,
};

/// Largest probability allowed on the single `p = 0` sample.
pub const ZERO_SAMPLE_LIMIT: f64 = 1e-10;
/// Relative error allowed per arrival time in the quadrature oracle.
pub const ORACLE_REL_TOL: f64 = 1e-8;
/// Weight below which a component has no moments.
pub const MIN_COMPONENT_WEIGHT: f64 = 1e-6;
/// Largest zero-padding factor tried by the fast path.
const MAX_PADDING: usize = 64;
/// Relative amplitude at the padded window edge accepted as decayed.
const PAD_DECAY: f64 = 1e-9;
/// Relative amplitude above which momentum content must fit the time band.
const BAND_REL: f64 = 1e-8;

/// Classical arrival-time functions of a free particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalArrival {
    pub mass: f64,
}

impl ClassicalArrival {
    /// `t(x, p) = -m x / p`.
    pub fn t_of_xp(&self, x: f64, p: f64) -> f64 {
        -self.mass * x / p
    }

    /// `T(x, p) = -m x / |p| = sgn(p) t(x, p)`.
    pub fn oriented(&self, x: f64, p: f64) -> f64 {
        -self.mass * x / p.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Total,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMethod {
    /// Oriented-energy map followed by an FFT.
    #[default]
    Fast,
    /// Adaptive quadrature of the direct momentum integral.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoverWeights {
    pub w_plus: f64,
    pub w_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalDistribution {
    pub grid_t: Grid1D,
    pub total: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub interference: Vec<f64>,
    pub weights: MoverWeights,
    /// `|∫ total dT - ‖ψ‖²| / ‖ψ‖²`.
    pub norm_defect: f64,
}

impl ArrivalDistribution {
    pub fn density(&self, component: Component) -> &[f64] {
        match component {
            Component::Total => &self.total,
            Component::Plus => &self.plus,
            Component::Minus => &self.minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// `ψ̃₊ = ψ̃ 1_{p>0}` and `ψ̃₋ = ψ̃ 1_{p<0}`; a `p = 0` sample goes to
/// neither.
pub fn split_movers(psi_tilde: &WaveFunction) -> Result<(WaveFunction, WaveFunction)> {
    psi_tilde.expect_rep(Representation::Momentum)?;
    check_low_mass(psi_tilde, &OrientedEnergyOptions::default())?;
    let g = psi_tilde.grid();
    let zero =
        psi_tilde.values().iter().zip(g.points()).filter(|(_, p)| *p == 0.0).map(|(v, _)| v.norm_sqr()).sum::<f64>()
            * g.step();
    if zero > ZERO_SAMPLE_LIMIT {
        return Err(Error::LowMomentumMass { mass: zero, threshold: ZERO_SAMPLE_LIMIT });
    }
    let pick = |keep: fn(f64) -> bool| {
        psi_tilde.with_values(
            psi_tilde
                .values()
                .iter()
                .zip(g.points())
                .map(|(v, p)| if keep(p) { *v } else { Complex64::new(0.0, 0.0) })
                .collect(),
        )
    };
    Ok((pick(|p| p > 0.0), pick(|p| p < 0.0)))
}

fn weights_of(psi_tilde: &WaveFunction) -> MoverWeights {
    let g = psi_tilde.grid();
    let part = |keep: fn(f64) -> bool| {
        let d: Vec<f64> =
            psi_tilde.values().iter().zip(g.points()).map(|(v, p)| if keep(p) { v.norm_sqr() } else { 0.0 }).collect();
        pairwise(&d) * g.step()
    };
    MoverWeights { w_plus: part(|p| p > 0.0), w_minus: part(|p| p < 0.0) }
}

/// Momentum range holding the samples above `rel` of the peak amplitude,
/// widened by two steps.
fn support(psi_tilde: &WaveFunction, rel: f64) -> Option<(f64, f64)> {
    let g = psi_tilde.grid();
    let peak = psi_tilde.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return None;
    }
    let mut it = psi_tilde.values().iter().zip(g.points()).filter(|(v, _)| v.norm() > rel * peak).map(|(_, p)| p);
    let first = it.next()?;
    let last = it.last().unwrap_or(first);
    Some((first - 2.0 * g.step(), last + 2.0 * g.step()))
}

/// Direct evaluation of
/// `φ(T) = (2πħ)^{-1/2} ∫ ψ̃(p) √(|p|/m) exp(-i sgn(p) p² T / 2mħ) dp`
/// over `|p| ≥ p_min` by adaptive Gauss–Kronrod quadrature at every `T`.
/// Off-grid values of `ψ̃` come from its band-limited interpolant.
pub fn arrival_amplitude_quadrature(psi_tilde: &WaveFunction, grid_t: &Grid1D) -> Result<WaveFunction> {
    psi_tilde.expect_rep(Representation::Momentum)?;
    let opts = OrientedEnergyOptions::default();
    check_low_mass(psi_tilde, &opts)?;
    let prm = *psi_tilde.params();
    let (hbar, m) = (prm.hbar(), prm.mass());
    let Some((lo, hi)) = support(psi_tilde, 1e-15) else {
        return Ok(WaveFunction::zeros(*grid_t, Representation::ArrivalTime, prm));
    };
    let p_min = opts.p_min(psi_tilde.grid());
    let mut ranges = Vec::new();
    if hi > p_min {
        ranges.push((lo.max(p_min), hi));
    }
    if lo < -p_min {
        ranges.push((lo, hi.min(-p_min)));
    }
    let bl = BandLimited::new(psi_tilde.values(), psi_tilde.grid(), hbar, KernelSign::Minus, None);
    let amp = |p: f64| bl.eval(p) * (p.abs() / m).sqrt();
    // Scale for the error test: ∫ |ψ̃| √(|p|/m) dp.
    let l1: f64 = {
        let g = psi_tilde.grid();
        let d: Vec<f64> = psi_tilde
            .values()
            .iter()
            .zip(g.points())
            .map(|(v, p)| if p.abs() >= p_min { v.norm() * (p.abs() / m).sqrt() } else { 0.0 })
            .collect();
        pairwise(&d) * g.step()
    };
    let quad = QuadOptions { abs_tol: 1e-3 * ORACLE_REL_TOL * l1, rel_tol: 1e-12, max_intervals: 2000 };
    let pref = 1.0 / (2.0 * std::f64::consts::PI * hbar).sqrt();
    let sign = match ARRIVAL_KERNEL {
        KernelSign::Minus => -1.0,
        KernelSign::Plus => 1.0,
    };
    let times: Vec<f64> = grid_t.points().collect();
    let chunks: Vec<Result<Vec<Complex64>>> = times
        .par_chunks(64)
        .map(|chunk| {
            // Bisection from fixed ranges reuses nodes across arrival times.
            let cache: RefCell<HashMap<u64, Complex64>> = RefCell::new(HashMap::new());
            let mut out = Vec::with_capacity(chunk.len());
            for &t in chunk {
                let mut total = Complex64::new(0.0, 0.0);
                let mut err = 0.0;
                for &(a, b) in &ranges {
                    let f = |p: f64| {
                        let c = *cache.borrow_mut().entry(p.to_bits()).or_insert_with(|| amp(p));
                        let s = oriented_energy(p, m);
                        c * Complex64::from_polar(1.0, sign * s * t / hbar)
                    };
                    let r = integrate_complex(f, a, b, &quad);
                    total += r.value;
                    err += r.error;
                }
                let rel_error = if l1 > 0.0 { err / l1 } else { 0.0 };
                if rel_error > ORACLE_REL_TOL {
                    return Err(Error::QuadratureNonConvergence { at: t, rel_error });
                }
                out.push(total * pref);
            }
            Ok(out)
        })
        .collect();
    let mut values = Vec::with_capacity(grid_t.count());
    for c in chunks {
        values.extend(c?);
    }
    Ok(WaveFunction::from_parts(*grid_t, values, Representation::ArrivalTime, prm))
}

/// Arrival-time window padded symmetrically around `grid_t` by a factor `k`.
fn padded(grid_t: &Grid1D, k: usize) -> Result<(Grid1D, usize)> {
    let n = grid_t.count();
    let offset = (k - 1) * n / 2;
    let big = Grid1D::new(grid_t.origin() - offset as f64 * grid_t.step(), grid_t.step(), k * n)?;
    Ok((big, offset))
}

fn edge_decayed(values: &[Complex64]) -> bool {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return true;
    }
    let n = values.len();
    let edge = (n / 32).max(1);
    values[..edge].iter().chain(&values[n - edge..]).all(|v| v.norm() <= PAD_DECAY * peak)
}

/// Oriented-energy amplitudes split by the sign of `s`, on the
/// oriented-energy grid conjugate to `big_t`.
fn split_in_s(phi_s: &WaveFunction) -> (WaveFunction, WaveFunction) {
    let g = phi_s.grid();
    let part = |keep: fn(f64) -> bool| {
        phi_s.with_values(
            phi_s
                .values()
                .iter()
                .zip(g.points())
                .map(|(v, s)| if keep(s) { *v } else { Complex64::new(0.0, 0.0) })
                .collect(),
        )
    };
    (part(|s| s > 0.0), part(|s| s < 0.0))
}

/// `φ(T) = (2πħ)^{-1/2} Σ_j φ̃(s_j) e^{∓i s_j T/ħ} Δs` at every `T` of
/// `grid_t`, restricted to the samples accepted by `keep`.
fn direct_sum(phi_s: &WaveFunction, grid_t: &Grid1D, keep: fn(f64) -> bool) -> Vec<Complex64> {
    let hbar = phi_s.params().hbar();
    let g = phi_s.grid();
    let sign = match ARRIVAL_KERNEL {
        KernelSign::Minus => -1.0,
        KernelSign::Plus => 1.0,
    };
    let pref = g.step() / (2.0 * std::f64::consts::PI * hbar).sqrt();
    let terms: Vec<(f64, Complex64)> = phi_s
        .values()
        .iter()
        .zip(g.points())
        .filter(|(v, s)| keep(*s) && v.norm() > 0.0)
        .map(|(v, s)| (s, *v))
        .collect();
    let times: Vec<f64> = grid_t.points().collect();
    times
        .par_iter()
        .map(|&t| {
            let d: Vec<Complex64> =
                terms.iter().map(|(s, v)| v * Complex64::from_polar(1.0, sign * s * t / hbar)).collect();
            crate::sum::pairwise_complex(&d) * pref
        })
        .collect()
}

/// Mover amplitudes `(φ₊, φ₋)` on `grid_t` by the FFT path, zero padding the
/// time window until the padded amplitude has decayed at its edges.
fn fast_components(
    psi_tilde: &WaveFunction,
    grid_t: &Grid1D,
    prm: PhysicalParams,
) -> Result<(WaveFunction, WaveFunction, TransformReport)> {
    let hbar = prm.hbar();
    let s_half = std::f64::consts::PI * hbar / grid_t.step();
    let s_top =
        support(psi_tilde, BAND_REL).map_or(0.0, |(lo, hi)| oriented_energy(lo.abs().max(hi.abs()), prm.mass()));
    if s_top >= s_half {
        return Err(Error::GridTooSmall(format!(
            "oriented energies up to {s_top:.3} exceed the band {s_half:.3} of the arrival-time step"
        )));
    }
    let mut k = 1;
    loop {
        let (big, offset) = padded(grid_t, k)?;
        let s_grid = oriented_energy_grid_for(&big, hbar)?;
        let (phi_s, report) = to_oriented_energy_on(psi_tilde, &s_grid, &OrientedEnergyOptions::default())?;
        let (sp, sm) = split_in_s(&phi_s);
        let ap = to_arrival_time_on(&sp, big.origin())?;
        let am = to_arrival_time_on(&sm, big.origin())?;
        let sum: Vec<Complex64> = ap.values().iter().zip(am.values()).map(|(a, b)| a + b).collect();
        if edge_decayed(&sum) || k >= MAX_PADDING {
            let n = grid_t.count();
            let crop = |w: &WaveFunction| {
                WaveFunction::from_parts(
                    *grid_t,
                    w.values()[offset..offset + n].to_vec(),
                    Representation::ArrivalTime,
                    prm,
                )
            };
            // Norm over the padded window, which holds the whole content.
            let full = pairwise(&sum.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>()) * grid_t.step();
            let opts = OrientedEnergyOptions::default();
            let discarded = low_momentum_mass(psi_tilde, opts.p_min(psi_tilde.grid()));
            let report = TransformReport::new(report.norm_in, full, discarded);
            return Ok((crop(&ap), crop(&am), report));
        }
        k *= 2;
    }
}

/// Arrival amplitude by the oriented-energy map and an FFT. The report
/// compares `‖ψ̃‖²` with the norm of `φ` over the padded time window.
pub fn arrival_amplitude_fast(psi_tilde: &WaveFunction, grid_t: &Grid1D) -> Result<(WaveFunction, TransformReport)> {
    psi_tilde.expect_rep(Representation::Momentum)?;
    let prm = *psi_tilde.params();
    if psi_tilde.values().iter().all(|v| v.norm() == 0.0) {
        return Ok((
            WaveFunction::zeros(*grid_t, Representation::ArrivalTime, prm),
            TransformReport::new(0.0, 0.0, 0.0),
        ));
    }
    let (p, m, report) = fast_components(psi_tilde, grid_t, prm)?;
    Ok((p.add(&m)?, report))
}

/// Momentum amplitude of `psi`, or `None` for oriented-energy input.
fn momentum_of(psi: &WaveFunction) -> Result<Option<WaveFunction>> {
    match psi.rep() {
        Representation::Position => Ok(Some(to_momentum(psi)?)),
        Representation::Momentum => Ok(Some(psi.clone())),
        Representation::OrientedEnergy | Representation::ArrivalTime => Ok(None),
    }
}

pub fn arrival_distribution(psi: &WaveFunction, grid_t: &Grid1D) -> Result<ArrivalDistribution> {
    arrival_distribution_with(psi, grid_t, ArrivalMethod::Fast)
}

/// Arrival-time density of `psi` (any representation) with its mover
/// components. The oracle method needs position or momentum input.
pub fn arrival_distribution_with(
    psi: &WaveFunction,
    grid_t: &Grid1D,
    method: ArrivalMethod,
) -> Result<ArrivalDistribution> {
    let prm = *psi.params();
    let norm = norm_squared(psi);
    let (phi_p, phi_m, weights) = match (momentum_of(psi)?, method) {
        (Some(tilde), ArrivalMethod::Fast) => {
            check_low_mass(&tilde, &OrientedEnergyOptions::default())?;
            let (a, b, _) = fast_components(&tilde, grid_t, prm)?;
            (a, b, weights_of(&tilde))
        }
        (Some(tilde), ArrivalMethod::Oracle) => {
            let (tp, tm) = split_movers(&tilde)?;
            (arrival_amplitude_quadrature(&tp, grid_t)?, arrival_amplitude_quadrature(&tm, grid_t)?, weights_of(&tilde))
        }
        (None, ArrivalMethod::Oracle) => {
            return Err(Error::RepMismatch { expected: Representation::Momentum, found: psi.rep() })
        }
        (None, ArrivalMethod::Fast) => {
            let phi_s = if psi.rep() == Representation::ArrivalTime {
                let origin = -((psi.grid().count() / 2) as f64) * psi.grid().conjugate_step(prm.hbar());
                from_arrival_time_on(psi, origin)?
            } else {
                psi.clone()
            };
            let g = phi_s.grid();
            let part = |keep: fn(f64) -> bool| {
                let d: Vec<f64> = phi_s
                    .values()
                    .iter()
                    .zip(g.points())
                    .map(|(v, s)| if keep(s) { v.norm_sqr() } else { 0.0 })
                    .collect();
                pairwise(&d) * g.step()
            };
            let weights = MoverWeights { w_plus: part(|s| s > 0.0), w_minus: part(|s| s < 0.0) };
            let wrap = |v| WaveFunction::from_parts(*grid_t, v, Representation::ArrivalTime, prm);
            (wrap(direct_sum(&phi_s, grid_t, |s| s > 0.0)), wrap(direct_sum(&phi_s, grid_t, |s| s < 0.0)), weights)
        }
    };
    let plus: Vec<f64> = phi_p.values().iter().map(|v| v.norm_sqr()).collect();
    let minus: Vec<f64> = phi_m.values().iter().map(|v| v.norm_sqr()).collect();
    let interference: Vec<f64> =
        phi_p.values().iter().zip(phi_m.values()).map(|(a, b)| 2.0 * (a * b.conj()).re).collect();
    let total: Vec<f64> = phi_p.values().iter().zip(phi_m.values()).map(|(a, b)| (a + b).norm_sqr()).collect();
    let integral = pairwise(&total) * grid_t.step();
    let scale = if norm > 0.0 { norm } else { 1.0 };
    Ok(ArrivalDistribution {
        grid_t: *grid_t,
        total,
        plus,
        minus,
        interference,
        weights,
        norm_defect: (integral - norm).abs() / scale,
    })
}

/// `P(T ∈ [a, b])` for one component, by the trapezoidal rule with linear
/// interpolation at the interval ends.
pub fn probability_in_interval(dist: &ArrivalDistribution, a: f64, b: f64, component: Component) -> Result<f64> {
    let g = &dist.grid_t;
    if !(a < b) || a < g.origin() || b > g.last() {
        return Err(Error::IntervalOutOfRange { a, b });
    }
    let d = dist.density(component);
    let at = |t: f64| {
        let f = g.locate(t);
        let i = (f.floor() as usize).min(g.count() - 2);
        let w = f - i as f64;
        d[i] * (1.0 - w) + d[i + 1] * w
    };
    let ia = g.locate(a).ceil() as usize;
    let ib = (g.locate(b).floor() as usize).min(g.count() - 1);
    if ia > ib {
        return Ok(0.5 * (at(a) + at(b)) * (b - a));
    }
    let inner = trapezoid(&d[ia..=ib], g.step());
    let left = 0.5 * (at(a) + d[ia]) * (g.point(ia) - a);
    let right = 0.5 * (d[ib] + at(b)) * (b - g.point(ib));
    Ok(inner + left + right)
}

/// Mean and variance of the normalized component density.
pub fn arrival_moments(dist: &ArrivalDistribution, component: Component) -> Result<Moments> {
    let d = dist.density(component);
    let g = &dist.grid_t;
    let w = pairwise(d) * g.step();
    if !(w > MIN_COMPONENT_WEIGHT) {
        return Err(Error::ZeroWeightComponent(w));
    }
    let first: Vec<f64> = d.iter().zip(g.points()).map(|(v, t)| v * t).collect();
    let mean = pairwise(&first) * g.step() / w;
    let second: Vec<f64> = d.iter().zip(g.points()).map(|(v, t)| v * (t - mean) * (t - mean)).collect();
    Ok(Moments { mean, variance: pairwise(&second) * g.step() / w })
}

/// Default arrival-time grid: centered at `-m x̄ / p̄` with span eight times
/// `m (|x̄| σ_p / p̄² + σ_x / p̄)`, where `p̄` and `σ_p` refer to `|p|`.
pub fn default_time_grid(psi: &WaveFunction, count: usize) -> Result<Grid1D> {
    psi.expect_rep(Representation::Position)?;
    let m = psi.params().mass();
    let tilde = to_momentum(psi)?;
    let moments = |w: &WaveFunction, f: fn(f64) -> f64| {
        let d: Vec<f64> = w.values().iter().map(|v| v.norm_sqr()).collect();
        let total = pairwise(&d);
        let first: Vec<f64> = d.iter().zip(w.grid().points()).map(|(v, x)| v * f(x)).collect();
        let mean = pairwise(&first) / total;
        let second: Vec<f64> = d.iter().zip(w.grid().points()).map(|(v, x)| v * (f(x) - mean).powi(2)).collect();
        (mean, (pairwise(&second) / total).sqrt())
    };
    let (xbar, sx) = moments(psi, |x| x);
    let (pbar, sp) = moments(&tilde, f64::abs);
    if !(pbar > 0.0) {
        return Err(Error::LowMomentumMass { mass: 1.0, threshold: 0.0 });
    }
    let spread = m * (xbar.abs() * sp / (pbar * pbar) + sx / pbar);
    // T = -m x / p has a slow tail away from zero.
    let center = -m * xbar / pbar;
    let (below, above) = if center >= 0.0 { (4.0, 12.0) } else { (12.0, 4.0) };
    Grid1D::new(center - below * spread, (below + above) * spread / count as f64, count)
}

/// Two positive-momentum Gaussians in momentum space, both centered at
/// `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackflowSpec {
    pub p1: f64,
    pub p2: f64,
    pub a1: f64,
    pub a2: f64,
    pub rel_phase: f64,
    pub sigma: f64,
}

impl Default for BackflowSpec {
    fn default() -> Self {
        Self { p1: 1.0, p2: 3.0, a1: 1.0, a2: 1.6, rel_phase: std::f64::consts::PI, sigma: 0.1 }
    }
}

/// Probability below which the negative-momentum content counts as absent.
pub const NEGATIVE_MOMENTUM_LIMIT: f64 = 1e-10;

/// `ψ̃(p) ∝ a1 g(p - p1) + a2 e^{iφ} g(p - p2)` with Gaussian `g` of
/// standard deviation `σ` in `|ψ̃|²`, on the momentum grid conjugate to the
/// position grid `grid`.
pub fn make_backflow_packet(grid: Grid1D, params: PhysicalParams, spec: &BackflowSpec) -> Result<WaveFunction> {
    let BackflowSpec { p1, p2, a1, a2, rel_phase, sigma } = *spec;
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveWidth(sigma));
    }
    if !(p1 > 4.0 * sigma && p2 > 4.0 * sigma) {
        return Err(Error::InvalidParameter(format!("momenta {p1}, {p2} must exceed 4σ = {}", 4.0 * sigma)));
    }
    let hbar = params.hbar();
    let dp = grid.conjugate_step(hbar);
    let p_grid = Grid1D::centered(dp, grid.count())?;
    let g = |p: f64, c: f64| (-(p - c) * (p - c) / (4.0 * sigma * sigma)).exp();
    let phase = Complex64::from_polar(a2, rel_phase);
    let tilde = WaveFunction::from_fn(p_grid, Representation::Momentum, params, |p| a1 * g(p, p1) + phase * g(p, p2))?;
    let tilde = tilde.normalized()?;
    tilde.check_decay()?;
    let leak = negative_momentum_mass(&tilde);
    if leak > NEGATIVE_MOMENTUM_LIMIT {
        return Err(Error::NegativeMomentumLeak(leak));
    }
    to_position_on(&tilde, grid.origin())
}

/// `∫_{p<0} |ψ̃|² dp`.
pub fn negative_momentum_mass(psi_tilde: &WaveFunction) -> f64 {
    weights_of(psi_tilde).w_minus
}

/// Probability current sampled over a rectangle of `(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackflowScan {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    /// Row-major: `current[it * xs.len() + ix]`.
    pub current: Vec<f64>,
    pub min_current: f64,
    pub argmin_x: f64,
    pub argmin_t: f64,
}

/// Evolves `psi` freely and samples the current at the grid points inside
/// `[x_lo, x_hi]` for each time.
pub fn backflow_scan(psi: &WaveFunction, times: &[f64], x_lo: f64, x_hi: f64) -> Result<BackflowScan> {
    psi.expect_rep(Representation::Position)?;
    let tilde = to_momentum(psi)?;
    let idx: Vec<usize> =
        psi.grid().points().enumerate().filter(|(_, x)| *x >= x_lo && *x <= x_hi).map(|(i, _)| i).collect();
    if idx.is_empty() {
        return Err(Error::IntervalOutOfRange { a: x_lo, b: x_hi });
    }
    let xs: Vec<f64> = idx.iter().map(|&i| psi.grid().point(i)).collect();
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| -> Result<Vec<f64>> {
            let evolved = to_position_on(&evolve_free(&tilde, t)?, psi.grid().origin())?;
            let j = probability_current(&evolved)?;
            Ok(idx.iter().map(|&i| j.values[i]).collect())
        })
        .collect::<Result<_>>()?;
    let current: Vec<f64> = rows.into_iter().flatten().collect();
    let (k, min_current) =
        current
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    Ok(BackflowScan {
        argmin_x: xs[k % xs.len()],
        argmin_t: times[k / xs.len()],
        times: times.to_vec(),
        xs,
        current,
        min_current,
    })
}

/// `momentum_of_oriented_energy` re-exported for callers working in `s`.
pub fn momentum_at(s: f64, mass: f64) -> f64 {
    momentum_of_oriented_energy(s, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, inner_product};

    fn nat() -> PhysicalParams {
        PhysicalParams::natural()
    }

    fn x_grid() -> Grid1D {
        Grid1D::spanning(-200.0, 200.0, 4096).unwrap()
    }

    fn packet(x0: f64, p0: f64, sp: f64) -> WaveFunction {
        gaussian_packet(x_grid(), nat(), x0, p0, sp).unwrap()
    }

    fn reflect(psi: &WaveFunction) -> WaveFunction {
        // x -> -x on a grid symmetric about the origin.
        let n = psi.grid().count();
        let g = Grid1D::new(-psi.grid().last(), psi.grid().step(), n).unwrap();
        let v: Vec<Complex64> = psi.values().iter().rev().copied().collect();
        WaveFunction::new(g, v, Representation::Position, *psi.params()).unwrap()
    }

    #[test]
    fn classical_functions() {
        let c = ClassicalArrival { mass: 1.0 };
        assert_eq!(c.t_of_xp(-50.0, 2.0), 25.0);
        assert_eq!(c.oriented(50.0, -2.0), -25.0);
        for (x, p) in [(1.0, -3.0), (-2.0, 0.5), (4.0, 7.0)] {
            assert_eq!(c.oriented(x, p), p.signum() * c.t_of_xp(x, p));
        }
    }

    #[test]
    fn split_right_mover_and_even_state() {
        let tilde = to_momentum(&packet(0.0, 2.0, 0.2)).unwrap();
        let (p, m) = split_movers(&tilde).unwrap();
        assert!(norm_squared(&m) <= 1e-12);
        assert_eq!(inner_product(&p, &m).unwrap(), Complex64::new(0.0, 0.0));
        let even = packet(-30.0, 2.0, 0.2).add(&packet(-30.0, -2.0, 0.2)).unwrap().normalized().unwrap();
        let w = weights_of(&to_momentum(&even).unwrap());
        assert!((w.w_plus - w.w_minus).abs() < 1e-10);
    }

    #[test]
    fn split_rejects_slow_packets() {
        let tilde = to_momentum(&packet(0.0, 0.0, 0.2)).unwrap();
        assert!(matches!(split_movers(&tilde), Err(Error::LowMomentumMass { .. })));
        assert!(matches!(split_movers(&packet(0.0, 2.0, 0.2)), Err(Error::RepMismatch { .. })));
    }

    #[test]
    fn reference_packet_fast_and_oracle() {
        let psi = packet(-50.0, 2.0, 0.2);
        let gt = default_time_grid(&psi, 1024).unwrap();
        assert!((gt.origin() - 10.0).abs() < 1e-9 && (gt.last() + gt.step() - 70.0).abs() < 1e-9);
        let on_default = arrival_distribution(&psi, &gt).unwrap();
        assert!(on_default.norm_defect < 1e-6, "{}", on_default.norm_defect);
        let tilde = to_momentum(&psi).unwrap();
        let (fast, report) = arrival_amplitude_fast(&tilde, &gt).unwrap();
        assert!(report.unitarity_defect < 1e-5, "{report:?}");
        let oracle = arrival_amplitude_quadrature(&tilde, &gt).unwrap();
        let peak = oracle.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = fast.values().iter().zip(oracle.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-4 * peak, "relative L∞ {}", diff / peak);
        let wide = Grid1D::new(0.0, 120.0 / 4096.0, 4096).unwrap();
        let dist = arrival_distribution(&psi, &wide).unwrap();
        assert!(dist.norm_defect < 1e-6, "{}", dist.norm_defect);
        let gt = wide;
        let mom = arrival_moments(&dist, Component::Plus).unwrap();
        assert!((mom.mean - 25.0).abs() < 0.5, "mean {}", mom.mean);
        assert!((probability_in_interval(&dist, gt.origin(), gt.last(), Component::Total).unwrap() - 1.0).abs() < 1e-6);
        assert!(probability_in_interval(&dist, 0.0, 12.0, Component::Total).unwrap() < 1e-6);
    }

    #[test]
    fn zero_input_gives_zero() {
        let z = WaveFunction::zeros(
            Grid1D::centered(x_grid().conjugate_step(1.0), 4096).unwrap(),
            Representation::Momentum,
            nat(),
        );
        let gt = Grid1D::new(0.0, 0.1, 64).unwrap();
        let (phi, _) = arrival_amplitude_fast(&z, &gt).unwrap();
        assert!(phi.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn mirror_reflects_density() {
        let psi = packet(-50.0, 2.0, 0.2);
        let gt = Grid1D::new(-40.0, 80.0 / 1024.0, 1025).unwrap();
        let a = arrival_distribution(&psi, &gt).unwrap();
        let b = arrival_distribution(&reflect(&psi), &gt).unwrap();
        let n = gt.count();
        for i in 0..n {
            assert!((a.total[i] - b.total[n - 1 - i]).abs() < 1e-8);
        }
        let ma = arrival_moments(&a, Component::Total).unwrap();
        let mb = arrival_moments(&b, Component::Total).unwrap();
        assert!((ma.mean + mb.mean).abs() < 1e-8);
        let pa = probability_in_interval(&a, 20.0, 30.0, Component::Plus).unwrap();
        let pb = probability_in_interval(&b, -30.0, -20.0, Component::Minus).unwrap();
        assert!((pa - pb).abs() < 1e-8);
    }

    #[test]
    fn mixed_beam_decomposition() {
        let psi = packet(-30.0, 2.0, 0.2).add(&packet(-30.0, -2.0, 0.2)).unwrap().normalized().unwrap();
        let gt = Grid1D::new(0.0, 120.0 / 4096.0, 4096).unwrap();
        let d = arrival_distribution(&psi, &gt).unwrap();
        assert!((d.weights.w_plus - 0.5).abs() < 1e-6 && (d.weights.w_minus - 0.5).abs() < 1e-6);
        for i in 0..gt.count() {
            assert!((d.total[i] - d.plus[i] - d.minus[i] - d.interference[i]).abs() < 1e-12);
        }
        let peak = d.total.iter().copied().fold(0.0, f64::max);
        assert!(d.interference.iter().map(|v| v.abs()).fold(0.0, f64::max) > 0.01 * peak);
        assert!(trapezoid(&d.interference, gt.step()).abs() < 1e-8);
        assert!((pairwise(&d.plus) * gt.step() - d.weights.w_plus).abs() < 1e-6);
        assert!(d.norm_defect < 1e-6);
    }

    #[test]
    fn evolution_translates_movers() {
        // Right-movers reach the plane earlier after evolving forward.
        let psi = packet(-50.0, 2.0, 0.2);
        let gt = Grid1D::new(0.0, 200.0 / 4096.0, 4096).unwrap();
        let t = 5.0;
        let moved = to_position_on(&evolve_free(&to_momentum(&psi).unwrap(), t).unwrap(), -200.0).unwrap();
        let a = arrival_moments(&arrival_distribution(&psi, &gt).unwrap(), Component::Plus).unwrap();
        let b = arrival_moments(&arrival_distribution(&moved, &gt).unwrap(), Component::Plus).unwrap();
        assert!((a.mean - b.mean - t).abs() < 1e-6, "{} {}", a.mean, b.mean);
        assert!((a.variance - b.variance).abs() < 1e-6);
    }

    #[test]
    fn input_in_other_representations() {
        let psi = packet(-50.0, 2.0, 0.2);
        let gt = Grid1D::new(10.0, 30.0 / 512.0, 512).unwrap();
        let a = arrival_distribution(&psi, &gt).unwrap();
        let (phi_s, _) = crate::transforms::to_oriented_energy(&to_momentum(&psi).unwrap()).unwrap();
        let b = arrival_distribution(&phi_s, &gt).unwrap();
        let peak = a.total.iter().copied().fold(0.0, f64::max);
        for (u, v) in a.total.iter().zip(&b.total) {
            assert!((u - v).abs() < 1e-4 * peak);
        }
        assert!(matches!(
            arrival_distribution_with(&phi_s, &gt, ArrivalMethod::Oracle),
            Err(Error::RepMismatch { .. })
        ));
    }

    #[test]
    fn interval_and_moment_errors() {
        let psi = packet(-50.0, 2.0, 0.2);
        let gt = default_time_grid(&psi, 256).unwrap();
        let d = arrival_distribution(&psi, &gt).unwrap();
        assert!(matches!(
            probability_in_interval(&d, 0.0, 20.0, Component::Total),
            Err(Error::IntervalOutOfRange { .. })
        ));
        assert!(matches!(
            probability_in_interval(&d, 20.0, 20.0, Component::Total),
            Err(Error::IntervalOutOfRange { .. })
        ));
        assert!(matches!(arrival_moments(&d, Component::Minus), Err(Error::ZeroWeightComponent(_))));
    }

    #[test]
    fn backflow_default_and_control() {
        let grid = Grid1D::spanning(-200.0, 200.0, 4096).unwrap();
        let psi = make_backflow_packet(grid, nat(), &BackflowSpec::default()).unwrap();
        assert!(negative_momentum_mass(&to_momentum(&psi).unwrap()) <= 1e-10);
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let scan = backflow_scan(&psi, &times, -20.0, 20.0).unwrap();
        assert!(scan.min_current < 0.0, "{}", scan.min_current);
        let control = make_backflow_packet(grid, nat(), &BackflowSpec { a2: 0.0, ..Default::default() }).unwrap();
        let scan = backflow_scan(&control, &times, -20.0, 20.0).unwrap();
        assert!(scan.min_current >= -1e-12, "{}", scan.min_current);
        assert!(make_backflow_packet(grid, nat(), &BackflowSpec { p1: 0.3, ..Default::default() }).is_err());
    }
}
