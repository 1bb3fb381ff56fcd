// SPDX-License-Identifier: Apache-2.0

//! Uniform 1-D grids and wave functions sampled on them.
//!
//! A [`WaveFunction`] is a plain array of complex samples together with the
//! grid, the variable it is expressed in and the physical constants. The
//! half-density character of the state is not stored anywhere: it shows up as
//! the square-root Jacobian factors applied by the transport and
//! change-of-variable routines.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Relative amplitude below which a packet is considered to have decayed.
pub const DECAY_THRESHOLD: f64 = 1e-12;
/// Fraction of the grid on each side that must hold only decayed values.
pub const EDGE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    origin: f64,
    step: f64,
    count: usize,
}

impl Grid1D {
    pub fn new(origin: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !origin.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid needs a finite origin and a positive step (origin {origin}, step {step})"
            )));
        }
        if count < 8 {
            return Err(Error::GridTooSmall(format!("{count} points, at least 8 required")));
        }
        Ok(Self { origin, step, count })
    }

    /// `count` points covering `[lo, hi)`, the periodic convention used by
    /// the Fourier routines.
    pub fn spanning(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!("empty span [{lo}, {hi})")));
        }
        Self::new(lo, (hi - lo) / count as f64, count)
    }

    /// Grid of `count` points with the given step, symmetric about zero in
    /// the FFT sense: indices run over `-count/2 .. count/2`.
    pub fn centered(step: f64, count: usize) -> Result<Self> {
        Self::new(-((count / 2) as f64) * step, step, count)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.point(self.count - 1)
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }

    /// Same grid moved by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self { origin: self.origin + delta, ..*self }
    }

    /// Step of the grid conjugate to this one under a continuum Fourier
    /// kernel `exp(±i u v / hbar)`.
    pub fn conjugate_step(&self, hbar: f64) -> f64 {
        2.0 * std::f64::consts::PI * hbar / (self.count as f64 * self.step)
    }

    /// Grids agree when origins and steps coincide to relative 1e-12.
    pub fn same_as(&self, other: &Grid1D) -> bool {
        let scale = self.step.abs().max(other.step.abs());
        self.count == other.count
            && (self.step - other.step).abs() <= 1e-12 * scale
            && (self.origin - other.origin).abs() <= 1e-9 * scale
    }

    /// Fractional index of `x`; may be out of range.
    #[inline]
    pub fn locate(&self, x: f64) -> f64 {
        (x - self.origin) / self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    hbar: f64,
    mass: f64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite() && mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar and mass must be positive (hbar {hbar}, mass {mass})")));
        }
        Ok(Self { hbar, mass })
    }

    /// ħ = m = 1.
    pub fn natural() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::natural()
    }
}

/// The variable a wave function is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Representation {
    Position,
    Momentum,
    /// `s = sgn(p) p² / 2m`.
    OrientedEnergy,
    ArrivalTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    values: Vec<Complex64>,
    rep: Representation,
    params: PhysicalParams,
}

impl WaveFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>, rep: Representation, params: PhysicalParams) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.count()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(Self { grid, values, rep, params })
    }

    pub fn from_fn(
        grid: Grid1D,
        rep: Representation,
        params: PhysicalParams,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid, values, rep, params)
    }

    pub fn zeros(grid: Grid1D, rep: Representation, params: PhysicalParams) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.count()], rep, params }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn rep(&self) -> Representation {
        self.rep
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Same grid, representation and constants with new samples.
    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.count());
        Self { values, ..self.clone() }
    }

    pub(crate) fn from_parts(
        grid: Grid1D,
        values: Vec<Complex64>,
        rep: Representation,
        params: PhysicalParams,
    ) -> Self {
        debug_assert_eq!(values.len(), grid.count());
        Self { grid, values, rep, params }
    }

    pub fn expect_rep(&self, expected: Representation) -> Result<()> {
        if self.rep != expected {
            return Err(Error::RepMismatch { expected, found: self.rep });
        }
        Ok(())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        self.with_values(self.values.iter().map(|v| v * factor).collect())
    }

    /// `self + other`; grids and representations must match.
    pub fn add(&self, other: &WaveFunction) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect()))
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = norm_squared(self);
        if !(n > 0.0) {
            return Err(Error::InvalidParameter("cannot normalize the zero function".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn is_normalized(&self) -> bool {
        (norm_squared(self) - 1.0).abs() <= 1e-9
    }

    /// Checks that the samples in the outer [`EDGE_FRACTION`] of the grid
    /// are below `DECAY_THRESHOLD * max|ψ|`.
    pub fn check_decay(&self) -> Result<()> {
        let max = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return Ok(());
        }
        let n = self.grid.count();
        let edge = ((EDGE_FRACTION * n as f64).ceil() as usize).max(1);
        let worst = self.values[..edge].iter().chain(&self.values[n - edge..]).map(|v| v.norm()).fold(0.0, f64::max);
        if worst > DECAY_THRESHOLD * max {
            return Err(Error::GridTooSmall(format!(
                "edge amplitude {:.2e} of max {:.2e} in {:?} representation",
                worst, max, self.rep
            )));
        }
        Ok(())
    }

    fn check_compatible(&self, other: &WaveFunction) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        if self.rep != other.rep {
            return Err(Error::RepMismatch { expected: self.rep, found: other.rep });
        }
        Ok(())
    }

    /// `⟨x⟩` (or the analogous first moment in the current variable) of the
    /// normalized density.
    pub fn mean(&self) -> f64 {
        let dens: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        let total = crate::sum::pairwise(&dens);
        let first: Vec<f64> = dens.iter().zip(self.grid.points()).map(|(d, x)| d * x).collect();
        crate::sum::pairwise(&first) / total
    }
}

/// Probability current `j(x) = (ħ/m) Im(ψ̄ ψ′)` at fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl CurrentField {
    pub fn integral(&self) -> f64 {
        crate::sum::pairwise(&self.values) * self.grid.step()
    }

    pub fn min(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }
}

/// Minimum-uncertainty packet in the position representation.
///
/// `sigma_p` is the standard deviation of `|ψ̃(p)|²`; the position spread is
/// `σ_x = ħ / (2 σ_p)`. The returned samples are normalized on the grid.
pub fn gaussian_packet(
    grid: Grid1D,
    params: PhysicalParams,
    center_x: f64,
    center_p: f64,
    sigma_p: f64,
) -> Result<WaveFunction> {
    if !(sigma_p > 0.0) || !sigma_p.is_finite() {
        return Err(Error::NonPositiveWidth(sigma_p));
    }
    let hbar = params.hbar();
    let sigma_x = hbar / (2.0 * sigma_p);
    let psi = WaveFunction::from_fn(grid, Representation::Position, params, |x| {
        let dx = x - center_x;
        let envelope = (-(dx * dx) / (4.0 * sigma_x * sigma_x)).exp();
        Complex64::from_polar(envelope, center_p * dx / hbar)
    })?;
    if psi.values.iter().all(|v| v.norm() == 0.0) {
        return Err(Error::GridTooSmall("packet lies entirely outside the grid".into()));
    }
    psi.check_decay()?;
    // Momentum content must also be resolved by the grid spacing.
    let nyquist = std::f64::consts::PI * hbar / grid.step();
    if center_p.abs() + 12.0 * sigma_p > nyquist {
        return Err(Error::GridTooSmall(format!(
            "momentum content up to {:.3} exceeds the grid Nyquist momentum {:.3}",
            center_p.abs() + 12.0 * sigma_p,
            nyquist
        )));
    }
    psi.normalized()
}

/// `Σ |ψ_i|² Δ`.
pub fn norm_squared(psi: &WaveFunction) -> f64 {
    let dens: Vec<f64> = psi.values.iter().map(|v| v.norm_sqr()).collect();
    crate::sum::pairwise(&dens) * psi.grid.step()
}

/// `Σ conj(φ_i) ψ_i Δ`.
pub fn inner_product(phi: &WaveFunction, psi: &WaveFunction) -> Result<Complex64> {
    phi.check_compatible(psi)?;
    let terms: Vec<Complex64> = phi.values.iter().zip(&psi.values).map(|(a, b)| a.conj() * b).collect();
    Ok(crate::sum::pairwise_complex(&terms) * psi.grid.step())
}

/// Probability current with the derivative taken spectrally.
pub fn probability_current(psi: &WaveFunction) -> Result<CurrentField> {
    psi.expect_rep(Representation::Position)?;
    let deriv = spectral::derivative(psi.values(), psi.grid.step());
    let coef = psi.params.hbar() / psi.params.mass();
    let values = psi.values.iter().zip(&deriv).map(|(v, d)| coef * (v.conj() * d).im).collect();
    Ok(CurrentField { grid: psi.grid, values })
}
