// SPDX-License-Identifier: Apache-2.0

//! Unitary changes of representation.
//!
//! * position ↔ momentum: `ψ̃(p) = (2πħ)^{-1/2} ∫ ψ(x) e^{-ipx/ħ} dx`, with the
//!   momentum operator `(ħ/i) d/dx`;
//! * momentum ↔ oriented energy: `s = sgn(p) p²/2m` and
//!   `φ̃(s) = ψ̃(sgn(s)√(2m|s|)) · (m / 2|s|)^{1/4}`;
//! * oriented energy ↔ arrival time: the spectral amplitude of
//!   `T̂ = (ħ/i) d/ds`, i.e. the overlap with its eigenfunctions `e^{isT/ħ}`:
//!   `φ(T) = (2πħ)^{-1/2} ∫ φ̃(s) e^{-isT/ħ} ds`.
//!
//! Fourier steps use [`spectral::continuum_dft`] with the origin phases
//! applied, so they discretize the continuum kernels rather than the index
//! space DFT.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{norm_squared, Grid1D, Representation, WaveFunction};
use crate::interp::amp_phase_cubic;
use crate::spectral::{continuum_dft, KernelSign};

/// Kernel sign of the arrival-time transform (see the module docs).
pub const ARRIVAL_KERNEL: KernelSign = KernelSign::Minus;

/// Quality numbers for a change of variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformReport {
    pub norm_in: f64,
    pub norm_out: f64,
    /// `|norm_out - norm_in| / norm_in`.
    pub unitarity_defect: f64,
    /// Part of the defect not explained by the mass removed near `p = 0`.
    pub interpolation_residual: f64,
}

impl TransformReport {
    pub(crate) fn new(norm_in: f64, norm_out: f64, discarded: f64) -> Self {
        let scale = if norm_in > 0.0 { norm_in } else { 1.0 };
        Self {
            norm_in,
            norm_out,
            unitarity_defect: (norm_out - norm_in).abs() / scale,
            interpolation_residual: (norm_out - (norm_in - discarded)).abs() / scale,
        }
    }
}

fn centered_origin(grid: &Grid1D, hbar: f64) -> f64 {
    -((grid.count() / 2) as f64) * grid.conjugate_step(hbar)
}

pub fn to_momentum(psi: &WaveFunction) -> Result<WaveFunction> {
    psi.expect_rep(Representation::Position)?;
    let hbar = psi.params().hbar();
    let origin = centered_origin(psi.grid(), hbar);
    let (grid, values) = continuum_dft(psi.values(), psi.grid(), origin, KernelSign::Minus, hbar);
    Ok(WaveFunction::from_parts(grid, values, Representation::Momentum, *psi.params()))
}

/// Inverse of [`to_momentum`] onto the centered position grid.
pub fn to_position(psi_tilde: &WaveFunction) -> Result<WaveFunction> {
    let origin = centered_origin(psi_tilde.grid(), psi_tilde.params().hbar());
    to_position_on(psi_tilde, origin)
}

/// Inverse of [`to_momentum`] onto the position grid starting at `x_origin`.
pub fn to_position_on(psi_tilde: &WaveFunction, x_origin: f64) -> Result<WaveFunction> {
    psi_tilde.expect_rep(Representation::Momentum)?;
    let hbar = psi_tilde.params().hbar();
    let (grid, values) = continuum_dft(psi_tilde.values(), psi_tilde.grid(), x_origin, KernelSign::Plus, hbar);
    Ok(WaveFunction::from_parts(grid, values, Representation::Position, *psi_tilde.params()))
}

/// Free evolution `ψ̃(p) ↦ ψ̃(p) e^{-ip²t/(2mħ)}`.
pub fn evolve_free(psi_tilde: &WaveFunction, t: f64) -> Result<WaveFunction> {
    psi_tilde.expect_rep(Representation::Momentum)?;
    let prm = psi_tilde.params();
    let c = -t / (2.0 * prm.mass() * prm.hbar());
    let values = psi_tilde
        .values()
        .iter()
        .zip(psi_tilde.grid().points())
        .map(|(v, p)| v * Complex64::from_polar(1.0, c * p * p))
        .collect();
    Ok(psi_tilde.with_values(values))
}

/// Controls the momentum ↔ oriented-energy map near `p = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedEnergyOptions {
    /// `p_min = p_min_steps · Δp`.
    pub p_min_steps: f64,
    /// Largest allowed probability in `|p| < p_min`.
    pub low_mass_threshold: f64,
}

impl Default for OrientedEnergyOptions {
    fn default() -> Self {
        Self { p_min_steps: 4.0, low_mass_threshold: 1e-6 }
    }
}

impl OrientedEnergyOptions {
    pub fn p_min(&self, p_grid: &Grid1D) -> f64 {
        self.p_min_steps * p_grid.step()
    }
}

#[inline]
pub fn oriented_energy(p: f64, mass: f64) -> f64 {
    p.signum() * p * p / (2.0 * mass)
}

#[inline]
pub fn momentum_of_oriented_energy(s: f64, mass: f64) -> f64 {
    s.signum() * (2.0 * mass * s.abs()).sqrt()
}

/// Probability carried by `|p| < p_min`.
pub fn low_momentum_mass(psi_tilde: &WaveFunction, p_min: f64) -> f64 {
    let g = psi_tilde.grid();
    let dens: Vec<f64> =
        psi_tilde.values().iter().zip(g.points()).filter(|(_, p)| p.abs() < p_min).map(|(v, _)| v.norm_sqr()).collect();
    crate::sum::pairwise(&dens) * g.step()
}

pub(crate) fn check_low_mass(psi_tilde: &WaveFunction, opts: &OrientedEnergyOptions) -> Result<f64> {
    let mass = low_momentum_mass(psi_tilde, opts.p_min(psi_tilde.grid()));
    if mass > opts.low_mass_threshold {
        return Err(Error::LowMomentumMass { mass, threshold: opts.low_mass_threshold });
    }
    Ok(mass)
}

/// Default oriented-energy grid for a momentum wave function: symmetric,
/// covering the significant momentum content, and at least as fine as the
/// momentum grid everywhere above `p_min`.
pub fn default_oriented_energy_grid(psi_tilde: &WaveFunction, opts: &OrientedEnergyOptions) -> Result<Grid1D> {
    let g = psi_tilde.grid();
    let m = psi_tilde.params().mass();
    let peak = psi_tilde.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let p_top = psi_tilde
        .values()
        .iter()
        .zip(g.points())
        .filter(|(v, _)| v.norm() > 1e-10 * peak)
        .map(|(_, p)| p.abs())
        .fold(0.0, f64::max)
        + 2.0 * g.step();
    let s_top = p_top * p_top / (2.0 * m);
    let ds = g.step() * opts.p_min(g) / m;
    let count = ((2.0 * s_top / ds).ceil() as usize).max(8).next_power_of_two();
    Grid1D::centered(ds, count)
}

/// `ψ̃ ↦ φ̃` on the default oriented-energy grid.
pub fn to_oriented_energy(psi_tilde: &WaveFunction) -> Result<(WaveFunction, TransformReport)> {
    let opts = OrientedEnergyOptions::default();
    let s_grid = default_oriented_energy_grid(psi_tilde, &opts)?;
    to_oriented_energy_on(psi_tilde, &s_grid, &opts)
}

/// `ψ̃ ↦ φ̃` sampled on `s_grid`; `φ̃` is set to zero for `|s| < s_min`.
pub fn to_oriented_energy_on(
    psi_tilde: &WaveFunction,
    s_grid: &Grid1D,
    opts: &OrientedEnergyOptions,
) -> Result<(WaveFunction, TransformReport)> {
    psi_tilde.expect_rep(Representation::Momentum)?;
    let discarded = check_low_mass(psi_tilde, opts)?;
    let m = psi_tilde.params().mass();
    let p_grid = psi_tilde.grid();
    let p_min = opts.p_min(p_grid);
    let s_min = p_min * p_min / (2.0 * m);
    let values: Vec<Complex64> = s_grid
        .points()
        .map(|s| {
            if s.abs() < s_min {
                return Complex64::new(0.0, 0.0);
            }
            let p = momentum_of_oriented_energy(s, m);
            let jac = (m / (2.0 * s.abs())).powf(0.25);
            amp_phase_cubic(psi_tilde.values(), p_grid, p) * jac
        })
        .collect();
    let phi = WaveFunction::from_parts(*s_grid, values, Representation::OrientedEnergy, *psi_tilde.params());
    let report = TransformReport::new(norm_squared(psi_tilde), norm_squared(&phi), discarded);
    Ok((phi, report))
}

/// `φ̃ ↦ ψ̃` onto `p_grid`; `ψ̃` vanishes for `|p| < p_min`.
pub fn from_oriented_energy(
    phi_tilde: &WaveFunction,
    p_grid: &Grid1D,
    opts: &OrientedEnergyOptions,
) -> Result<(WaveFunction, TransformReport)> {
    phi_tilde.expect_rep(Representation::OrientedEnergy)?;
    let m = phi_tilde.params().mass();
    let p_min = opts.p_min(p_grid);
    let values: Vec<Complex64> = p_grid
        .points()
        .map(|p| {
            if p.abs() < p_min {
                return Complex64::new(0.0, 0.0);
            }
            let s = oriented_energy(p, m);
            amp_phase_cubic(phi_tilde.values(), phi_tilde.grid(), s) * (p.abs() / m).sqrt()
        })
        .collect();
    let psi = WaveFunction::from_parts(*p_grid, values, Representation::Momentum, *phi_tilde.params());
    let report = TransformReport::new(norm_squared(phi_tilde), norm_squared(&psi), 0.0);
    Ok((psi, report))
}

/// Arrival-time amplitude on the centered conjugate grid.
pub fn to_arrival_time(phi_tilde: &WaveFunction) -> Result<WaveFunction> {
    let origin = centered_origin(phi_tilde.grid(), phi_tilde.params().hbar());
    to_arrival_time_on(phi_tilde, origin)
}

/// Arrival-time amplitude on the conjugate grid starting at `t_origin`.
pub fn to_arrival_time_on(phi_tilde: &WaveFunction, t_origin: f64) -> Result<WaveFunction> {
    phi_tilde.expect_rep(Representation::OrientedEnergy)?;
    let hbar = phi_tilde.params().hbar();
    let (grid, values) = continuum_dft(phi_tilde.values(), phi_tilde.grid(), t_origin, ARRIVAL_KERNEL, hbar);
    Ok(WaveFunction::from_parts(grid, values, Representation::ArrivalTime, *phi_tilde.params()))
}

/// Inverse of [`to_arrival_time_on`].
pub fn from_arrival_time_on(phi: &WaveFunction, s_origin: f64) -> Result<WaveFunction> {
    phi.expect_rep(Representation::ArrivalTime)?;
    let hbar = phi.params().hbar();
    let (grid, values) = continuum_dft(phi.values(), phi.grid(), s_origin, ARRIVAL_KERNEL.flipped(), hbar);
    Ok(WaveFunction::from_parts(grid, values, Representation::OrientedEnergy, *phi.params()))
}

/// Oriented-energy grid whose conjugate is exactly `grid_t`.
pub fn oriented_energy_grid_for(grid_t: &Grid1D, hbar: f64) -> Result<Grid1D> {
    Grid1D::centered(grid_t.conjugate_step(hbar), grid_t.count())
}
