// SPDX-License-Identifier: Apache-2.0

//! FFT-backed kernels: continuum Fourier transforms between offset grids,
//! spectral differentiation and band-limited evaluation between samples.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::grid::Grid1D;

/// Sign of the exponent in `exp(± i u w / ħ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSign {
    Minus,
    Plus,
}

impl KernelSign {
    fn value(self) -> f64 {
        match self {
            KernelSign::Minus => -1.0,
            KernelSign::Plus => 1.0,
        }
    }

    fn direction(self) -> FftDirection {
        match self {
            KernelSign::Minus => FftDirection::Forward,
            KernelSign::Plus => FftDirection::Inverse,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            KernelSign::Minus => KernelSign::Plus,
            KernelSign::Plus => KernelSign::Minus,
        }
    }
}

fn fft_in_place(buf: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(buf.len(), direction);
    fft.process(buf);
}

/// Riemann-sum discretization of
/// `F(w_k) = (2πħ)^{-1/2} ∫ f(u) exp(sign · i u w_k / ħ) du`
/// on the conjugate grid starting at `out_origin`. The pair
/// `(Minus, Plus)` is exactly unitary and mutually inverse on the sample
/// spaces.
pub fn continuum_dft(
    values: &[Complex64],
    grid: &Grid1D,
    out_origin: f64,
    sign: KernelSign,
    hbar: f64,
) -> (Grid1D, Vec<Complex64>) {
    let n = grid.count();
    assert_eq!(values.len(), n);
    let dw = grid.conjugate_step(hbar);
    let out_grid = Grid1D::new(out_origin, dw, n).expect("conjugate of a valid grid is valid");
    let s = sign.value();
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(j, v)| v * Complex64::from_polar(1.0, s * grid.point(j) * out_origin / hbar))
        .collect();
    fft_in_place(&mut buf, sign.direction());
    let pref = grid.step() / (2.0 * PI * hbar).sqrt();
    let u0 = grid.origin();
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= Complex64::from_polar(pref, s * u0 * (k as f64) * dw / hbar);
    }
    (out_grid, buf)
}

/// Angular wavenumbers of the DFT bins with the Nyquist bin set to zero so
/// the derivative matrix stays exactly anti-Hermitian.
fn wavenumbers(n: usize, step: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * step);
    (0..n)
        .map(|j| {
            if 2 * j == n {
                0.0
            } else if 2 * j < n {
                j as f64 * dk
            } else {
                (j as f64 - n as f64) * dk
            }
        })
        .collect()
}

/// Spectral derivative `d/du` of uniformly sampled data.
pub fn derivative(values: &[Complex64], step: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    fft_in_place(&mut buf, FftDirection::Forward);
    for (v, k) in buf.iter_mut().zip(wavenumbers(n, step)) {
        *v *= Complex64::new(0.0, k / n as f64);
    }
    fft_in_place(&mut buf, FftDirection::Inverse);
    buf
}

/// Largest spectral amplitude in the outer tenth of the band relative to the
/// peak amplitude; a resolution indicator.
pub fn spectral_tail(values: &[Complex64]) -> f64 {
    let n = values.len();
    let mut buf = values.to_vec();
    fft_in_place(&mut buf, FftDirection::Forward);
    let peak = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let lo = n / 2 - n / 20;
    let hi = n / 2 + n / 20;
    buf[lo..hi].iter().map(|v| v.norm()).fold(0.0, f64::max) / peak
}

/// Band-limited interpolant of uniform samples: the trigonometric sum that
/// reproduces the samples exactly and whose spectrum lives on the conjugate
/// grid. Only the contiguous band of significant spectral terms is kept.
#[derive(Debug, Clone)]
pub struct BandLimited {
    grid: Grid1D,
    hbar: f64,
    sign: f64,
    w0: f64,
    dw: f64,
    coeffs: Vec<Complex64>,
}

/// Spectral terms below this fraction of the peak are dropped.
const BAND_CUTOFF: f64 = 1e-15;
/// Exact phase restarts in the recurrence.
const RESTART: usize = 64;

impl BandLimited {
    /// `sign` is the sign of the reconstruction kernel: `Plus` for samples in
    /// position (or oriented-energy) space, `Minus` for samples in momentum
    /// space. `conj_origin` defaults to the centered conjugate grid.
    pub fn new(values: &[Complex64], grid: &Grid1D, hbar: f64, sign: KernelSign, conj_origin: Option<f64>) -> Self {
        let dw = grid.conjugate_step(hbar);
        let origin = conj_origin.unwrap_or(-((grid.count() / 2) as f64) * dw);
        let (cgrid, spec) = continuum_dft(values, grid, origin, sign.flipped(), hbar);
        let peak = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let cut = peak * BAND_CUTOFF;
        let first = spec.iter().position(|c| c.norm() > cut).unwrap_or(0);
        let last = spec.iter().rposition(|c| c.norm() > cut).map_or(0, |i| i + 1);
        let pref = cgrid.step() / (2.0 * PI * hbar).sqrt();
        let coeffs = spec[first..last.max(first)].iter().map(|c| c * pref).collect();
        Self { grid: *grid, hbar, sign: sign.value(), w0: cgrid.point(first), dw: cgrid.step(), coeffs }
    }

    /// Interpolated value at `u`; zero outside the sampled span.
    pub fn eval(&self, u: f64) -> Complex64 {
        let f = self.grid.locate(u);
        if !(f >= -1e-9 && f <= (self.grid.count() - 1) as f64 + 1e-9) {
            return Complex64::new(0.0, 0.0);
        }
        let s = self.sign * u / self.hbar;
        let rot = Complex64::from_polar(1.0, s * self.dw);
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, chunk) in self.coeffs.chunks(RESTART).enumerate() {
            let mut ph = Complex64::from_polar(1.0, s * (self.w0 + (b * RESTART) as f64 * self.dw));
            for c in chunk {
                acc += c * ph;
                ph *= rot;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuum_pair_is_inverse() {
        let grid = Grid1D::new(-3.7, 0.05, 256).unwrap();
        let vals: Vec<Complex64> =
            grid.points().map(|x| Complex64::from_polar((-(x - 1.0) * (x - 1.0)).exp(), 2.0 * x)).collect();
        let (pg, fwd) = continuum_dft(&vals, &grid, -40.0, KernelSign::Minus, 1.0);
        let (back_grid, back) = continuum_dft(&fwd, &pg, grid.origin(), KernelSign::Plus, 1.0);
        assert!((back_grid.step() - grid.step()).abs() < 1e-15);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_gaussian() {
        let grid = Grid1D::spanning(-15.0, 15.0, 512).unwrap();
        let vals: Vec<Complex64> = grid.points().map(|x| Complex64::new((-x * x / 2.0).exp(), 0.0)).collect();
        let d = derivative(&vals, grid.step());
        for (x, v) in grid.points().zip(&d) {
            assert!((v.re + x * (-x * x / 2.0).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn band_limited_reproduces_samples_and_midpoints() {
        let grid = Grid1D::spanning(-20.0, 20.0, 512).unwrap();
        let f = |x: f64| Complex64::from_polar((-x * x / 4.0).exp(), 1.5 * x);
        let vals: Vec<Complex64> = grid.points().map(f).collect();
        let bl = BandLimited::new(&vals, &grid, 1.0, KernelSign::Plus, None);
        for i in [100, 250, 255, 300] {
            let x = grid.point(i);
            assert!((bl.eval(x) - vals[i]).norm() < 1e-12);
            let mid = x + 0.37 * grid.step();
            assert!((bl.eval(mid) - f(mid)).norm() < 1e-12);
        }
        assert_eq!(bl.eval(25.0), Complex64::new(0.0, 0.0));
    }
}
